"""Porter's suffix-stripping algorithm.

This is the 1980 algorithm as originally described, without the later
"departures" some implementations add (no short-word bypass, no extra
step-2 rules). Stems produced here are pinned by the vocabulary format,
so behavior must not drift.
"""

from __future__ import annotations

from functools import lru_cache

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        # leading y is a consonant; otherwise y is a vowel iff it follows
        # a consonant
        return True if i == 0 else not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of VC sequences in the [C](VC)^m[V] decomposition."""
    m = 0
    prev_cons = None
    for i in range(len(stem)):
        cons = _is_consonant(stem, i)
        if cons and prev_cons is False:
            m += 1
        prev_cons = cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    # final sequence consonant-vowel-consonant where the last consonant is
    # not w, x, or y
    if len(word) < 3 or word[-1] in "wxy":
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
    )


def _apply_rules(word, rules):
    """Longest matching suffix decides; its condition decides the rewrite.

    Each rule is (suffix, replacement, condition) where condition takes the
    stem left after removing the suffix. Once a suffix matches, the step is
    over whether or not the condition passed.
    """
    for suffix, replacement, condition in rules:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if condition is None or condition(stem):
                return stem + replacement
            return word
    return word


def _m_gt(n):
    return lambda stem: _measure(stem) > n


_STEP2 = sorted(
    [
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"),
        ("anci", "ance"), ("izer", "ize"), ("abli", "able"), ("alli", "al"),
        ("entli", "ent"), ("eli", "e"), ("ousli", "ous"),
        ("ization", "ize"), ("ation", "ate"), ("ator", "ate"),
        ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
        ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"),
        ("biliti", "ble"),
    ],
    key=lambda r: -len(r[0]),
)

_STEP3 = sorted(
    [
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    ],
    key=lambda r: -len(r[0]),
)

# "ion" carries an extra stem condition, checked in _step4
_STEP4 = sorted(
    [
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
        "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive",
        "ize",
    ],
    key=len,
    reverse=True,
)


def _step1a(word):
    return _apply_rules(word, [
        ("sses", "ss", None),
        ("ies", "i", None),
        ("ss", "ss", None),
        ("s", "", None),
    ])


def _step1b(word):
    if word.endswith("eed"):
        stem = word[:-3]
        return stem + "ee" if _measure(stem) > 0 else word
    trimmed = None
    if word.endswith("ed"):
        stem = word[:-2]
        if _has_vowel(stem):
            trimmed = stem
    elif word.endswith("ing"):
        stem = word[:-3]
        if _has_vowel(stem):
            trimmed = stem
    if trimmed is None:
        return word
    # cleanup after a successful ed/ing removal
    for suffix, repl in (("at", "ate"), ("bl", "ble"), ("iz", "ize")):
        if trimmed.endswith(suffix):
            return trimmed[: len(trimmed) - len(suffix)] + repl
    if _ends_double_consonant(trimmed) and trimmed[-1] not in "lsz":
        return trimmed[:-1]
    if _measure(trimmed) == 1 and _ends_cvc(trimmed):
        return trimmed + "e"
    return trimmed


def _step1c(word):
    if word.endswith("y") and _has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _step4(word):
    for suffix in _STEP4:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _measure(stem) > 1 and (
                suffix != "ion" or stem.endswith(("s", "t"))
            ):
                return stem
            return word
    return word


def _step5a(word):
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
    return word


def _step5b(word):
    if (
        _measure(word) > 1
        and _ends_double_consonant(word)
        and word.endswith("l")
    ):
        return word[:-1]
    return word


@lru_cache(maxsize=131072)
def stem(token: str) -> str:
    """Stem a lowercase token; non a-z tokens pass through unchanged."""
    if not token.isascii() or not token.isalpha():
        return token
    word = _step1a(token)
    word = _step1b(word)
    word = _step1c(word)
    word = _apply_rules(word, [(s, r, _m_gt(0)) for s, r in _STEP2])
    word = _apply_rules(word, [(s, r, _m_gt(0)) for s, r in _STEP3])
    word = _step4(word)
    word = _step5a(word)
    word = _step5b(word)
    return word
