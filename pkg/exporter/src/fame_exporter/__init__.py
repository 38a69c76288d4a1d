"""Embed a JSONL corpus with a sentence encoder; write a FAME-EMB file."""

from .export import DEFAULT_MODEL, ExportJob, export_embeddings

__all__ = ["DEFAULT_MODEL", "ExportJob", "export_embeddings"]
