"""Topic-modeling and document-clustering toolkit.

Submodules are imported lazily so the command-line entry point can cap
numerical-library threads via environment variables before numpy loads.
"""

__version__ = "1.0.0"

_EXPORTS = {
    "Corpus": "corpus",
    "Document": "corpus",
    "PreprocessConfig": "corpus",
    "TokenizedDocument": "corpus",
    "Vocabulary": "corpus",
    "load_corpus": "corpus",
    "save_corpus": "corpus",
    "preprocess_text": "corpus",
    "build_vocabulary": "corpus",
    "count_vectorize": "corpus",
    "FeatureBlock": "blocks",
    "TfidfModel": "features",
    "NmfModel": "features",
    "fit_tfidf": "features",
    "transform_tfidf": "features",
    "fit_nmf": "features",
    "LdaModel": "lda",
    "fit_lda_gibbs": "lda",
    "infer_theta": "lda",
    "lda_top_words": "lda",
    "EmbeddingMatrix": "embeddings",
    "read_embeddings": "embeddings",
    "write_embeddings": "embeddings",
    "align_embeddings": "embeddings",
    "FusedInput": "fusion",
    "AutoencoderModel": "fusion",
    "TrainConfig": "fusion",
    "assemble_features": "fusion",
    "init_autoencoder": "fusion",
    "train_autoencoder": "fusion",
    "forward": "fusion",
    "encode": "fusion",
    "KMeansModel": "cluster",
    "ClusteringResult": "cluster",
    "kmeans_fit": "cluster",
    "kmeans_predict": "cluster",
    "nmi": "cluster",
    "ari": "cluster",
    "purity": "cluster",
    "partition_metrics": "cluster",
    "ClusterTopics": "topics",
    "cluster_top_terms": "topics",
    "Projection2D": "projection",
    "pca_project": "projection",
    "tsne_project": "projection",
    "emit_projection": "projection",
    "read_matrix": "matrixio",
    "write_matrix": "matrixio",
    "RunSummary": "pipeline",
    "PipelineStageError": "pipeline",
    "load_config": "pipeline",
    "validate_config": "pipeline",
    "config_hash": "pipeline",
    "run_stage": "pipeline",
    "run_pipeline": "pipeline",
    "emit_cluster_report": "pipeline",
    "stem": "porter",
    "stopword_list": "stopwords",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    module_name = _EXPORTS.get(name)
    if module_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    import importlib

    module = importlib.import_module(f".{module_name}", __name__)
    return getattr(module, name)


def __dir__():
    return __all__
