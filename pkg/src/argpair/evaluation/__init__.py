"""Ranking metrics, baselines, ablations, code analysis and sweeps."""
from .ablation import ABLATIONS, ablate
from .analysis import (
    POSTERIOR_HEADER, SIMILARITY_HEADER, CodeCluster, cluster_by_code, export_posteriors,
    group_by_codes, instance_arguments, mean_tv_by_candidate, posterior_tables, tv_distance,
)
from .baselines import (
    TfIdf, cosine, embedding_baseline, embedding_rankings, tfidf_baseline, tfidf_rankings,
)
from .metrics import MetricReport, metrics, write_csv, write_report
from .sweep import SWEEP_VALUES, SweepRow, sweep

__all__ = [
    "ABLATIONS", "CodeCluster", "MetricReport", "POSTERIOR_HEADER", "SIMILARITY_HEADER",
    "SWEEP_VALUES", "SweepRow", "TfIdf", "ablate", "cluster_by_code", "cosine",
    "embedding_baseline", "embedding_rankings", "export_posteriors", "group_by_codes",
    "instance_arguments", "mean_tv_by_candidate", "metrics", "posterior_tables", "sweep",
    "tfidf_baseline", "tfidf_rankings", "tv_distance", "write_csv", "write_report",
]
