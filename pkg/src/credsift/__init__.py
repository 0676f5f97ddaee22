"""credsift: hard-coded credential scanning and eight-way classification."""

from .taxonomy import (
    CredentialCategory,
    CredentialRecord,
    RuleSignature,
    category_from_id,
    category_from_name,
    default_rules,
)
from .dataset import LabeledDataset, SplitSpec, load_csv, load_jsonl, split_dataset
from .embedding import EmbeddingCache, ProviderSpec, embed_batch, fallback_embed, mean_pool
from .scanner import ScanConfig, ScanFinding, scan_and_classify, shannon_entropy, walk_candidates
from .metrics import ConfusionMatrix, MetricReport, build_report, confusion

__version__ = "0.1.0"

__all__ = [
    "CredentialCategory",
    "CredentialRecord",
    "RuleSignature",
    "category_from_id",
    "category_from_name",
    "default_rules",
    "LabeledDataset",
    "SplitSpec",
    "load_csv",
    "load_jsonl",
    "split_dataset",
    "EmbeddingCache",
    "ProviderSpec",
    "embed_batch",
    "fallback_embed",
    "mean_pool",
    "ScanConfig",
    "ScanFinding",
    "scan_and_classify",
    "shannon_entropy",
    "walk_candidates",
    "ConfusionMatrix",
    "MetricReport",
    "build_report",
    "confusion",
    "__version__",
]
