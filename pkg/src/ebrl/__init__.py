"""Empirical Bayes record linkage.

Records from one or more lists are treated as noisy copies of latent
entities.  Field priors are the empirical value frequencies, string fields
distort toward nearby strings, and a Gibbs sampler draws linkage structures
from the posterior.  Point estimates come from shared most probable maximal
matching sets.
"""

from .evaluate import confusion_counts, fdr, fnr, n_distinct_summary
from .gibbs import SampleLog, SamplerConfig, run_sampler
from .linkage import LinkagePartition, pairwise_match_probs, shared_mpmms_linkage
from .model import Dataset, FieldKind, FieldSpec, Hyperparams, Schema, intern_dataset
from .strdist import build_field_tables

__all__ = [
    "Dataset", "FieldKind", "FieldSpec", "Hyperparams", "LinkagePartition", "SampleLog", "SamplerConfig",
    "Schema", "build_field_tables", "confusion_counts", "fdr", "fnr", "intern_dataset", "n_distinct_summary",
    "pairwise_match_probs", "run_sampler", "shared_mpmms_linkage",
]

__version__ = "0.1.0"
