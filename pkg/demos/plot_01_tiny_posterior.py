"""
The sampler against a posterior you can write down
==================================================

Four records in two lists, one name field and one constant field.  The
instance is small enough to list every configuration of the latent state,
so the exact posterior over linkage structures is available and the Gibbs
sampler's long-run frequencies can be compared with it.
"""

import time
from collections import defaultdict

import numpy as np

from ebrl import FieldSpec, Hyperparams, SamplerConfig, Schema, build_field_tables, intern_dataset, run_sampler
from ebrl.exact import count_configurations, enumerate_posterior

schema = Schema((FieldSpec("name", "string"), FieldSpec("sex", "categorical")), list_column="list")
rows = [
    {"name": "ann", "sex": "f", "list": "A"},
    {"name": "anna", "sex": "f", "list": "A"},
    {"name": "ann", "sex": "f", "list": "B"},
    {"name": "bob", "sex": "f", "list": "B"},
]
ds = intern_dataset(rows, schema)
hp = Hyperparams(a=1, b=3, c=1, n_pop=4)
print(f"{count_configurations(ds, hp):,} configurations")

###############################################################################
# Exact posterior of the linkage structure, with distortion probabilities
# integrated out.

t0 = time.perf_counter()
table = enumerate_posterior(ds, hp)
exact = table.lambda_marginal()
print(f"enumerated in {time.perf_counter() - t0:.1f}s")

###############################################################################
# A long chain.

log = run_sampler(ds, build_field_tables(ds, hp), hp, SamplerConfig(sweeps=100_000, seed=1))
idx = log.lambda_snapshots.astype(np.int64) @ (4 ** np.arange(3, -1, -1))
emp = np.bincount(idx, minlength=exact.size) / idx.size
print(f"total variation, labelled assignments: {0.5 * np.abs(emp - exact).sum():.4f}")

###############################################################################
# Latent labels are exchangeable, so most of the interest is in which records
# share an entity.  Collapse both distributions to partitions.


def canon(lam):
    seen = {}
    return tuple(seen.setdefault(v, len(seen)) for v in lam)


P, E = defaultdict(float), defaultdict(float)
for k, cfg in enumerate(table.lam_configs):
    P[canon(cfg)] += exact[k]
    E[canon(cfg)] += emp[k]
print(f"{'partition':<16}{'exact':>8}{'chain':>8}")
for part in sorted(P, key=P.get, reverse=True):
    print(f"{str(part):<16}{P[part]:8.4f}{E[part]:8.4f}")
