"""
Two ways to scale string distortion
===================================

A distorted string value is drawn with weight alpha(w) exp(-c d(w, y)).
Dividing by sum_w alpha(w) exp(-c d(w, y)) makes those weights a
probability distribution.  Dividing by sum_w exp(-c d(w, y)) instead
leaves them summing to less than one.  For a rare value y the two
constants differ by roughly a factor 1 / alpha(y).  That factor decides
how cheap it is to explain a mismatched name as a distortion, so it
strongly affects both what the posterior looks like and how fast the
chain explores it.
"""

import sys

import numpy as np

from ebrl import (
    Hyperparams, SamplerConfig, build_field_tables, confusion_counts, fdr, fnr, n_distinct_summary,
    run_sampler, shared_mpmms_linkage,
)
from ebrl.synthetic import GenConfig, generate_synthetic

sweeps = int(sys.argv[1]) if len(sys.argv) > 1 else 5_000
syn = generate_synthetic(GenConfig(seed=0))
ds = syn.dataset

for norm in ("weighted", "unweighted"):
    hp = Hyperparams(a=1, b=99, c=1, n_pop=500, normalizer=norm)
    tables = build_field_tables(ds, hp)
    ah = tables.alpha[0] * tables.h[0]
    print(f"\n{norm}: median alpha*h on first names {np.median(ah):.3f}")
    log = run_sampler(ds, tables, hp, SamplerConfig(sweeps=sweeps, seed=0))
    s = n_distinct_summary(log)
    c = confusion_counts(shared_mpmms_linkage(log), syn.truth)
    print(f"  distinct entities {s.mean:.1f} (truth 450), FNR {fnr(c):.3f}, FDR {fdr(c):.3f}")
    print(f"  final beta {log.beta_trace[-1, 0].round(4)}")
