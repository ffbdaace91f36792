"""
How far apart are two entities' records?
========================================

Under the categorical distortion model, a record of entity t is its true
value with probability 1 - beta and otherwise a draw from theta.  The L1
distance between the record distributions of two different entities is
exactly 2 (1 - beta), whatever theta is.  Pinsker's inequality and its
reverse sandwich the KL divergence, and Fano's inequality turns the upper
bound into a floor on the error of any rule that tries to tell r entities
apart.
"""

import numpy as np

from ebrl.klbounds import (
    CategoricalModelParams, categorical_lower_bound, categorical_upper_bound, fano_bound, kl_divergence,
    l1_distance, model_pair, run_bound_suite,
)

theta = np.array([0.4, 0.3, 0.2, 0.1])
print(f"{'beta':>6}{'L1':>8}{'lower':>9}{'KL':>9}{'upper':>9}")
for beta in (0.05, 0.2, 0.5, 0.8, 0.95):
    params = CategoricalModelParams(theta, beta, 0, 3)
    P, Q = model_pair(params)
    print(f"{beta:6.2f}{l1_distance(P, Q):8.3f}{categorical_lower_bound(params):9.4f}"
          f"{kl_divergence(P, Q):9.4f}{categorical_upper_bound(params):9.4f}")

###############################################################################
# Fano: if the divergence between any two candidates is at most gamma, no
# estimator picks the right one of r candidates with error below this.

for gamma in (0.1, 1.0, 3.0):
    print(f"gamma {gamma}: " + ", ".join(f"r={r}: {fano_bound(gamma, r):.3f}" for r in (10, 100, 1000)))

###############################################################################
# Random sweep over theta, beta and the pair of entities.

for r in run_bound_suite(10_000, seed=0):
    print(f"{r.name:<24}{'ok' if r.passed else 'VIOLATED':>9}  worst margin {r.worst_margin:.3g}")
