"""Full conditionals read off a brute-force posterior table."""

import numpy as np

from ebrl.exact import enumerate_posterior


def _norm(w):
    return np.asarray(w) / np.sum(w)


def z_table(tab, state):
    a, b = tab.lam_index(state.lam), tab.y_index(state.y)
    N, p = state.z.shape
    out = np.empty((N, p))
    for r in range(N):
        for l in range(p):
            z1, z0 = state.z.copy(), state.z.copy()
            z1[r, l], z0[r, l] = 1, 0
            w1, w0 = tab.prob[a, b, tab.z_index(z1)], tab.prob[a, b, tab.z_index(z0)]
            out[r, l] = w1 / (w1 + w0)
    return out


def y_table(tab, state):
    a, c = tab.lam_index(state.lam), tab.z_index(state.z)
    n_pop, p = state.y.shape
    out = []
    for l in range(p):
        rows = []
        for v in range(n_pop):
            w = []
            for val in range(tab.sizes[l]):
                y = state.y.copy()
                y[v, l] = val
                w.append(tab.prob[a, tab.y_index(y), c])
            rows.append(_norm(w))
        out.append(np.array(rows))
    return out


def lambda_table(tab, state):
    b, c = tab.y_index(state.y), tab.z_index(state.z)
    N = state.lam.shape[0]
    out = np.empty((N, tab.n_pop))
    for r in range(N):
        w = []
        for v in range(tab.n_pop):
            lam = state.lam.copy()
            lam[r] = v
            w.append(tab.prob[tab.lam_index(lam), b, c])
        out[r] = _norm(w)
    return out


def beta_log_ratios(dataset, hp, state, tab, step=0.07):
    """log p(beta') - log p(beta) for each single-entry change of beta, from enumeration.

    Returns an array of (oracle ratio, beta, beta') per (list, field).
    """
    a, b, c = tab.lam_index(state.lam), tab.y_index(state.y), tab.z_index(state.z)
    base = tab.logw[a, b, c]
    out = []
    for i in range(state.beta.shape[0]):
        for l in range(state.beta.shape[1]):
            moved = state.beta.copy()
            moved[i, l] = min(0.95, moved[i, l] + step)
            other = enumerate_posterior(dataset, hp, beta=moved)
            out.append((i, l, other.logw[a, b, c] - base, state.beta[i, l], moved[i, l]))
    return out
