import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ebrl.evaluate import (
    ConfusionCounts, confusion_counts, exact_match_baseline, fdr, fnr, geweke_z, multiplicity_trace,
    n_distinct_summary, near_twin_baseline,
)
from ebrl.gibbs import SampleLog
from ebrl.linkage import LinkagePartition
from ebrl.model import FieldSpec, Schema, intern_dataset
from ebrl.synthetic import GenConfig, generate_synthetic


def P(*clusters):
    return LinkagePartition.from_clusters(clusters)


def test_confusion_examples():
    assert confusion_counts(P([0], [1], [2]), P([0, 1], [2])) == ConfusionCounts(0, 1, 0, 2)
    assert confusion_counts(P([0, 1, 2, 3]), P([0, 1], [2, 3])) == ConfusionCounts(2, 0, 4, 0)
    t = P([0, 3], [1], [2, 4])
    c = confusion_counts(t, t)
    assert c.fn == c.fp == 0


def _brute(est, truth):
    n = truth.n_records
    c = [0, 0, 0, 0]
    for a in range(n):
        for b in range(a + 1, n):
            t, e = truth.linked(a, b), est.linked(a, b)
            c[0 if t and e else 1 if t else 2 if e else 3] += 1
    return ConfusionCounts(*c)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=15), st.data())
def test_confusion_matches_pair_enumeration(truth, data):
    est = data.draw(st.lists(st.integers(0, 5), min_size=len(truth), max_size=len(truth)))
    t, e = LinkagePartition(np.array(truth)), LinkagePartition(np.array(est))
    c = confusion_counts(e, t)
    assert c == _brute(e, t)
    n = len(truth)
    assert c.total == n * (n - 1) // 2
    assert c.cl + c.fn == t.n_links() and c.cl + c.fp == e.n_links()


def test_rates():
    c = ConfusionCounts(48, 2, 2, 100)
    assert fnr(c) == pytest.approx(0.04) and fdr(c) == pytest.approx(0.04)
    assert fdr(ConfusionCounts(0, 5, 0, 10)) == 0
    assert fnr(ConfusionCounts(0, 0, 3, 10)) == 0


def _ds(rows):
    schema = Schema(tuple(FieldSpec(f"f{k}", "categorical") for k in range(len(rows[0]))))
    return intern_dataset([{f"f{k}": v for k, v in enumerate(r)} for r in rows], schema)


def test_exact_match_baseline():
    ds = _ds([["a", "b"], ["a", "b"], ["a", "c"], ["a", "b"]])
    assert exact_match_baseline(ds).clusters == [(0, 1, 3), (2,)]
    syn = generate_synthetic(GenConfig())
    c = confusion_counts(exact_match_baseline(syn.dataset), syn.truth)
    assert (fnr(c), fdr(c)) == (1.0, 0.0)


def test_near_twin_baseline():
    ds = _ds([list("abcde"), list("abcdX"), list("abcYX"), list("PQcYe")])
    part = near_twin_baseline(ds)
    # 0~1, 1~2 (one field each) so all three link; record 3 differs from each in >= 2 fields
    assert part.clusters == [(0, 1, 2), (3,)]
    assert near_twin_baseline(_ds([list("abcde"), list("abXYe")])).clusters == [(0,), (1,)]


def _log(n_distinct, mult=None):
    n = np.asarray(n_distinct)
    m = np.zeros((len(n), 1), dtype=np.int32) if mult is None else np.asarray(mult)
    return SampleLog(np.zeros((0, 1), dtype=np.int32), n, m)


def test_n_distinct_summary():
    s = n_distinct_summary(_log([450] * 20))
    assert (s.mean, s.sd) == (450, 0)
    s = n_distinct_summary(_log([3, 4, 4, 5]))
    assert s.values.tolist() == [3, 4, 5] and s.density.tolist() == [0.25, 0.5, 0.25]
    assert s.sd == pytest.approx(np.std([3, 4, 4, 5], ddof=1))


def test_multiplicity_trace():
    log = _log([5, 4], [[5, 0], [3, 1]])
    assert multiplicity_trace(log, 1).tolist() == [5, 3]
    assert multiplicity_trace(log, 2).tolist() == [0, 1]
    assert multiplicity_trace(log, 3).tolist() == [0, 0]


def test_geweke():
    rng = np.random.default_rng(0)
    assert abs(geweke_z(rng.standard_normal(10_000)).z) < 4
    assert abs(geweke_z(np.arange(1, 10_001)).z) > 10
    g = geweke_z(np.full(500, 450.0))
    assert g.z == 0 and g.zero_variance
    with pytest.raises(ValueError):
        geweke_z(np.ones(50))


def test_size_mismatch():
    with pytest.raises(ValueError):
        confusion_counts(P([0, 1]), P([0], [1], [2]))
