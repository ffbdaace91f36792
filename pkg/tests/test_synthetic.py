import numpy as np
import pytest

from ebrl.io import write_csv
from ebrl.strdist import edit_distance
from ebrl.synthetic import GenConfig, PoolField, generate_synthetic, perturb_string


def test_counts_and_truth():
    syn = generate_synthetic(GenConfig(n_records=500, n_duplicates=50))
    assert syn.dataset.n_records == 500
    assert len(set(syn.dataset.truth.tolist())) == 450
    assert syn.truth.n_links() == 50


def test_duplicates_differ_from_sources():
    syn = generate_synthetic(GenConfig(seed=4, string_error=0.2, cat_error=0.01))
    X = syn.dataset.records
    for c in syn.truth.clusters:
        if len(c) == 2:
            assert not np.array_equal(X[c[0]], X[c[1]])


def test_seed_determinism(tmp_path):
    a = generate_synthetic(GenConfig(seed=7))
    b = generate_synthetic(GenConfig(seed=7))
    write_csv(tmp_path / "a.csv", a.header, a.rows)
    write_csv(tmp_path / "b.csv", b.header, b.rows)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    c = generate_synthetic(GenConfig(seed=8))
    assert a.rows != c.rows


def test_mean_edit_count():
    # Poisson(1) edits; the edit distance can fall below the edit count
    # (an insertion undone by a deletion, say) but never exceed it
    rng = np.random.default_rng(0)
    words = ["SCHMIDT", "WAGNER", "ANNA", "CHRISTIAN", "KOCH"]
    n_edits = rng.poisson(1.0, size=10_000)
    d = np.array([edit_distance(w, perturb_string(w, int(k), rng)) for w, k in zip(words * 2000, n_edits)])
    assert np.all(d <= n_edits)
    assert abs(d.mean() - 1.0) < 0.1


def test_invalid_configs():
    with pytest.raises(ValueError):
        GenConfig(n_records=10, n_duplicates=10)
    with pytest.raises(ValueError):
        GenConfig(cat_error=1.5)
    with pytest.raises(ValueError):
        generate_synthetic(GenConfig(string_error=0, cat_error=0))
    with pytest.raises(ValueError):
        PoolField("x", "string", ())


def test_lists():
    syn = generate_synthetic(GenConfig(n_records=100, n_duplicates=10, n_lists=3, seed=1))
    assert syn.dataset.n_lists == 3
