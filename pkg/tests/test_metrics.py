import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcl.metrics import fuse_scores, macro_f1, roc_auc

from conftest import brute_force_auc


def test_fuse_examples():
    h, e = np.array([0.1, 0.9]), np.array([0.7, 0.2])
    assert np.array_equal(fuse_scores(1.0, h, e).score_final, h)
    assert np.array_equal(fuse_scores(0.0, h, e).score_final, e)
    assert fuse_scores(0.5, [0.2], [0.8]).score_final.tolist() == [0.5]
    with pytest.raises(ValueError):
        fuse_scores(0.5, [0.1], [0.1, 0.2])
    with pytest.raises(ValueError):
        fuse_scores(1.5, [0.1], [0.1])


@settings(max_examples=100, deadline=None)
@given(
    scores=st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=30),
    alpha=st.floats(0, 1),
)
def test_fuse_in_unit_interval_and_symmetric(scores, alpha):
    h, e = np.array(scores).T
    f = fuse_scores(alpha, h, e).score_final
    assert np.all((f >= 0) & (f <= 1 + 1e-15))
    assert np.array_equal(f, alpha * h + (1 - alpha) * e)
    a = fuse_scores(0.5, h, e).score_final
    b = fuse_scores(0.5, e, h).score_final
    assert np.array_equal(np.argsort(a, kind="stable"), np.argsort(b, kind="stable"))


def test_auc_examples():
    assert roc_auc([0.9, 0.1], [1, 0]) == 1.0
    assert roc_auc([0.3] * 6, [1, 0, 1, 0, 0, 0]) == 0.5
    assert roc_auc([0.8, 0.7, 0.6, 0.5], [1, 0, 1, 0]) == 0.75
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [1, 1])


@pytest.mark.parametrize("seed", range(30))
def test_auc_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 200))
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    scores = rng.integers(0, 5, n) / 4.0 if seed % 2 else rng.random(n)
    assert roc_auc(scores, labels) == brute_force_auc(scores, labels)


@settings(max_examples=100, deadline=None)
@given(data=st.lists(st.tuples(st.integers(0, 6), st.integers(0, 1)), min_size=2, max_size=60))
def test_auc_invariant_under_monotone_maps(data):
    scores, labels = (np.array(c) for c in zip(*data))
    if labels.min() == labels.max():
        return
    base = roc_auc(scores, labels)
    assert base == brute_force_auc(scores, labels)
    for fn in (np.exp, lambda x: x ** 3 + 2 * x, lambda x: 1 / (1 + np.exp(-x))):
        assert roc_auc(fn(scores.astype(float)), labels) == base


def test_macro_f1_examples():
    assert macro_f1([0.9, 0.1, 0.8], [1, 0, 1]) == 1.0
    assert macro_f1([0.1, 0.2, 0.3, 0.4], [0, 0, 0, 1]) == pytest.approx(3 / 7, abs=1e-15)
    scores = [0.2, 1.0, 0.7, 0.99]
    assert macro_f1(scores, [0, 1, 0, 1], threshold=1.0) == macro_f1([0.0] * 4, [0, 1, 0, 1])
    with pytest.raises(ValueError):
        macro_f1([0.1], [0])


@settings(max_examples=100, deadline=None)
@given(data=st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=2, max_size=40))
def test_macro_f1_range(data):
    scores, labels = (np.array(c) for c in zip(*data))
    if labels.min() == labels.max():
        return
    f = macro_f1(scores, labels)
    assert 0.0 <= f <= 1.0
    assert (f == 1.0) == bool(np.all((scores > 0.5) == (labels == 1)))
