import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcl.curriculum import (
    CurriculumConfig,
    PacingKind,
    curriculum_end,
    log_csv,
    pacing_value,
    select_subset,
    subset_size,
    train_with_curriculum,
)
from bcl.detectors import detector_init, train_plain
from bcl.gae import rank_nodes
from bcl.graph import make_split, normalize_adjacency
from bcl.synthetic import SyntheticSpec, generate_synthetic

KINDS = list(PacingKind)


@pytest.mark.parametrize("kind", KINDS)
def test_pacing_boundaries(kind):
    assert pacing_value(kind, 0.5, 100, 0) == 0.5
    assert pacing_value(kind, 0.5, 100, 100) == 1.0
    assert pacing_value(kind, 0.5, 100, 1000) == 1.0


def test_pacing_worked_examples():
    assert abs(pacing_value("linear", 0.5, 100, 50) - 0.75) <= 1e-12
    assert abs(pacing_value("root", 0.6, 100, 50) - math.sqrt(0.68)) <= 1e-12
    assert abs(pacing_value("root", 0.6, 100, 50) - 0.82462) <= 1e-5
    assert abs(pacing_value("geometric", 0.25, 100, 50) - 0.5) <= 1e-12


def test_pacing_errors():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            pacing_value("linear", bad, 10, 1)
    with pytest.raises(ValueError):
        pacing_value("linear", 0.5, 10, -1)
    with pytest.raises(ValueError):
        pacing_value("cubic", 0.5, 10, 1)


@settings(max_examples=300, deadline=None)
@given(kind=st.sampled_from(KINDS), lam=st.floats(1e-3, 1.0), t_max=st.integers(1, 500),
       t=st.integers(0, 600))
def test_pacing_monotone_and_bounded(kind, lam, t_max, t):
    v = pacing_value(kind, lam, t_max, t)
    assert lam <= v <= 1.0
    assert pacing_value(kind, lam, t_max, t + 1) >= v
    assert pacing_value(kind, lam, t_max, 0) == lam


def test_curriculum_end():
    assert curriculum_end("linear", 1.0, 50) == 0
    assert curriculum_end("root", 0.3, 50) == 50


def test_select_subset_examples():
    train = np.array([3, 1, 0, 2])
    assert sorted(select_subset([2, 0, 1, 3], train, 1.0).tolist()) == [0, 1, 2, 3]
    assert select_subset([2, 0, 1], [0, 1, 2], 1 / 3).tolist() == [2]
    assert select_subset([2, 0, 1], [0, 1], 0.5).tolist() == [0]
    with pytest.raises(ValueError):
        select_subset([0, 1], [], 0.5)
    with pytest.raises(ValueError):
        select_subset([0, 1], [0], 0.0)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 60), seed=st.integers(0, 999), a=st.floats(1e-3, 1.0), b=st.floats(1e-3, 1.0))
def test_select_subset_nested_and_sized(n, seed, a, b):
    rng = np.random.default_rng(seed)
    ordering = rng.permutation(n)
    train = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
    lo, hi = min(a, b), max(a, b)
    small, big = select_subset(ordering, train, lo), select_subset(ordering, train, hi)
    assert set(small) <= set(big) <= set(train)
    assert small.size == min(max(1, math.ceil(lo * train.size)), train.size)
    assert subset_size(hi, train.size) == big.size


def test_config_validation():
    with pytest.raises(ValueError):
        CurriculumConfig(lambda0=0.0)
    with pytest.raises(ValueError):
        CurriculumConfig(t_max=0)
    assert CurriculumConfig(pacing="root").pacing is PacingKind.ROOT


@pytest.fixture(scope="module")
def setup():
    g = generate_synthetic(SyntheticSpec(num_nodes=100, num_blocks=2, feature_dim=6, anomaly_rate=0.1,
                                         p_intra=0.1, p_inter=0.01), seed=2)
    adj = normalize_adjacency(g)
    split = make_split(g, (0.4, 0.2, 0.4), 2)
    ranking = rank_nodes(np.random.default_rng(0).random(g.num_nodes))
    return g, adj, split, ranking


def test_linear_subset_sizes(setup):
    g, adj, split, ranking = setup
    assert split.train.size == 40
    cfg = CurriculumConfig("linear", 0.5, 10, patience=5, max_epochs=30)
    result = train_with_curriculum(detector_init("gcn", 6, 8, 0), g, adj, split, ranking.q_homo, cfg)
    sizes = [r.subset_size for r in result.log]
    assert sizes[0] == 20
    assert sizes[:11] == [math.ceil((0.5 + 0.05 * t) * 40) for t in range(11)]
    assert sizes[10] == 40 and all(s == 40 for s in sizes[10:])
    assert all(x <= y for x, y in zip(sizes, sizes[1:]))


@pytest.mark.parametrize("kind", ["mlp", "gcn", "sage"])
def test_lambda_one_equals_plain(setup, kind):
    g, adj, split, ranking = setup
    a = detector_init(kind, 6, 8, seed=4)
    b = detector_init(kind, 6, 8, seed=4)
    ra = train_with_curriculum(a, g, adj, split, ranking.q_hete, CurriculumConfig("root", 1.0, 15, 5, 40))
    rb = train_plain(b, g, adj, split, epochs=40, patience=5)
    assert [r.loss for r in ra.log] == [r.loss for r in rb.log]
    assert [r.val_auc for r in ra.log] == [r.val_auc for r in rb.log]
    for name in a.params:
        assert np.array_equal(a.params[name], b.params[name])


def test_end_to_end_returns_best_val_params(setup):
    g, adj, split, ranking = setup
    model = detector_init("gcn", 6, 8, 1)
    cfg = CurriculumConfig("geometric", 0.3, 20, patience=10, max_epochs=150)
    result = train_with_curriculum(model, g, adj, split, ranking.q_homo, cfg)
    assert all(np.isfinite(model.params[n]).all() for n in model.params)
    assert result.best_val_auc == max(r.val_auc for r in result.log)
    last = result.log[-1].epoch
    assert last == cfg.max_epochs - 1 or last - result.best_epoch >= cfg.patience
    assert last >= cfg.t_max or last == cfg.max_epochs - 1


def test_ordering_must_cover_all_nodes(setup):
    g, adj, split, _ = setup
    with pytest.raises(ValueError, match="permutation"):
        train_with_curriculum(detector_init("mlp", 6, 4), g, adj, split, np.arange(10), CurriculumConfig())


def test_log_csv(setup):
    g, adj, split, ranking = setup
    result = train_plain(detector_init("mlp", 6, 4), g, adj, split, epochs=3)
    lines = log_csv(result.log).splitlines()
    assert lines[0] == "epoch,lambda_t,subset_size,loss,val_auc"
    assert len(lines) == 4 and lines[1].startswith("0,1.0,40,")
