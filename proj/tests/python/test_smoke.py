"""End-to-end smoke tests for the pyargo extension module."""

import math

import pytest

import pyargo


def make_split(seed=17, users=40, items=25):
    cfg = pyargo.SynthConfig()
    cfg.num_users = users
    cfg.num_items = items
    cfg.num_levels = 3
    cfg.seed = seed
    ds = pyargo.generate(cfg)
    return ds, pyargo.leave_one_out_split(ds, seed=2)


def fast_hp(**overrides):
    kwargs = dict(
        d=8,
        M=2,
        w=0.1,
        lam=[1 / 6, 4 / 6, 1 / 6],
        lr=0.05,
        batch_size=16,
        dropout=0.0,
        epochs=5,
        seed=9,
        cutoffs=[10, 20],
    )
    kwargs.update(overrides)
    return pyargo.HyperParams(**kwargs)


def test_generate_shapes_and_containment():
    ds, split = make_split()
    assert ds.num_users == 40
    assert ds.num_items == 25
    assert ds.num_levels == 3
    assert ds.level_count(0) >= ds.level_count(1) >= ds.level_count(2)
    for u in range(ds.num_users):
        for v in ds.positives(2, u):
            assert ds.has(1, u, v) and ds.has(0, u, v)
    assert len(split.test_items) == ds.num_users


def test_train_and_evaluate():
    _, split = make_split()
    result = pyargo.train(split, fast_hp())
    assert len(result.history) == 5
    assert result.history[-1].loss.total < result.history[0].loss.total
    assert all(math.isfinite(x) for x in result.params.Q)

    report = pyargo.evaluate(result.params, split, cutoffs=[10, 20])
    assert report.cutoffs == [10, 20]
    assert 0.0 <= report.hr[0] <= report.hr[1] <= 1.0
    assert report.ndcg[0] <= report.hr[0] + 1e-12


def test_train_is_deterministic():
    _, split = make_split()
    a = pyargo.train(split, fast_hp())
    b = pyargo.train(split, fast_hp())
    assert a.params.Q == b.params.Q
    assert a.params.P == b.params.P
    assert [r.loss.total for r in a.history] == [r.loss.total for r in b.history]


def test_variants():
    _, split = make_split()
    im = pyargo.train(split, fast_hp(M=1), pyargo.Variant.SINGLE_IDENTITY)
    assert im.params.num_identities == 1
    assert all(r.loss.divergence == 0.0 for r in im.history)

    cp = pyargo.train(split, fast_hp(), pyargo.Variant.INDEPENDENT_HEADS)
    assert len(cp.params.h) == 3  # one prediction vector per level


def test_gradient_check_passes():
    _, split = make_split(seed=5, users=8, items=12)
    ok, report = pyargo.gradient_check(split, fast_hp(d=5, M=3))
    assert ok, report


def test_scores_and_transitions():
    ds, split = make_split()
    result = pyargo.train(split, fast_hp())
    scores = pyargo.score_all_items(result.params, 0)
    assert len(scores) == ds.num_items
    assert all(s >= 0.0 for s in scores)

    p_hat, support = pyargo.estimate_transitions(ds)
    assert len(p_hat) == 2
    assert all(0.0 <= p <= 1.0 for row in p_hat for p in row)


def test_config_errors_are_typed():
    with pytest.raises(pyargo.ConfigError):
        pyargo.HyperParams(d=0)
    with pytest.raises(pyargo.DataError):
        pyargo.load_interactions("/nonexistent/interactions.tsv")
