import numpy as np
import pytest

from zosaddle.eigensearch import EigenSearchConfig, ResidualBatch
from zosaddle.harness.stats import fit_linear_rate
from zosaddle.oracle import EvaluationError, Objective, make_muller_brown, make_quadratic
from zosaddle.saddlesearch import (
    SaddleConfig,
    _search_replicas,
    deterministic_saddle_search,
    reflection,
    saddle_search,
    saddle_step,
)
from zosaddle.schedules import Constant, CoupledSqrt, PowerLaw, schedule_eval, schedule_from_dict


def small_cfg(**kw):
    base = dict(
        k=1,
        n_x_max=50,
        alpha_x=Constant(0.05),
        length=Constant(1e-3),
        inner=EigenSearchConfig(n_v_max=5, alpha_v=Constant(0.05)),
    )
    base.update(kw)
    return SaddleConfig(**base)


# -- saddle_step / reflection ---------------------------------------------------------


def test_step_zero_gradient():
    x = np.array([0.3, -0.2])
    np.testing.assert_array_equal(saddle_step(x, np.array([0.0, 1.0]), np.zeros(2), 1.0), x)


def test_step_worked_example():
    np.testing.assert_allclose(saddle_step(np.zeros(2), np.array([0.0, 1.0]), np.ones(2), 1.0), [-1.0, 1.0])


@pytest.mark.parametrize("d,k", [(2, 1), (5, 2), (8, 7)])
def test_reflection_orthogonal_symmetric_involution(d, k):
    V = np.linalg.qr(np.random.default_rng(d + k).standard_normal((d, k)))[0]
    R = reflection(V)
    np.testing.assert_allclose(R, R.T, atol=1e-15)
    np.testing.assert_allclose(R @ R.T, np.eye(d), atol=1e-12)
    g = np.random.default_rng(0).standard_normal(d)
    np.testing.assert_allclose(R @ (R @ g), g, atol=1e-12)


def test_k_equal_d_forbidden():
    with pytest.raises(ValueError):
        saddle_search(make_quadratic(np.diag([1.0, -1.0])), np.zeros(2), cfg=small_cfg(k=2))


# -- schedules ------------------------------------------------------------------------------


def test_schedule_examples():
    assert schedule_eval(Constant(1e-4), 17) == 1e-4
    p = PowerLaw(gamma=1.0, m=100, p=1)
    assert schedule_eval(p, 0) == pytest.approx(0.01)
    assert schedule_eval(CoupledSqrt(0.1, p), 0) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        schedule_eval(p, -1)


def test_power_law_warns_outside_range():
    with pytest.warns(UserWarning):
        PowerLaw(1.0, 1.0, 0.4)


@pytest.mark.parametrize("s", [Constant(0.3), PowerLaw(2.0, 10.0, 0.75), CoupledSqrt(0.5, PowerLaw(1.0, 5.0, 1.0))])
def test_schedule_round_trip(s):
    assert schedule_from_dict(s.to_dict()) == s


def test_saddle_config_round_trip_syncs_k():
    cfg = SaddleConfig(k=2, n_x_max=3, inner=EigenSearchConfig(k=1, stopping=ResidualBatch(0.2, 30)))
    assert cfg.inner.k == 2
    assert SaddleConfig.from_dict(cfg.to_dict()) == cfg


# -- deterministic baseline --------------------------------------------------------------------


def test_deterministic_matches_closed_form():
    obj = make_quadratic(np.diag([1.0, -1.0]))
    rec = deterministic_saddle_search(obj, [0.5, 0.5], 1, 0.1, 60)
    expected = 0.5 * 0.9 ** np.arange(61)
    np.testing.assert_allclose(rec.x, np.stack([expected, expected], 1), rtol=1e-12)


def test_deterministic_zero_step_keeps_x():
    rec = deterministic_saddle_search(make_muller_brown(), [0.0, 1.0], 1, 0.0, 5)
    assert np.all(rec.x == rec.x[0])


def test_deterministic_needs_reference():
    with pytest.raises(ValueError):
        deterministic_saddle_search(Objective(2, lambda x: x[..., 0]), [0.0, 0.0], 1, 0.1, 3)


# -- zeroth-order search ---------------------------------------------------------------------


def test_quadratic_converges_with_decaying_steps():
    obj = make_quadratic(np.diag([1.0, -1.0]))
    cfg = small_cfg(n_x_max=1000, alpha_x=PowerLaw(2.0, 10.0, 1.0))
    rec = saddle_search(obj, [0.1, 0.1], cfg=cfg, seed=3)
    assert rec.ok
    assert rec.dist_sq[-1] <= 1e-6


def test_accounting_every_row():
    obj = make_quadratic(np.diag([-1.0, 2.0, 3.0]))
    cfg = small_cfg(k=2, n_x_max=20, inner=EigenSearchConfig(k=2, n_v_max=7, alpha_v=Constant(0.05)))
    rec = saddle_search(obj, [0.2, 0.1, -0.1], cfg=cfg)
    np.testing.assert_array_equal(rec.cumulative_evals, np.arange(21) * (2 + 4 * 2 * 7))
    assert obj.eval_count == rec.cumulative_evals[-1]


def test_accounting_with_residual_batches():
    obj = make_quadratic(np.diag([-1.0, 2.0]))
    cfg = small_cfg(n_x_max=5, inner=EigenSearchConfig(n_v_max=3, alpha_v=Constant(0.05), stopping=ResidualBatch(1e-9, m=11)))
    rec = saddle_search(obj, [0.2, 0.1], cfg=cfg)
    # tolerance is never met, so every inner step also pays a batch of 11
    np.testing.assert_array_equal(rec.cumulative_evals, np.arange(6) * (2 + 3 * 4 * 12))


def test_determinism_and_batch_independence():
    obj = make_muller_brown()
    cfg = small_cfg(n_x_max=30, alpha_x=Constant(1e-4), inner=EigenSearchConfig(n_v_max=10))
    a = saddle_search(obj, [0.0, 1.0], cfg=cfg, seed=5)
    b = saddle_search(obj, [0.0, 1.0], cfg=cfg, seed=5)
    np.testing.assert_array_equal(a.x, b.x)
    batch = _search_replicas(obj, [0.0, 1.0], None, cfg, [4, 5, 6])
    np.testing.assert_array_equal(batch[1].x, a.x)


def test_divergence_is_recorded_not_raised():
    obj = make_quadratic(np.diag([1.0, -1.0]))
    rec = saddle_search(obj, [1.0, 1.0], cfg=small_cfg(n_x_max=200, alpha_x=Constant(50.0)))
    assert not rec.ok and "diverged" in rec.failure
    assert len(rec) < 201


def test_failing_replica_is_isolated():
    def func(x):
        v = 0.5 * (x[..., 0] ** 2 - x[..., 1] ** 2)
        return np.where(x[..., 0] > 0.35, np.nan, v)

    obj = Objective(2, func, lambda x: np.asarray(x) * [1.0, -1.0], lambda x: np.diag([1.0, -1.0]), np.zeros(2))
    cfg = small_cfg(n_x_max=40, alpha_x=Constant(0.2))
    seeds = list(range(12))
    recs = _search_replicas(obj, [0.3, 0.05], None, cfg, seeds)
    failed = [r for r in recs if not r.ok]
    assert failed and len(failed) < len(recs)
    for r in failed:
        assert "EvaluationError" in r.failure
    for r in recs:
        if r.ok:
            solo = _search_replicas(obj, [0.3, 0.05], None, cfg, [r.meta["seed"]])[0]
            np.testing.assert_array_equal(solo.x, r.x)


def test_record_metadata():
    rec = saddle_search(make_quadratic(np.diag([1.0, -1.0])), [0.1, 0.2], cfg=small_cfg(n_x_max=3), seed=9)
    assert rec.meta["seed"] == 9 and rec.meta["config"]["n_x_max"] == 3
    assert rec.meta["wall_time"] >= 0 and len(rec.meta["V0"]) == 2


def test_muller_brown_linear_phase_then_plateau():
    obj = make_muller_brown()
    cfg = SaddleConfig(n_x_max=1000, alpha_x=Constant(1e-4), length=Constant(1e-3))
    rec = saddle_search(obj, [0.0, 1.0], cfg=cfg, seed=0)
    fit = fit_linear_rate(rec)
    assert fit["slope"] < 0
    assert fit["rms_residual"] < 1.5
    assert 1e-13 < fit["plateau"] < 1e-9


def test_warm_start_needs_fewer_evaluations():
    obj = make_muller_brown()
    inner = EigenSearchConfig(n_v_max=200, stopping=ResidualBatch(200.0, m=300))
    target = 1e-5
    costs = {}
    for warm in (True, False):
        cfg = SaddleConfig(n_x_max=250, alpha_x=Constant(1e-4), length=Constant(1e-3), inner=inner, warm_start=warm)
        recs = _search_replicas(obj, [0.0, 1.0], None, cfg, list(range(10)))
        per_seed = []
        for r in recs:
            hit = np.flatnonzero(r.dist_sq <= target)
            # a run that never reaches the target costs infinitely much
            per_seed.append(r.cumulative_evals[hit[0]] if hit.size else np.inf)
        costs[warm] = np.array(per_seed)
    assert np.all(np.isfinite(costs[True]))
    assert np.all(costs[True] < costs[False])
