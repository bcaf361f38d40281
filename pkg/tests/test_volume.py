import math
import warnings

import numpy as np
import pytest
from scipy import stats

from ksatlas.errors import InvalidInputError
from ksatlas.volume import (
    StrataPlan,
    _sample_shell_direct,
    alpha_sweep,
    decay_fit,
    fit_decay_rate,
    plain_volume,
    sample_shell,
    stable_volume,
    stratum_rng,
)


def shell_cdf(lo, hi, n):
    return lambda r: (np.clip(r, lo, hi) ** n - lo**n) / (hi**n - lo**n)


def test_plan_validation():
    with pytest.raises(InvalidInputError):
        StrataPlan(100, 1001, 3, 0)
    with pytest.raises(InvalidInputError):
        stable_volume(StrataPlan(10, 100, 1, 0), 0.0)
    plan = StrataPlan(100, 100_000, 3, 0)
    assert plan.per_stratum == 1000
    assert plan.t(0) == 0.0 and plan.t(100) == np.pi


@pytest.mark.parametrize("n", [2, 3, 8, 20])
def test_shell_volumes_sum(n):
    plan = StrataPlan(100, 100, n, 0)
    total = math.fsum(plan.shell_volume(k) for k in range(1, 101))
    assert total == pytest.approx((2 * np.pi) ** n, rel=1e-9)
    assert all(plan.shell_volume(k) >= 0 for k in range(1, 101))


def test_first_shell_is_full_cube():
    plan = StrataPlan(10, 10, 3, 0)
    pts = sample_shell(1, plan, stratum_rng(0, 1), size=20_000)
    assert np.abs(pts).max() <= plan.t(1)
    assert stats.kstest(pts[:, 0], stats.uniform(-plan.t(1), 2 * plan.t(1)).cdf).statistic <= 0.02


def test_interval_shell():
    plan = StrataPlan(50, 50, 1, 0)
    for k in (1, 2, 7, 50):
        pts = sample_shell(k, plan, stratum_rng(0, k), size=5000)
        assert np.all(np.abs(pts) > plan.t(k - 1)) and np.all(np.abs(pts) <= plan.t(k))
    for k in (2, 7):
        pts = _sample_shell_direct(plan.t(k - 1), plan.t(k), 1, 5000, stratum_rng(1, k))
        assert np.all(np.abs(pts) > plan.t(k - 1)) and np.all(np.abs(pts) <= plan.t(k))


@pytest.mark.parametrize("direct", [False, True])
def test_shell_max_norm_distribution(direct):
    plan = StrataPlan(100, 100, 8, 0)
    lo, hi = plan.t(1), plan.t(2)
    rng = stratum_rng(11, 2)
    if direct:
        pts = _sample_shell_direct(lo, hi, 8, 100_000, rng)
    else:
        pts = sample_shell(2, plan, rng, size=100_000)
    r = np.abs(pts).max(axis=1)
    assert np.all((r > lo) & (r <= hi))
    assert stats.kstest(r, shell_cdf(lo, hi, 8)).statistic <= 0.01


def test_thin_shell_uses_direct_path():
    plan = StrataPlan(500, 500, 3, 0)
    assert plan.acceptance(500) < 0.01
    pts = sample_shell(500, plan, stratum_rng(0, 500), size=50_000)
    r = np.abs(pts).max(axis=1)
    assert stats.kstest(r, shell_cdf(plan.t(499), plan.t(500), 3)).statistic <= 0.01
    # the coordinates inside the shell must still be uniform on the inner cube
    inner = np.abs(pts) <= plan.t(499)
    vals = pts[inner]
    assert stats.kstest(vals, stats.uniform(-plan.t(499), 2 * plan.t(499)).cdf).statistic <= 0.01


def test_two_oscillators_closed_form():
    est = stable_volume(StrataPlan(50, 50_000, 2, 3), 0.0)
    assert abs(est.volume - (2 * np.pi) ** 2 / 2) <= 3 * est.std_error
    assert est.failures == 0


def test_reproducible_and_worker_independent():
    plan = StrataPlan(20, 4000, 4, 42)
    a = stable_volume(plan, 0.3)
    b = stable_volume(plan, 0.3)
    c = stable_volume(plan, 0.3, workers=4)
    assert a.per_stratum == b.per_stratum == c.per_stratum
    assert a.volume == b.volume == c.volume
    assert stable_volume(StrataPlan(20, 4000, 4, 43), 0.3).per_stratum != a.per_stratum


def test_estimator_definition():
    est = stable_volume(StrataPlan(10, 2000, 3, 1), 0.2)
    v = sum(t.shell_volume * t.hit_count / t.samples for t in est.per_stratum)
    assert est.volume == pytest.approx(v, rel=1e-14)
    assert 0.0 < est.volume <= (2 * np.pi) ** 3
    assert est.fraction == pytest.approx(est.volume / (2 * np.pi) ** 3)


def test_plain_sampling_agrees_with_strata():
    strat = stable_volume(StrataPlan(100, 100_000, 3, 0), 0.0)
    plain, plain_se = plain_volume(3, 0.0, 100_000, seed=1)
    assert abs(strat.volume - plain) <= 3 * math.hypot(strat.std_error, plain_se)


def test_phase_lag_sign_symmetry():
    plan = StrataPlan(50, 20_000, 3, 5)
    pos = stable_volume(plan, 0.6)
    neg = stable_volume(StrataPlan(50, 20_000, 3, 6), -0.6)
    assert abs(pos.volume - neg.volume) <= 3 * math.hypot(pos.std_error, neg.std_error)


def test_decay_fit_exact():
    ns = list(range(3, 11))
    assert fit_decay_rate(ns, [0.45**n for n in ns]) == pytest.approx(0.45, abs=1e-12)


def test_decay_fit_noisy():
    rng = np.random.default_rng(7)
    ns = list(range(3, 11))
    for _ in range(50):
        vols = [0.45**n * (1 + rng.uniform(-0.05, 0.05)) for n in ns]
        assert 0.43 < fit_decay_rate(ns, vols) < 0.47


def test_decay_fit_zero_handling():
    with pytest.warns(UserWarning):
        rho = fit_decay_rate([3, 4, 5, 6], [0.1, 0.05, 0.0, 0.0125])
    assert rho == pytest.approx(0.5, rel=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(InvalidInputError):
            fit_decay_rate([3, 4, 5], [0.1, 0.0, 0.02])


def test_decay_fit_on_estimates_uses_fraction():
    ests = [stable_volume(StrataPlan(10, 2000, n, 0), 0.0) for n in (3, 4, 5)]
    frac = fit_decay_rate([3, 4, 5], [e.fraction for e in ests])
    absolute = fit_decay_rate([3, 4, 5], [e.volume for e in ests])
    assert decay_fit(ests) == pytest.approx(frac)
    assert decay_fit(ests, normalized=False) == pytest.approx(absolute)
    assert absolute == pytest.approx(2 * np.pi * frac)


def test_alpha_sweep_small():
    curves = alpha_sweep([3], [0.0, 0.5, 1.0], num_strata=20, num_samples=20_000, seed=2)
    (curve,) = curves
    assert curve.rescaled[0] == 1.0 and curve.rescaled_std_error[0] == 0.0
    assert curve.monotone_within(2.0)
    with pytest.raises(InvalidInputError):
        alpha_sweep([3], [0.3, 0.5])
    with pytest.raises(InvalidInputError):
        alpha_sweep([3], [0.0, 1.6])
