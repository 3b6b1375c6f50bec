"""Monte Carlo engine: determinism, pathwise orderings, statistical checks.

Every stochastic assertion here runs on a fixed seed, so the suite is
deterministic; tolerances are still quoted in standard errors to keep the
checks honest about what they measure.
"""

import math

import numpy as np
import pytest

from levystop import mc
from levystop.engine import threshold, value_function
from levystop.mc import (McEstimate, SimConfig, class_d_diagnostic,
                         epsilon_stop_paths, hitting_estimates, policy_value,
                         sample_increment, simulate_hit, sweep)
from levystop.models import (BrownianDrift, ExpJD, KouJD, NegPoisson,
                             ProblemSpec, SpectNegKou, psi)

BM = BrownianDrift(m=0.0, sigma=1.0)
BM_SPEC = ProblemSpec(model=BM, r=1.0, alpha=1.0, c=1.0, v=1.0)
NP_SPEC = ProblemSpec(model=NegPoisson(a=1.0), r=0.5, alpha=1.0, c=1.0,
                      v=3.2)


def test_same_seed_same_estimates_bitwise():
    cfg = SimConfig(n_paths=4000, dt=0.01, horizon=6.0, seed=123)
    first = simulate_hit(BM, 1.0, -0.4, cfg)
    second = simulate_hit(BM, 1.0, -0.4, cfg)
    assert first == second  # dataclass equality: every float identical


def test_thread_count_does_not_change_results(monkeypatch):
    cfg = SimConfig(n_paths=3000, dt=0.01, horizon=6.0, seed=9,
                    batch_size=512)
    monkeypatch.delenv("LEVYSTOP_THREADS", raising=False)
    serial = sweep(BM_SPEC, [0.2, 0.3, 0.5], cfg)
    monkeypatch.setenv("LEVYSTOP_THREADS", "4")
    threaded = sweep(BM_SPEC, [0.2, 0.3, 0.5], cfg)
    assert np.array_equal(serial.values, threaded.values)
    assert serial.estimates == threaded.estimates
    assert serial.argmax_index == threaded.argmax_index


def test_batch_partition_fixes_the_stream():
    # Same partition, different thread counts is covered above; a changed
    # batch_size legitimately reshuffles substreams and may change draws.
    cfg_a = SimConfig(n_paths=2000, dt=0.02, horizon=4.0, seed=5,
                      batch_size=500)
    cfg_b = SimConfig(n_paths=2000, dt=0.02, horizon=4.0, seed=5,
                      batch_size=500)
    assert simulate_hit(BM, 1.0, -0.3, cfg_a) == simulate_hit(
        BM, 1.0, -0.3, cfg_b)


def test_bridge_catches_earlier_pathwise():
    # batch_size=1 keeps the draw streams aligned between the two runs.
    dyn = mc._Dynamics.from_model(BM)
    levels = np.array([-0.3, -0.8])
    kw = dict(horizon=5.0, want_integral=False)
    on = mc._simulate_levels(
        dyn, 1.0, levels, cfg=SimConfig(n_paths=64, dt=0.05, seed=77,
                                        bridge_correction=True,
                                        batch_size=1), **kw)
    off = mc._simulate_levels(
        dyn, 1.0, levels, cfg=SimConfig(n_paths=64, dt=0.05, seed=77,
                                        bridge_correction=False,
                                        batch_size=1), **kw)
    assert np.all(on.tau <= off.tau + 1e-12)
    assert np.all(on.hit >= off.hit)
    # at this coarse dt the bridge must catch something the grid misses
    assert np.any(on.tau < off.tau - 1e-12)


def test_passage_times_monotone_in_depth():
    dyn = mc._Dynamics.from_model(BM)
    levels = np.array([-0.2, -0.5, -1.0])
    record = mc._simulate_levels(
        dyn, 1.0, levels, horizon=8.0, want_integral=False,
        cfg=SimConfig(n_paths=5000, dt=0.02, seed=3))
    assert np.all(np.diff(record.tau, axis=0) >= -1e-12)
    assert np.all(record.hit[0] >= record.hit[1])
    # diffusion crossings land exactly on the level
    for j, lev in enumerate(levels):
        assert np.all(record.x_hit[j][record.hit[j]] == lev)


def test_standard_error_shrinks_like_root_n():
    small = simulate_hit(BM, 1.0, -0.5,
                         SimConfig(n_paths=2000, dt=0.01, seed=11))
    big = simulate_hit(BM, 1.0, -0.5,
                       SimConfig(n_paths=32000, dt=0.01, seed=11))
    ratio = small[0].std_error / big[0].std_error
    assert 2.8 < ratio < 5.7  # 16x paths => ~4x


def test_brownian_passage_transforms_within_monte_carlo_error():
    x = -0.5
    est_l, est_g = simulate_hit(BM, 1.0, x,
                                SimConfig(n_paths=20000, dt=1e-3, seed=14))
    lam = math.sqrt(2.0)
    assert abs(est_l.mean - math.exp(lam * x)) < 4.0 * est_l.std_error
    # no upward jumps: the passage creeps, X_tau = x exactly
    assert abs(est_g.mean - math.exp((lam + 1.0) * x)) < 4.0 * est_g.std_error
    assert est_l.n_effective == 20000
    # driftless passage times are heavy-tailed: P(tau > 100) ~ 4%, but the
    # truncated paths would have contributed ~e^{-100} anyway
    assert 0.0 <= est_l.truncation_fraction < 0.06


def test_counter_family_hits_are_exact_geometrics():
    cfg = SimConfig(n_paths=20000, horizon=60.0, seed=17)
    model = NegPoisson(a=1.0)
    gamma = 1.0 / 1.5  # a / (r + a)
    est_l, est_g = simulate_hit(model, 0.5, -1.4, cfg)
    # level in the second bucket: two jumps needed
    assert abs(est_l.mean - gamma ** 2) < 4.0 * est_l.std_error
    assert abs(est_g.mean - (gamma / math.e) ** 2) < 4.0 * est_g.std_error


def test_hitting_estimates_preserve_input_order():
    cfg = SimConfig(n_paths=1000, dt=0.02, horizon=4.0, seed=21)
    shallow_first = hitting_estimates(BM, 1.0, [-0.2, -0.9], cfg)
    deep_first = hitting_estimates(BM, 1.0, [-0.9, -0.2], cfg)
    assert shallow_first[0] == deep_first[1]
    assert shallow_first[1] == deep_first[0]
    assert shallow_first[0][0].mean > shallow_first[1][0].mean


def test_policy_value_reconciles_and_matches_analytic():
    res = threshold(BM_SPEC)
    w = value_function(BM_SPEC, res)
    cfg = SimConfig(n_paths=8000, dt=5e-3, horizon=12.0, seed=25)
    pv = policy_value(BM_SPEC, res.b_c, cfg)
    assert pv.reconciled
    tol = 5.0 * pv.direct.std_error + 0.01  # MC error + horizon bias room
    assert abs(pv.direct.mean - float(w(BM_SPEC.v))) < tol
    assert abs(pv.stopped.mean - float(w(BM_SPEC.v))) < tol


def test_policy_value_counter_family_reconciles():
    cfg = SimConfig(n_paths=3000, horizon=40.0, seed=26)
    pv = policy_value(NP_SPEC, 1.0, cfg)
    assert pv.reconciled
    assert pv.direct.std_error > 0.0


def test_policy_value_is_exact_zero_when_already_stopped():
    cfg = SimConfig(n_paths=100, seed=1)
    pv = policy_value(BM_SPEC, BM_SPEC.v * 1.5, cfg)
    assert pv.direct == McEstimate(0.0, 0.0, 100, 0.0)
    assert pv.stopped == pv.direct
    assert pv.reconciled


def test_sweep_structure_and_inactive_levels():
    grid = [0.15, 0.25, 0.3, 0.45, 2.0]  # last one sits above v = 1
    cfg = SimConfig(n_paths=3000, dt=0.01, horizon=10.0, seed=29)
    result = sweep(BM_SPEC, grid, cfg)
    assert result.values.shape == (5, 3000)
    assert len(result.estimates) == 5
    assert result.estimates[4].mean == 0.0
    assert np.all(result.values[4] == 0.0)
    assert result.flat[result.argmax_index]
    lo, hi = result.flat_interval()
    assert lo <= result.argmax_b <= hi
    assert result.argmax_b == grid[result.argmax_index]


def test_counter_family_levels_in_one_bucket_are_paired_exactly():
    # both b need two downward unit jumps from v: identical paths decide
    cfg = SimConfig(n_paths=4000, horizon=40.0, seed=33)
    result = sweep(NP_SPEC, [1.02, 1.05], cfg)
    tau_like = result.values
    assert result.estimates[0].std_error > 0.0
    # integrand differs only through alpha*v (same for both), so identical
    assert np.array_equal(tau_like[0], tau_like[1])


def test_epsilon_stop_times_grow_as_eps_shrinks():
    res = threshold(BM_SPEC)
    cfg = SimConfig(n_paths=2000, dt=0.01, horizon=30.0, seed=37)
    out = epsilon_stop_paths(BM_SPEC, res, [1e-1, 1e-2], cfg)
    assert np.all(np.diff(out.boundaries) < 0)
    assert np.all(out.boundaries > res.b_c)
    assert np.all(out.tau[1] >= out.tau[0] - 1e-12)
    assert out.estimates[1].mean > out.estimates[0].mean


def test_class_d_counter_family_is_exactly_degenerate():
    cfg = SimConfig(n_paths=500, horizon=50.0, seed=41)
    result = class_d_diagnostic(NegPoisson(a=1.0), 0.5, [1, 2, 4], cfg)
    assert result.estimates[0] == McEstimate(1.0, 0.0, 500, 0.0)
    assert result.estimates[1].mean == 0.0
    assert result.estimates[2].mean == 0.0
    with pytest.raises(ArithmeticError, match="log-log"):
        result.loglog_slope()


def test_class_d_brownian_ladder_decays_inversely():
    cfg = SimConfig(n_paths=40000, dt=0.02, horizon=80.0, seed=45)
    result = class_d_diagnostic(BM, 1.0, [2, 4, 16], cfg)
    means = [e.mean for e in result.estimates]
    assert means[0] > means[1] > means[2] > 0.0
    # drift-2 mirror makes P(reach -ln n) = n^-2, so the ladder is ~1/n
    assert -1.25 < result.loglog_slope() < -0.75


def test_exact_increment_sampler_matches_exponent():
    t = 0.6
    models = [BM, BrownianDrift(m=-0.4, sigma=0.7),
              KouJD(m=0.1, sigma=0.3, a=0.5, p=0.4, eta1=3.0, eta2=2.0),
              ExpJD(m=-0.3, sigma=0.8, a=0.8, eta1=2.5),
              NegPoisson(a=1.0),
              SpectNegKou(m=0.1, sigma=0.7, a=0.9, eta2=1.8)]
    for i, model in enumerate(models):
        x = sample_increment(model, t, 150000, seed=100 + i)
        ex = np.exp(x)
        se = float(np.std(ex, ddof=1)) / math.sqrt(x.size)
        assert abs(float(np.mean(ex)) - math.exp(psi(model, 1.0) * t)) \
            < 4.0 * se, model.family


def test_truncation_fraction_counts_horizon_survivors():
    cfg = SimConfig(n_paths=2000, dt=0.01, horizon=0.25, seed=49)
    est_l, est_g = simulate_hit(BM, 1.0, -4.0, cfg)
    assert est_l.truncation_fraction > 0.9
    assert est_l.mean < 0.05
    assert est_l.n_effective == 2000
    assert est_l.truncation_fraction == est_g.truncation_fraction


def test_config_validation():
    with pytest.raises(ValueError, match="n_paths"):
        SimConfig(n_paths=0)
    with pytest.raises(ValueError, match="dt"):
        SimConfig(n_paths=10, dt=0.0)
    with pytest.raises(ValueError, match="horizon"):
        SimConfig(n_paths=10, horizon=-1.0)
    with pytest.raises(ValueError, match="batch_size"):
        SimConfig(n_paths=10, batch_size=0)


def test_argument_validation():
    cfg = SimConfig(n_paths=10, dt=0.1, horizon=1.0)
    with pytest.raises(ValueError, match="negative"):
        simulate_hit(BM, 1.0, 0.0, cfg)
    with pytest.raises(ValueError, match="r must be positive"):
        hitting_estimates(BM, 0.0, [-1.0], cfg)
    with pytest.raises(ValueError, match="negative"):
        hitting_estimates(BM, 1.0, [-1.0, 0.5], cfg)
    with pytest.raises(ValueError, match="positive"):
        policy_value(BM_SPEC, -0.1, cfg)
    with pytest.raises(ValueError, match="ascending"):
        sweep(BM_SPEC, [0.5, 0.3], cfg)
    with pytest.raises(ValueError, match="positive"):
        sweep(BM_SPEC, [-0.5, 0.3], cfg)
    with pytest.raises(ValueError, match="non-empty"):
        sweep(BM_SPEC, [], cfg)
    res = threshold(BM_SPEC)
    with pytest.raises(ValueError, match="descending"):
        epsilon_stop_paths(BM_SPEC, res, [1e-3, 1e-2], cfg)
    with pytest.raises(ValueError, match="positive"):
        epsilon_stop_paths(BM_SPEC, res, [1e-2, -1e-3], cfg)
    with pytest.raises(ValueError, match="r > psi"):
        class_d_diagnostic(BM, 0.3, [2, 4], cfg)
    with pytest.raises(ValueError, match="increasing"):
        class_d_diagnostic(BM, 1.0, [4, 2], cfg)
    with pytest.raises(ValueError, match=">= 1"):
        class_d_diagnostic(BM, 1.0, [0, 2], cfg)
    with pytest.raises(ValueError, match="t must be positive"):
        sample_increment(BM, 0.0, 10, seed=1)
