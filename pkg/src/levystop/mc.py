"""Monte Carlo oracle for every closed form in the package.

One vectorised first-passage engine drives all estimators.  Paths of X are
advanced on a global dt grid; within a step, jump times are drawn exactly
from the exponential clock and split the step, so jumps carry no
discretisation error.  Diffusion segments get an optional Brownian-bridge
crossing test between endpoints (an Exp(1) draw per segment; the draw is
consumed whether or not the correction is enabled, so bridge on/off runs
share identical randomness path by path).

Several downward levels are monitored in one pass, sorted shallowest first:
a cascade advances each path's pending-level pointer while the current
segment (or jump) still crosses the next level.  Sharing one pass across
levels is what makes the b-sweep exact common random numbers.

Reproducibility contract: paths are partitioned into fixed batches of
``cfg.batch_size``; batch i uses the i-th spawn of SeedSequence(cfg.seed)
and batches are reduced in index order, so results are bit-identical for a
given config regardless of the LEVYSTOP_THREADS worker count (they do
depend on batch_size, which is part of the config).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .engine import ThresholdResult, epsilon_region, value_function
from .models import (BrownianDrift, ExpJD, KouJD, LevyModel, NegPoisson,
                     ProblemSpec, SpectNegKou, psi1)

__all__ = [
    "ClassDResult",
    "EpsilonStopResult",
    "McEstimate",
    "PolicyValue",
    "SimConfig",
    "SweepResult",
    "class_d_diagnostic",
    "epsilon_stop_paths",
    "hitting_estimates",
    "policy_value",
    "sample_increment",
    "simulate_hit",
    "sweep",
]


@dataclass(frozen=True)
class SimConfig:
    """Simulation budget and numerical knobs.

    ``horizon`` None resolves to 50 / (r - psi(1)) at the point of use, so
    the discounted truncation error is below e^-50.  ``batch_size`` fixes
    the path partition the reproducibility contract is stated over.
    """

    n_paths: int
    dt: float = 1e-3
    horizon: Optional[float] = None
    seed: int = 0
    bridge_correction: bool = True
    batch_size: int = 16384

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon is not None and self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error and truncation bookkeeping.

    Every path contributes to the mean (truncated ones through the
    convention of the functional at hand), so ``n_effective`` equals the
    path count; ``truncation_fraction`` reports how many paths ran into the
    horizon cap.
    """

    mean: float
    std_error: float
    n_effective: int
    truncation_fraction: float


def _estimate(values: np.ndarray, truncated: float) -> McEstimate:
    n = values.size
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(mean=float(np.mean(values)), std_error=se,
                      n_effective=n, truncation_fraction=float(truncated))


def _resolve_horizon(cfg: SimConfig, r: float, growth: float) -> float:
    if cfg.horizon is not None:
        return float(cfg.horizon)
    gap = r - growth if growth < r else r
    return 50.0 / gap


def _thread_count() -> int:
    raw = os.environ.get("LEVYSTOP_THREADS", "")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class _Dynamics:
    """Simulation-level description of X, decoupled from model validation.

    ``kind`` picks the jump mechanism: none, two (double exponential), up
    or down (one-sided exponential), unit_down or unit_up (Poisson counter).
    The class-D diagnostic simulates rt - X, which ``mirrored`` produces
    even when the mirror image is not a constructible model family.
    """

    m: float
    sigma: float
    a: float
    kind: str
    p: float = 0.0
    eta1: float = 1.0
    eta2: float = 1.0

    @staticmethod
    def from_model(model: LevyModel) -> "_Dynamics":
        if isinstance(model, BrownianDrift):
            return _Dynamics(model.m, model.sigma, 0.0, "none")
        if isinstance(model, KouJD):
            return _Dynamics(model.m, model.sigma, model.a, "two",
                             p=model.p, eta1=model.eta1, eta2=model.eta2)
        if isinstance(model, ExpJD):
            return _Dynamics(model.m, model.sigma, model.a, "up",
                             eta1=model.eta1)
        if isinstance(model, NegPoisson):
            return _Dynamics(0.0, 0.0, model.a, "unit_down")
        if isinstance(model, SpectNegKou):
            return _Dynamics(model.m, model.sigma, model.a, "down",
                             eta2=model.eta2)
        raise TypeError(f"not a Levy model: {model!r}")

    def mirrored(self, drift: float) -> "_Dynamics":
        """Dynamics of Y_t = drift * t - X_t (up and down jumps swap)."""
        flip = {"none": "none", "two": "two", "up": "down", "down": "up",
                "unit_down": "unit_up", "unit_up": "unit_down"}
        return _Dynamics(m=drift - self.m, sigma=self.sigma, a=self.a,
                         kind=flip[self.kind],
                         p=1.0 - self.p if self.kind == "two" else self.p,
                         eta1=self.eta2, eta2=self.eta1)


def _draw_jumps(dyn: _Dynamics, rng: np.random.Generator,
                k: int) -> np.ndarray:
    if dyn.kind == "two":
        up = rng.random(k) < dyn.p
        mag = rng.standard_exponential(k)
        return np.where(up, mag / dyn.eta1, -mag / dyn.eta2)
    if dyn.kind == "up":
        return rng.standard_exponential(k) / dyn.eta1
    if dyn.kind == "down":
        return -rng.standard_exponential(k) / dyn.eta2
    if dyn.kind == "unit_down":
        return np.full(k, -1.0)
    if dyn.kind == "unit_up":
        return np.full(k, 1.0)
    raise ValueError(f"unknown jump kind {dyn.kind!r}")


@dataclass
class PassageRecord:
    """Per-path first-passage data for a descending ladder of levels.

    ``tau[j]`` is the passage time of level j, or the horizon where the
    path never got there (``hit[j]`` False).  For jump crossings ``x_hit``
    carries the post-jump overshoot value; diffusion crossings sit exactly
    on the level.  ``disc_exp_int[j]`` is int_0^{tau_j ^ horizon}
    e^{-r s + X_s} ds and ``final_int`` the same integral at the horizon,
    both present only when the integral was requested.
    """

    levels: np.ndarray
    tau: np.ndarray
    x_hit: np.ndarray
    hit: np.ndarray
    disc_exp_int: Optional[np.ndarray]
    final_int: Optional[np.ndarray]


def _diffusive_batch(dyn: _Dynamics, r_disc: float, levels: np.ndarray,
                     horizon: float, dt: float, bridge: bool,
                     want_integral: bool, abandon_level: Optional[float],
                     rng: np.random.Generator, n: int) -> Tuple[np.ndarray, ...]:
    n_levels = len(levels)
    tau = np.full((n_levels, n), horizon)
    x_hit = np.zeros((n_levels, n))
    hit = np.zeros((n_levels, n), dtype=bool)
    a_at = np.zeros((n_levels, n)) if want_integral else None
    a_final = np.zeros(n) if want_integral else None

    # Compact per-lane state; idx maps lanes back to path slots.  dx caches
    # the discounted integrand e^{X_s - r s}, so each diffusion segment
    # costs a single vector exp.
    idx = np.arange(n)
    x = np.zeros(n)
    dx = np.ones(n) if want_integral else None
    acc = np.zeros(n) if want_integral else None
    pend = np.zeros(n, dtype=np.int64)
    has_jumps = dyn.a > 0
    next_jump = rng.standard_exponential(n) / dyn.a if has_jumps else None
    half_var = 0.5 * dyn.sigma * dyn.sigma

    def advance(sel, t0, t1) -> None:
        """Diffuse from t0 to t1 (scalars or per-lane arrays), cascading.

        ``sel`` None means every live lane.  One normal and one Exp(1) draw
        per lane are consumed whether or not the bridge correction fires,
        so runs with it on and off share randomness draw for draw.  The
        Exp(1) draw is the bridge minimum in disguise: P(min <= l | x0, x1)
        = exp(-2 (x0-l)(x1-l) / (sigma^2 delta)), so thresholding one
        shared draw samples the joint crossing indicator across all pending
        levels from its exact law.  Crossing times are interpolated
        (linearly for direct crossings, midpoint for bridge catches), which
        keeps the O(dt) timing bias of the segment-end convention out of
        the discount factors.
        """
        nonlocal x, dx, acc
        k = idx.size if sel is None else sel.size
        z = rng.standard_normal(k)
        expo = rng.standard_exponential(k)
        scalar_t = np.isscalar(t0)
        delta = t1 - t0
        x0 = x if sel is None else x[sel]
        incr = dyn.m * delta + dyn.sigma * np.sqrt(delta) * z
        x1 = x0 + incr
        if want_integral:
            dx1 = (dx if sel is None else dx[sel]) * np.exp(incr
                                                            - r_disc * delta)
        pend_s = pend if sel is None else pend[sel]
        cas = np.flatnonzero(pend_s < n_levels)
        floor_t = None
        while cas.size:
            lanes = cas if sel is None else sel[cas]
            lev = levels[pend[lanes]]
            x0c = x0[cas]
            x1c = x1[cas]
            direct = x1c <= lev
            if bridge:
                gap = expo[cas] * half_var * (delta if scalar_t
                                              else delta[cas])
                crossed = direct | ((~direct) & (gap > (x0c - lev)
                                                 * (x1c - lev)))
            else:
                crossed = direct
            if not crossed.any():
                break
            cpos = cas[crossed]
            clanes = cpos if sel is None else sel[cpos]
            t0c = t0 if scalar_t else t0[cpos]
            deltac = delta if scalar_t else delta[cpos]
            x0cc = x0[cpos]
            x1cc = x1[cpos]
            levc = levels[pend[clanes]]
            frac = np.where(x1cc <= levc,
                            (x0cc - levc) / np.maximum(x0cc - x1cc, 1e-300),
                            0.5)
            t_cross = t0c + deltac * np.clip(frac, 0.0, 1.0)
            # Per-path tau must be nondecreasing in depth even when a late
            # direct crossing is followed by a midpoint bridge catch.
            if floor_t is None:
                floor_t = np.zeros(k)
            else:
                t_cross = np.maximum(t_cross, floor_t[cpos])
            floor_t[cpos] = t_cross
            j = pend[clanes]
            slot = idx[clanes]
            tau[j, slot] = t_cross
            x_hit[j, slot] = levc
            hit[j, slot] = True
            if want_integral:
                a_at[j, slot] = acc[clanes] + (t_cross - t0c) * 0.5 * (
                    dx[clanes] + np.exp(levc - r_disc * t_cross))
            pend[clanes] += 1
            cas = cpos[pend[clanes] < n_levels]
        if sel is None:
            if want_integral:
                acc += delta * 0.5 * (dx + dx1)
                dx = dx1
            x = x1
        else:
            if want_integral:
                acc[sel] += delta * 0.5 * (dx[sel] + dx1)
                dx[sel] = dx1
            x[sel] = x1

    def jump_cascade(lanes: np.ndarray, t_jump: np.ndarray) -> None:
        """Record passages caused by a jump landing at or below levels."""
        alive = pend[lanes] < n_levels
        lanes = lanes[alive]
        t_jump = t_jump[alive]
        while lanes.size:
            crossed = x[lanes] <= levels[pend[lanes]]
            if not crossed.any():
                break
            clanes = lanes[crossed]
            tc = t_jump[crossed]
            j = pend[clanes]
            slot = idx[clanes]
            tau[j, slot] = tc
            x_hit[j, slot] = x[clanes]
            hit[j, slot] = True
            if want_integral:
                a_at[j, slot] = acc[clanes]
            pend[clanes] += 1
            keep = pend[clanes] < n_levels
            lanes = clanes[keep]
            t_jump = tc[keep]

    t = 0.0
    while idx.size and t < horizon:
        t_end = min(t + dt, horizon)
        seg_t = None
        if has_jumps:
            due = np.flatnonzero(next_jump <= t_end)
            if due.size:
                seg_t = np.full(idx.size, t)
                while due.size:
                    advance(due, seg_t[due], next_jump[due])
                    seg_t[due] = next_jump[due]
                    jumps = _draw_jumps(dyn, rng, due.size)
                    x[due] += jumps
                    if want_integral:
                        dx[due] *= np.exp(jumps)
                    jump_cascade(due, seg_t[due])
                    next_jump[due] += rng.standard_exponential(due.size) / dyn.a
                    due = due[next_jump[due] <= t_end]
        if seg_t is None:
            advance(None, t, t_end)
        else:
            advance(None, seg_t, t_end)
        t = t_end
        retire = pend >= n_levels
        if abandon_level is not None:
            retire |= x >= abandon_level
        if retire.any():
            if want_integral:
                a_final[idx[retire]] = acc[retire]
            keep = ~retire
            idx = idx[keep]
            x = x[keep]
            pend = pend[keep]
            if want_integral:
                dx = dx[keep]
                acc = acc[keep]
            if has_jumps:
                next_jump = next_jump[keep]
    if want_integral and idx.size:
        a_final[idx] = acc
    return tau, x_hit, hit, a_at, a_final


def _unit_down_batch(dyn: _Dynamics, r_disc: float, levels: np.ndarray,
                     horizon: float, want_integral: bool,
                     rng: np.random.Generator,
                     n: int) -> Tuple[np.ndarray, ...]:
    """Exact event-driven sampler for X = -(Poisson counter).

    The j-th level is crossed at the ceil(-level_j)-th jump; jump times are
    partial sums of Exp(a) gaps, and the discounted integral is a sum of
    closed-form segment contributions, so there is no dt error at all.
    """
    ks = np.ceil(-levels).astype(np.int64)
    k_deep = int(ks.max())
    # Integral contributions past k jumps decay like e^{-k}; 45 extra jump
    # segments put the neglected tail below 1e-19 of the total.
    k_big = max(k_deep, 45) if want_integral else k_deep
    gaps = rng.standard_exponential((n, k_big)) / dyn.a
    times = np.cumsum(gaps, axis=1)
    n_levels = len(levels)
    tau = np.empty((n_levels, n))
    x_hit = np.zeros((n_levels, n))
    hit = np.empty((n_levels, n), dtype=bool)
    a_at = np.zeros((n_levels, n)) if want_integral else None
    a_final = None
    if want_integral:
        clipped = np.minimum(times, horizon)
        starts = np.concatenate([np.zeros((n, 1)), clipped[:, :-1]], axis=1)
        weights = np.exp(-np.arange(k_big, dtype=float))
        segments = weights * (np.exp(-r_disc * starts)
                              - np.exp(-r_disc * clipped)) / r_disc
        cum = np.cumsum(segments, axis=1)
        tail = (math.exp(-k_big)
                * (np.exp(-r_disc * clipped[:, -1])
                   - math.exp(-r_disc * horizon)) / r_disc)
        a_final = cum[:, -1] + tail
    for j, k_level in enumerate(ks):
        t_k = times[:, k_level - 1]
        level_hit = t_k <= horizon
        tau[j] = np.where(level_hit, t_k, horizon)
        x_hit[j] = np.where(level_hit, -float(k_level), 0.0)
        hit[j] = level_hit
        if want_integral:
            # Clipped partial sums make this int_0^{tau_j ^ horizon} exactly.
            a_at[j] = cum[:, k_level - 1]
    return tau, x_hit, hit, a_at, a_final


def _all_miss_batch(levels: np.ndarray, horizon: float, n: int
                    ) -> Tuple[np.ndarray, ...]:
    n_levels = len(levels)
    return (np.full((n_levels, n), horizon), np.zeros((n_levels, n)),
            np.zeros((n_levels, n), dtype=bool), None, None)


def _simulate_levels(dyn: _Dynamics, r_disc: float, levels: Sequence[float],
                     horizon: float, cfg: SimConfig, want_integral: bool,
                     abandon_level: Optional[float] = None) -> PassageRecord:
    levels_arr = np.asarray(levels, dtype=float)
    if levels_arr.ndim != 1 or levels_arr.size == 0:
        raise ValueError("levels must be a non-empty 1-d sequence")
    if np.any(levels_arr >= 0):
        raise ValueError("passage levels must be negative")
    if np.any(np.diff(levels_arr) > 0):
        raise ValueError("levels must be sorted descending (shallowest first)")
    if dyn.sigma == 0 and dyn.kind not in ("unit_down", "unit_up"):
        raise ValueError("pure-drift dynamics are not supported")

    n = cfg.n_paths
    n_levels = levels_arr.size
    sizes = [cfg.batch_size] * (n // cfg.batch_size)
    if n % cfg.batch_size:
        sizes.append(n % cfg.batch_size)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    children = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    tau = np.empty((n_levels, n))
    x_hit = np.empty((n_levels, n))
    hit = np.empty((n_levels, n), dtype=bool)
    a_at = np.empty((n_levels, n)) if want_integral else None
    a_final = np.empty(n) if want_integral else None

    def run(i: int) -> None:
        rng = np.random.Generator(np.random.Philox(children[i]))
        if dyn.kind == "unit_down":
            out = _unit_down_batch(dyn, r_disc, levels_arr, horizon,
                                   want_integral, rng, sizes[i])
        elif dyn.sigma == 0 and dyn.kind == "unit_up":
            # Nondecreasing paths never reach a negative level.
            out = _all_miss_batch(levels_arr, horizon, sizes[i])
        else:
            out = _diffusive_batch(dyn, r_disc, levels_arr, horizon, cfg.dt,
                                   cfg.bridge_correction, want_integral,
                                   abandon_level, rng, sizes[i])
        lo, hi = offsets[i], offsets[i + 1]
        tau[:, lo:hi], x_hit[:, lo:hi], hit[:, lo:hi] = out[0], out[1], out[2]
        if want_integral:
            if out[3] is None or out[4] is None:
                raise ValueError("integral functional unavailable for "
                                 f"{dyn.kind} dynamics")
            a_at[:, lo:hi] = out[3]
            a_final[lo:hi] = out[4]

    workers = _thread_count()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(len(sizes))))
    else:
        for i in range(len(sizes)):
            run(i)
    return PassageRecord(levels=levels_arr, tau=tau, x_hit=x_hit, hit=hit,
                         disc_exp_int=a_at, final_int=a_final)


def hitting_estimates(model: LevyModel, r: float, levels: Sequence[float],
                      cfg: SimConfig) -> List[Tuple[McEstimate, McEstimate]]:
    """Estimates of (L, G) at each negative level, one path set for all.

    Paths that outlive the horizon contribute 0 to both functionals, which
    biases the estimates down by at most e^{-r T} per truncated path; the
    truncation fraction is reported so callers can budget for it.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    levels_arr = np.asarray(levels, dtype=float)
    if np.any(levels_arr >= 0):
        raise ValueError("levels must be negative")
    order = np.argsort(-levels_arr, kind="stable")
    dyn = _Dynamics.from_model(model)
    horizon = _resolve_horizon(cfg, r, psi1(model))
    record = _simulate_levels(dyn, r, levels_arr[order], horizon, cfg,
                              want_integral=False)
    out: List[Optional[Tuple[McEstimate, McEstimate]]]
    out = [None] * levels_arr.size
    for pos, orig in enumerate(order):
        disc = np.where(record.hit[pos],
                        np.exp(-r * record.tau[pos]), 0.0)
        joint = np.where(record.hit[pos],
                         np.exp(-r * record.tau[pos] + record.x_hit[pos]),
                         0.0)
        truncated = 1.0 - float(np.mean(record.hit[pos]))
        out[orig] = (_estimate(disc, truncated), _estimate(joint, truncated))
    return out


def simulate_hit(model: LevyModel, r: float, x_level: float,
                 cfg: SimConfig) -> Tuple[McEstimate, McEstimate]:
    """(L, G) estimates at one strictly negative level."""
    if x_level >= 0:
        raise ValueError("x_level must be negative; the passage is "
                         "immediate otherwise")
    return hitting_estimates(model, r, [x_level], cfg)[0]


@dataclass(frozen=True)
class PolicyValue:
    """The stop-at-b policy value estimated two ways.

    ``direct`` integrates e^{-rs} (alpha V_s - c) along each path;
    ``stopped`` uses the equivalent stopped form
    alpha v/(r - psi(1)) - c/r + E[e^{-r tau} f(V_tau)].  Disagreement
    beyond 4 joint standard errors (``reconciled`` False) flags a bug.
    """

    b: float
    direct: McEstimate
    stopped: McEstimate
    diff_mean: float
    diff_se: float

    @property
    def reconciled(self) -> bool:
        return abs(self.diff_mean) <= 4.0 * self.diff_se


def _policy_values(spec: ProblemSpec, record: PassageRecord, j: int
                   ) -> Tuple[np.ndarray, np.ndarray]:
    r, alpha, c, v = spec.r, spec.alpha, spec.c, spec.v
    growth = spec.psi1
    tau = record.tau[j]
    hit = record.hit[j]
    integral = np.where(hit, record.disc_exp_int[j], record.final_int)
    direct = alpha * v * integral - c * (1.0 - np.exp(-r * tau)) / r
    v_stop = v * np.exp(record.x_hit[j])
    f_stop = -alpha * v_stop / (r - growth) + c / r
    stopped = (alpha * v / (r - growth) - c / r
               + np.where(hit, np.exp(-r * tau) * f_stop, 0.0))
    return direct, stopped


def policy_value(spec: ProblemSpec, b: float, cfg: SimConfig) -> PolicyValue:
    """Estimate E_v[int_0^{tau_b} e^{-rs}(alpha V_s - c) ds] two ways."""
    if b <= 0:
        raise ValueError("b must be positive")
    zero = McEstimate(0.0, 0.0, cfg.n_paths, 0.0)
    if b >= spec.v:
        return PolicyValue(b=b, direct=zero, stopped=zero,
                           diff_mean=0.0, diff_se=0.0)
    dyn = _Dynamics.from_model(spec.model)
    horizon = _resolve_horizon(cfg, spec.r, spec.psi1)
    record = _simulate_levels(dyn, spec.r, [math.log(b / spec.v)], horizon,
                              cfg, want_integral=True)
    direct, stopped = _policy_values(spec, record, 0)
    truncated = 1.0 - float(np.mean(record.hit[0]))
    diff = direct - stopped
    diff_se = (float(np.std(diff, ddof=1) / math.sqrt(diff.size))
               if diff.size > 1 else 0.0)
    return PolicyValue(b=b, direct=_estimate(direct, truncated),
                       stopped=_estimate(stopped, truncated),
                       diff_mean=float(np.mean(diff)), diff_se=diff_se)


@dataclass
class SweepResult:
    """Common-random-numbers policy sweep over an ascending b grid.

    ``values`` holds the per-path direct estimates, one row per b, enabling
    paired comparisons: ``flat`` marks levels whose deficit to the argmax
    is within one paired standard error.
    """

    b_grid: np.ndarray
    estimates: List[McEstimate]
    argmax_index: int
    argmax_b: float
    flat: np.ndarray
    values: np.ndarray

    def flat_interval(self) -> Tuple[float, float]:
        """Smallest and largest flat b (the +-1 SE plateau around argmax)."""
        flat_b = self.b_grid[self.flat]
        return float(flat_b.min()), float(flat_b.max())


def sweep(spec: ProblemSpec, b_grid: Sequence[float],
          cfg: SimConfig) -> SweepResult:
    """Paired estimates of the policy value on every b in one path set."""
    grid = np.asarray(b_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("b_grid must be a non-empty 1-d sequence")
    if np.any(grid <= 0):
        raise ValueError("b values must be positive")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("b_grid must be strictly ascending")
    active = grid < spec.v
    values = np.zeros((grid.size, cfg.n_paths))
    truncated = np.zeros(grid.size)
    if active.any():
        # Ascending b below v means descending passage levels already.
        act_idx = np.flatnonzero(active)[::-1]
        levels = np.log(grid[act_idx] / spec.v)
        dyn = _Dynamics.from_model(spec.model)
        horizon = _resolve_horizon(cfg, spec.r, spec.psi1)
        record = _simulate_levels(dyn, spec.r, levels, horizon, cfg,
                                  want_integral=True)
        for pos, orig in enumerate(act_idx):
            direct, _ = _policy_values(spec, record, pos)
            values[orig] = direct
            truncated[orig] = 1.0 - float(np.mean(record.hit[pos]))
    estimates = [_estimate(values[i], truncated[i])
                 for i in range(grid.size)]
    means = np.array([e.mean for e in estimates])
    arg = int(np.argmax(means))
    diffs = values[arg][None, :] - values
    diff_se = np.std(diffs, ddof=1, axis=1) / math.sqrt(cfg.n_paths)
    flat = (means[arg] - means) <= diff_se
    return SweepResult(b_grid=grid, estimates=estimates, argmax_index=arg,
                       argmax_b=float(grid[arg]), flat=flat, values=values)


@dataclass
class EpsilonStopResult:
    """Stopping times of the eps-suboptimal rules, largest eps first.

    ``tau`` is the per-path matrix of capped stopping times aligned with
    ``eps_list``; descending eps shrinks the stop region, so each row
    dominates the previous one path by path.
    """

    eps_list: np.ndarray
    boundaries: np.ndarray
    estimates: List[McEstimate]
    tau: np.ndarray


def epsilon_stop_paths(spec: ProblemSpec, result: ThresholdResult,
                       eps_list: Sequence[float],
                       cfg: SimConfig) -> EpsilonStopResult:
    """Mean entry time into each eps-region, all eps on shared paths."""
    eps_arr = np.asarray(eps_list, dtype=float)
    if eps_arr.ndim != 1 or eps_arr.size == 0:
        raise ValueError("eps_list must be a non-empty 1-d sequence")
    if np.any(eps_arr <= 0):
        raise ValueError("eps values must be positive")
    if np.any(np.diff(eps_arr) >= 0):
        raise ValueError("eps_list must be strictly descending")
    vf = value_function(spec, result)
    bounds = np.array([epsilon_region(spec, result, e, vf) for e in eps_arr])
    horizon = _resolve_horizon(cfg, spec.r, spec.psi1)
    tau = np.zeros((eps_arr.size, cfg.n_paths))
    active = bounds < spec.v
    if active.any():
        act_idx = np.flatnonzero(active)
        levels = np.log(bounds[act_idx] / spec.v)
        dyn = _Dynamics.from_model(spec.model)
        record = _simulate_levels(dyn, spec.r, levels, horizon, cfg,
                                  want_integral=False)
        tau[act_idx] = record.tau
    hit_frac = np.mean(tau < horizon, axis=1)
    estimates = [_estimate(tau[i], 1.0 - float(hit_frac[i]))
                 for i in range(eps_arr.size)]
    return EpsilonStopResult(eps_list=eps_arr, boundaries=bounds,
                             estimates=estimates, tau=tau)


@dataclass
class ClassDResult:
    """Ladder of E[e^{-r R_n + X_{R_n}}; R_n finite] estimates.

    R_n is the first time the discounted price e^{-rt+X_t} reaches n.  The
    expectation falling to 0 along a geometric ladder of n is the
    uniform-integrability evidence behind the Snell-envelope argument.
    """

    n_values: np.ndarray
    estimates: List[McEstimate]

    def loglog_slope(self) -> float:
        ns = self.n_values.astype(float)
        means = np.array([e.mean for e in self.estimates])
        if np.any(means <= 0):
            raise ArithmeticError("cannot fit a log-log slope through a "
                                  "zero estimate; increase n_paths")
        return float(np.polyfit(np.log(ns), np.log(means), 1)[0])


def class_d_diagnostic(model: LevyModel, r: float, n_levels: Sequence[int],
                       cfg: SimConfig,
                       abandon_depth: float = 10.0) -> ClassDResult:
    """Estimate the class-D ladder by simulating Y = rt - X downward.

    e^{-rt+X_t} >= n exactly when Y_t <= -ln n, and the payoff at passage
    is e^{-Y}; a diffusion crossing lands on -ln n so its payoff is n with
    no variance beyond the hit indicator.  When the mirrored drift is
    positive, paths that climb ``abandon_depth`` above the start are
    abandoned as misses (recovery probability <= e^{-2 m D / sigma^2}).
    """
    growth = psi1(model)
    if r <= growth:
        raise ValueError(f"class-D ladder needs r > psi(1) = {growth:.6g}")
    ns = np.asarray(n_levels, dtype=np.int64)
    if np.any(ns < 1):
        raise ValueError("ladder values must be integers >= 1")
    if np.any(np.diff(ns) <= 0):
        raise ValueError("ladder must be strictly increasing")
    dyn = _Dynamics.from_model(model).mirrored(r)
    horizon = _resolve_horizon(cfg, r, growth)
    estimates: List[Optional[McEstimate]] = [None] * ns.size
    sim_idx = np.flatnonzero(ns > 1)
    for i in np.flatnonzero(ns == 1):
        # Level 0 is hit at time 0 with payoff e^0 = 1, path-independent.
        estimates[i] = McEstimate(1.0, 0.0, cfg.n_paths, 0.0)
    if sim_idx.size:
        levels = -np.log(ns[sim_idx].astype(float))
        abandon = abandon_depth if (dyn.m > 0 and dyn.sigma > 0) else None
        record = _simulate_levels(dyn, 0.0, levels, horizon, cfg,
                                  want_integral=False,
                                  abandon_level=abandon)
        for pos, orig in enumerate(sim_idx):
            payoff = np.where(record.hit[pos],
                              np.exp(-record.x_hit[pos]), 0.0)
            truncated = 1.0 - float(np.mean(record.hit[pos]))
            estimates[orig] = _estimate(payoff, truncated)
    return ClassDResult(n_values=ns, estimates=estimates)


def sample_increment(model: LevyModel, t: float, n: int,
                     seed: int) -> np.ndarray:
    """n exact draws of X_t (no discretisation), for distribution tests."""
    if t <= 0:
        raise ValueError("t must be positive")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    dyn = _Dynamics.from_model(model)
    x = dyn.m * t + dyn.sigma * math.sqrt(t) * rng.standard_normal(n)
    if dyn.a > 0:
        counts = rng.poisson(dyn.a * t, n)
        if dyn.kind == "two":
            ups = rng.binomial(counts, dyn.p)
            x = x + (rng.standard_gamma(ups) / dyn.eta1
                     - rng.standard_gamma(counts - ups) / dyn.eta2)
        elif dyn.kind == "up":
            x = x + rng.standard_gamma(counts) / dyn.eta1
        elif dyn.kind == "down":
            x = x - rng.standard_gamma(counts) / dyn.eta2
        elif dyn.kind == "unit_down":
            x = x - counts
        else:
            x = x + counts
    return x
