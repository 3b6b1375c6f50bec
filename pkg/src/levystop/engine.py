"""Optimal threshold, value function, and the diagnostics behind them.

The liquidation problem sup_tau E[int_0^tau e^{-rs} (alpha V_s - c) ds] is
solved by stopping the first time V drops to B_c.  Writing
f(v) = -alpha v / (r - psi(1)) + c / r, the stop-at-b policy is worth
w_b(v) = -f(v) + g(v, b), and the optimal level is

    B_c = c (r - psi(1)) / (r alpha) * lim_{x -> 0-} (1 - L(x)) / (1 - G(x)).

For every family except the pure Poisson counter the transforms are smooth
at 0 and the limit is the derivative ratio L'(0-) / G'(0-) ("G-continuous"
regime); the counter's transforms jump at 0 and the limit is the jump ratio
("G-discontinuous" regime).  Both regimes share one value-function code
path: the per-family formulas survive only as oracles in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq

from .models import (BrownianDrift, ExpJD, KouJD, LevyModel, NegPoisson,
                     ProblemSpec, SpectNegKou, phi, psi1)
from .roots import emery_root, kou_roots
from .transforms import (HittingTransforms, brownian_passage_rate,
                         candidate_value)

__all__ = ["ConvexityReport", "ThresholdResult", "ValueFunction",
           "convexity_report", "epsilon_region", "threshold",
           "value_function"]

ArrayLike = Union[float, np.ndarray]

G_CONTINUOUS = "G-continuous"
G_DISCONTINUOUS = "G-discontinuous"


@dataclass(frozen=True)
class ThresholdResult:
    """Optimal threshold plus the quantities that produced it.

    ``slope_ratio`` is lim_{x->0-} (1 - L(x)) / (1 - G(x)): a derivative
    ratio in the G-continuous regime, a jump ratio otherwise.  ``psi_one``
    is the exponent value psi(1) (not a characteristic root).  ``roots``
    records the characteristic roots the closed form consumed, ascending;
    families whose formula runs off phi(r) alone leave it None.
    """

    b_c: float
    regime: str
    slope_ratio: float
    psi_one: float
    phi_r: Optional[float]
    roots: Optional[tuple]
    b_upper: float

    def to_json_dict(self) -> dict:
        return {
            "b_c": self.b_c,
            "regime": self.regime,
            "psi1": self.psi_one,
            "phi_r": self.phi_r,
            "roots": None if self.roots is None else list(self.roots),
            "slope_ratio": self.slope_ratio,
        }


def threshold(spec: ProblemSpec) -> ThresholdResult:
    """Optimal liquidation level B_c for ``spec``.

    Pure closed forms: root finding on scalars only, no scale-function
    tables, so this is cheap enough to call in tight loops.
    """
    model = spec.model
    r = spec.r
    growth = spec.psi1
    bound = spec.b_upper
    phi_r: Optional[float] = None
    roots_used: Optional[tuple] = None
    regime = G_CONTINUOUS
    if isinstance(model, BrownianDrift):
        rate = brownian_passage_rate(model.m, model.sigma, r)
        ratio = rate / (rate + 1.0)
        phi_r = phi(model, r)
    elif isinstance(model, KouJD):
        kr = kou_roots(model, r)
        ratio = (kr.psi2 * kr.psi3 * (model.eta2 + 1.0)
                 / (model.eta2 * (1.0 - kr.psi2) * (1.0 - kr.psi3)))
        roots_used = kr.ordered()
    elif isinstance(model, ExpJD):
        lam_bar = emery_root(model, r).lam_bar
        ratio = lam_bar / (lam_bar + 1.0)
        roots_used = (-lam_bar,)
    elif isinstance(model, NegPoisson):
        regime = G_DISCONTINUOUS
        gamma_lap = model.a / (r + model.a)
        gamma_joint = gamma_lap / math.e
        ratio = (1.0 - gamma_lap) / (1.0 - gamma_joint)
    elif isinstance(model, SpectNegKou):
        phi_r = phi(model, r)
        ratio = r * (phi_r - 1.0) / (phi_r * (r - growth))
    else:
        raise TypeError(f"cannot detect threshold regime for {model!r}")
    b_c = bound * ratio
    if not 0.0 < b_c < bound:
        raise ArithmeticError(f"threshold {b_c} escaped (0, {bound})")
    return ThresholdResult(b_c=b_c, regime=regime, slope_ratio=ratio,
                           psi_one=growth, phi_r=phi_r, roots=roots_used,
                           b_upper=bound)


class ValueFunction:
    """Evaluator for the optimal value w and its companions s and f.

    s(v) = g(v, B_c) is the expected discounted shortfall of the optimal
    policy, decreasing and convex with 0 <= s <= c/r; f is the affine
    immediate-shortfall line; w = s - f is the problem value, zero on the
    stopping region (0, B_c] and positive beyond it.
    """

    def __init__(self, spec: ProblemSpec, result: ThresholdResult,
                 transforms: HittingTransforms) -> None:
        self.spec = spec
        self.result = result
        self.transforms = transforms

    @property
    def b_c(self) -> float:
        return self.result.b_c

    def f(self, v: ArrayLike) -> ArrayLike:
        v_arr = np.asarray(v, dtype=float)
        out = (-self.spec.alpha * v_arr / (self.spec.r - self.spec.psi1)
               + self.spec.c / self.spec.r)
        return float(out) if np.ndim(v) == 0 else out

    def s(self, v: ArrayLike) -> ArrayLike:
        return candidate_value(self.spec, self.b_c, v, self.transforms)

    def __call__(self, v: ArrayLike) -> ArrayLike:
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr <= 0):
            raise ValueError("v must be positive")
        w = np.asarray(self.s(v_arr)) - np.asarray(self.f(v_arr))
        out = np.where(v_arr <= self.b_c, 0.0, w)
        return float(out) if np.ndim(v) == 0 else out


def value_function(spec: ProblemSpec,
                   result: Optional[ThresholdResult] = None) -> ValueFunction:
    """Build the value-function evaluator (one transform table, reused)."""
    if result is None:
        result = threshold(spec)
    return ValueFunction(spec, result, HittingTransforms(spec.model, spec.r))


@dataclass(frozen=True)
class ConvexityReport:
    """Grid verification of the optimality hypotheses at the threshold.

    ``min_second_diff`` is the smallest centred second difference of
    s = g(., B_c) on the grid (positive means convex there);
    ``tangency_gap`` is |d/dv s(B_c+) - f'|, which vanishes under smooth
    fit.  ``ok`` summarises both checks.
    """

    family: str
    b_c: float
    min_second_diff: float
    tangency_gap: float
    convex_ok: bool
    tangency_ok: bool

    @property
    def ok(self) -> bool:
        return self.convex_ok and self.tangency_ok


def convexity_report(spec: ProblemSpec,
                     result: Optional[ThresholdResult] = None, *,
                     n_grid: int = 1000, span: float = 10.0,
                     tangency_tol: float = 1e-6,
                     on_failure: str = "raise") -> ConvexityReport:
    """Check convexity of s beyond B_c and the smooth-fit tangency.

    Applies to the G-continuous regime only; the theory for the pure
    counter rests on the jump ratio instead, and its s has kinks.  With
    ``on_failure="raise"`` (default) a violated hypothesis raises, since
    the optimality argument has no fallback; ``"report"`` returns the
    diagnostics regardless.
    """
    if on_failure not in ("raise", "report"):
        raise ValueError("on_failure must be 'raise' or 'report'")
    if result is None:
        result = threshold(spec)
    if result.regime != G_CONTINUOUS:
        raise ValueError("convexity diagnostics apply to the G-continuous "
                         f"regime; {spec.model.family} is {result.regime}")
    transforms = HittingTransforms(spec.model, spec.r)
    b_c = result.b_c
    grid = np.linspace(b_c, span * b_c, n_grid + 1)[1:]
    g_vals = candidate_value(spec, b_c, grid, transforms)
    second = g_vals[2:] - 2.0 * g_vals[1:-1] + g_vals[:-2]
    min_second = float(np.min(second))

    h = 1e-5 * b_c
    stencil = candidate_value(spec, b_c, b_c + h * np.arange(5), transforms)
    slope = float(np.dot([-25.0, 48.0, -36.0, 16.0, -3.0], stencil)) / (12 * h)
    f_slope = -spec.alpha / (spec.r - spec.psi1)
    gap = abs(slope - f_slope)

    report = ConvexityReport(family=spec.model.family, b_c=b_c,
                             min_second_diff=min_second, tangency_gap=gap,
                             convex_ok=min_second > 0.0,
                             tangency_ok=gap < tangency_tol)
    if not report.ok and on_failure == "raise":
        raise ArithmeticError(f"optimality hypotheses failed at B_c={b_c}: "
                              f"min second difference {min_second}, "
                              f"tangency gap {gap}")
    return report


def epsilon_region(spec: ProblemSpec, result: Optional[ThresholdResult],
                   eps: float,
                   vf: Optional[ValueFunction] = None) -> float:
    """Upper boundary b(eps) = sup{v : w(v) <= eps} of the eps-stop region.

    The rule "stop once V enters (0, b(eps)]" costs at most eps in expected
    value.  w is continuous, zero up to B_c and strictly increasing past it,
    so b(eps) is the unique root of w = eps beyond B_c, found by bracketed
    bisection.  Returns +inf if eps exceeds the whole range of w (cannot
    happen here, where w grows without bound, but the sentinel keeps the
    contract total).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if vf is None:
        vf = value_function(spec, result)
    b_c = vf.b_c
    hi = 2.0 * b_c
    for _ in range(400):
        if vf(hi) > eps:
            break
        hi *= 2.0
    else:
        return math.inf
    return brentq(lambda v: vf(v) - eps, b_c, hi, xtol=1e-15, rtol=8.9e-16)
