"""Parametric Levy families and the liquidation problem they plug into.

Each family is a frozen dataclass carrying the parameters of one exponential
Levy model for the asset log-price X:

* ``BrownianDrift``  -- X_t = m t + sigma B_t
* ``KouJD``          -- Brownian part plus compound Poisson jumps whose sizes
  are exponential(eta1) upward with probability p and exponential(eta2)
  downward with probability 1 - p
* ``ExpJD``          -- the one-sided Kou variant with upward jumps only
* ``NegPoisson``     -- X_t = -N_t for a unit-jump Poisson counter
* ``SpectNegKou``    -- the one-sided Kou variant with downward jumps only

The Laplace exponent ``psi`` satisfies E[exp(lam X_t)] = exp(t psi(lam)).
Everything downstream (characteristic roots, hitting transforms, thresholds)
is driven by ``psi`` and the standing assumptions collected in
``assumption_report``:

* finite expected exponential jump (eta1 > 1, enforced at construction),
* effective discounting r > psi(1), so the discounted asset price is a
  supermartingale and the value function is finite.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import ClassVar, Union

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "AssumptionError",
    "AssumptionReport",
    "BrownianDrift",
    "ExpJD",
    "KouJD",
    "LevyModel",
    "NegPoisson",
    "ProblemSpec",
    "SpectNegKou",
    "assumption_report",
    "check_assumptions",
    "model_from_dict",
    "model_to_dict",
    "phi",
    "psi",
    "psi1",
    "spec_from_dict",
    "spec_to_dict",
]


class AssumptionError(ValueError):
    """A problem instance violates one of the standing model assumptions."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class BrownianDrift:
    """Arithmetic Brownian motion with drift ``m`` and volatility ``sigma``."""

    m: float
    sigma: float

    family: ClassVar[str] = "brownian"

    def __post_init__(self) -> None:
        _require(self.sigma > 0, "sigma must be positive")


@dataclass(frozen=True)
class KouJD:
    """Double-exponential jump diffusion.

    Jumps arrive at rate ``a``; a jump is +Exp(eta1) with probability ``p``
    and -Exp(eta2) with probability ``1 - p``.  ``eta1 > 1`` keeps
    E[exp(X_t)] finite.  Degenerate mixtures are separate families: use
    ``ExpJD`` for p = 1 and ``SpectNegKou`` for p = 0.
    """

    m: float
    sigma: float
    a: float
    p: float
    eta1: float
    eta2: float

    family: ClassVar[str] = "kou"

    def __post_init__(self) -> None:
        _require(self.sigma > 0, "sigma must be positive")
        _require(self.a > 0, "jump intensity a must be positive")
        _require(0.0 < self.p < 1.0,
                 "p must lie strictly in (0, 1); use ExpJD (p = 1) or "
                 "SpectNegKou (p = 0) for one-sided jumps")
        _require(self.eta1 > 1, "eta1 must exceed 1 so E[exp(X_t)] is finite")
        _require(self.eta2 > 0, "eta2 must be positive")

    @property
    def q(self) -> float:
        return 1.0 - self.p


@dataclass(frozen=True)
class ExpJD:
    """Jump diffusion with upward exponential(eta1) jumps only."""

    m: float
    sigma: float
    a: float
    eta1: float

    family: ClassVar[str] = "expjd"

    def __post_init__(self) -> None:
        _require(self.sigma > 0, "sigma must be positive")
        _require(self.a > 0, "jump intensity a must be positive")
        _require(self.eta1 > 1, "eta1 must exceed 1 so E[exp(X_t)] is finite")


@dataclass(frozen=True)
class NegPoisson:
    """Pure downward unit-jump Poisson counter: X_t = -N_t at rate ``a``."""

    a: float

    family: ClassVar[str] = "neg_poisson"

    def __post_init__(self) -> None:
        _require(self.a > 0, "jump intensity a must be positive")


@dataclass(frozen=True)
class SpectNegKou:
    """Jump diffusion with downward exponential(eta2) jumps only."""

    m: float
    sigma: float
    a: float
    eta2: float

    family: ClassVar[str] = "spectneg_kou"

    def __post_init__(self) -> None:
        _require(self.sigma > 0, "sigma must be positive")
        _require(self.a > 0, "jump intensity a must be positive")
        _require(self.eta2 > 0, "eta2 must be positive")


LevyModel = Union[BrownianDrift, KouJD, ExpJD, NegPoisson, SpectNegKou]

_FAMILIES = {
    cls.family: cls
    for cls in (BrownianDrift, KouJD, ExpJD, NegPoisson, SpectNegKou)
}


def psi(model: LevyModel, lam):
    """Laplace exponent: log E[exp(lam X_1)].

    Accepts a scalar or an array.  Raises ``ValueError`` at or beyond the
    jump-rate poles, where the defining expectation diverges: lam >= eta1
    for families with upward jumps, lam <= -eta2 for families with downward
    jumps.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if isinstance(model, BrownianDrift):
        out = model.m * lam_arr + 0.5 * model.sigma**2 * lam_arr**2
    elif isinstance(model, KouJD):
        if np.any(lam_arr >= model.eta1):
            raise ValueError(f"psi diverges for lam >= eta1 = {model.eta1}")
        if np.any(lam_arr <= -model.eta2):
            raise ValueError(f"psi diverges for lam <= -eta2 = {-model.eta2}")
        out = (model.m * lam_arr + 0.5 * model.sigma**2 * lam_arr**2
               + model.a * (model.eta1 * model.p / (model.eta1 - lam_arr)
                            + model.eta2 * model.q / (model.eta2 + lam_arr)
                            - 1.0))
    elif isinstance(model, ExpJD):
        if np.any(lam_arr >= model.eta1):
            raise ValueError(f"psi diverges for lam >= eta1 = {model.eta1}")
        out = (model.m * lam_arr + 0.5 * model.sigma**2 * lam_arr**2
               + model.a * lam_arr / (model.eta1 - lam_arr))
    elif isinstance(model, NegPoisson):
        out = model.a * (np.exp(-lam_arr) - 1.0)
    elif isinstance(model, SpectNegKou):
        if np.any(lam_arr <= -model.eta2):
            raise ValueError(f"psi diverges for lam <= -eta2 = {-model.eta2}")
        out = (model.m * lam_arr + 0.5 * model.sigma**2 * lam_arr**2
               + model.a * (model.eta2 / (model.eta2 + lam_arr) - 1.0))
    else:
        raise TypeError(f"not a Levy model: {model!r}")
    return float(out) if np.ndim(lam) == 0 else out


def psi1(model: LevyModel) -> float:
    """Exponential growth rate psi(1) of the asset price E[exp(X_t)]."""
    return psi(model, 1.0)


def _psi_prime(model: LevyModel, lam: float) -> float:
    if isinstance(model, BrownianDrift):
        return model.m + model.sigma**2 * lam
    if isinstance(model, KouJD):
        return (model.m + model.sigma**2 * lam
                + model.a * (model.eta1 * model.p / (model.eta1 - lam) ** 2
                             - model.eta2 * model.q / (model.eta2 + lam) ** 2))
    if isinstance(model, ExpJD):
        return (model.m + model.sigma**2 * lam
                + model.a * model.eta1 / (model.eta1 - lam) ** 2)
    if isinstance(model, NegPoisson):
        return -model.a * math.exp(-lam)
    if isinstance(model, SpectNegKou):
        return (model.m + model.sigma**2 * lam
                - model.a * model.eta2 / (model.eta2 + lam) ** 2)
    raise TypeError(f"not a Levy model: {model!r}")


def phi(model: LevyModel, qq: float) -> float:
    """Right inverse of the Laplace exponent: largest root of psi(lam) = qq.

    Defined only for spectrally negative models whose exponent grows to
    infinity (``BrownianDrift`` and ``SpectNegKou``).  Families with upward
    jumps are rejected; so is ``NegPoisson``, whose paths are decreasing and
    whose exponent is bounded above by zero, leaving psi(lam) = qq rootless.
    """
    if qq <= 0:
        raise ValueError("phi requires qq > 0")
    if isinstance(model, (KouJD, ExpJD)):
        raise ValueError("phi is defined only for spectrally negative models; "
                         f"{model.family} has upward jumps")
    if isinstance(model, NegPoisson):
        raise ValueError("phi is undefined for neg_poisson: the exponent "
                         "a*(exp(-lam) - 1) is bounded above by zero, so "
                         "psi(lam) = qq has no root for qq > 0")
    hi = 1.0
    for _ in range(200):
        if psi(model, hi) > qq:
            break
        hi *= 2.0
    else:  # pragma: no cover - exponent is unbounded for these families
        raise ArithmeticError("failed to bracket phi")
    root = brentq(lambda lm: psi(model, lm) - qq, 0.0, hi,
                  xtol=1e-15, rtol=8.9e-16)
    for _ in range(2):
        slope = _psi_prime(model, root)
        if slope > 0:
            step = (psi(model, root) - qq) / slope
            cand = root - step
            if 0.0 < cand <= hi:
                root = cand
    if abs(psi(model, root) - qq) > 1e-12 * max(1.0, qq):
        raise ArithmeticError("phi root failed its residual check")
    return root


_CLASS_D_NOTES = {
    "brownian": "discounted-excursion bound decays like n**(1 - 2r/sigma^2 "
                "adjusted rate); holds whenever r > psi(1)",
    "kou": "smallest positive characteristic root exceeds 1 under r > psi(1), "
           "so the upward-passage bound decays like a negative power",
    "expjd": "same positive-root argument as the two-sided jump diffusion",
    "neg_poisson": "paths are non-increasing, so the discounted payoff "
                   "process is bounded",
    "spectneg_kou": "phi(r) > 1 under r > psi(1); upward-passage bound decays "
                    "like n**(1 - phi(r))",
}


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the standing-assumption checks for a (model, r) pair."""

    family: str
    psi1: float
    finite_mean: bool
    discounting: bool
    class_d: bool
    note: str

    @property
    def all_ok(self) -> bool:
        return self.finite_mean and self.discounting and self.class_d


def assumption_report(model: LevyModel, r: float) -> AssumptionReport:
    """Check the standing assumptions for ``model`` under discount rate ``r``.

    ``finite_mean`` is true by construction (eta1 > 1 is enforced on the
    up-jump families).  ``discounting`` is the substantive check r > psi(1).
    ``class_d`` records that the discounted payoff family is uniformly
    integrable; for every supported family this follows from the discounting
    condition (and holds unconditionally for the bounded-path counter).
    """
    growth = psi1(model)
    discounting = r > growth
    class_d = True if isinstance(model, NegPoisson) else discounting
    return AssumptionReport(
        family=model.family,
        psi1=growth,
        finite_mean=True,
        discounting=discounting,
        class_d=class_d,
        note=_CLASS_D_NOTES[model.family],
    )


@dataclass(frozen=True)
class ProblemSpec:
    """Perpetual liquidation problem: maximise E[int_0^tau e^{-rs}(alpha V_s - c) ds].

    ``v`` is the starting asset value, ``alpha`` the payout rate on the
    asset, ``c`` the running cost, ``r`` the discount rate.  Construction
    rejects non-positive parameters and any (model, r) pair violating the
    discounting assumption r > psi(1).
    """

    model: LevyModel
    r: float
    alpha: float
    c: float
    v: float

    def __post_init__(self) -> None:
        _require(self.r > 0, "r must be positive")
        _require(self.alpha > 0, "alpha must be positive")
        _require(self.c > 0, "c must be positive; with c = 0 waiting forever "
                             "is optimal and no finite threshold exists")
        _require(self.v > 0, "v must be positive")
        report = assumption_report(self.model, self.r)
        if not report.discounting:
            raise AssumptionError(
                "discounting assumption violated: requires "
                f"r > psi(1) = {report.psi1:.6g}, got r = {self.r:.6g}")

    @property
    def psi1(self) -> float:
        return psi1(self.model)

    @property
    def b_upper(self) -> float:
        """Upper end c (r - psi(1)) / (r alpha) of the admissible thresholds.

        A threshold policy only collects a positive expected payoff for
        levels strictly inside (0, b_upper).
        """
        return self.c * (self.r - self.psi1) / (self.r * self.alpha)


def check_assumptions(spec: ProblemSpec) -> AssumptionReport:
    """Assumption report for an already-validated problem."""
    return assumption_report(spec.model, spec.r)


def model_from_dict(doc: dict) -> LevyModel:
    """Build a model from a JSON-style mapping with a ``family`` tag."""
    if not isinstance(doc, dict):
        raise ValueError("model document must be a JSON object")
    if "family" not in doc:
        raise ValueError("model document is missing the 'family' tag")
    family = doc["family"]
    try:
        cls = _FAMILIES[family]
    except KeyError:
        known = ", ".join(sorted(_FAMILIES))
        raise ValueError(f"unknown family {family!r}; expected one of {known}")
    names = [f.name for f in fields(cls)]
    extra = set(doc) - set(names) - {"family"}
    if extra:
        raise ValueError(f"unexpected keys for family {family!r}: "
                         f"{sorted(extra)}")
    kwargs = {}
    for name in names:
        if name not in doc:
            raise ValueError(f"family {family!r} requires field {name!r}")
        kwargs[name] = float(doc[name])
    return cls(**kwargs)


def model_to_dict(model: LevyModel) -> dict:
    doc = {"family": model.family}
    doc.update(asdict(model))
    return doc


def spec_from_dict(doc: dict) -> ProblemSpec:
    """Build a problem from ``{"model": {...}, "r":, "alpha":, "c":, "v":}``."""
    if not isinstance(doc, dict):
        raise ValueError("problem document must be a JSON object")
    for key in ("model", "r", "alpha", "c", "v"):
        if key not in doc:
            raise ValueError(f"problem document is missing {key!r}")
    model = model_from_dict(doc["model"])
    return ProblemSpec(model=model, r=float(doc["r"]),
                       alpha=float(doc["alpha"]), c=float(doc["c"]),
                       v=float(doc["v"]))


def spec_to_dict(spec: ProblemSpec) -> dict:
    return {
        "model": model_to_dict(spec.model),
        "r": spec.r,
        "alpha": spec.alpha,
        "c": spec.c,
        "v": spec.v,
    }
