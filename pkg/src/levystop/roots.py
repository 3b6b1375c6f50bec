"""Real roots of the characteristic equation psi(beta) = r.

For the jump diffusions the Laplace exponent is a rational function of beta,
so psi(beta) = r clears to a cubic or quartic with a known real-root layout:

* ``KouJD``        four real roots  psi3 < -eta2 < psi2 < 0 < psi1 < eta1 < psi0
* ``ExpJD``        two roots above the axis, psi1 in (0, eta1) and psi0 > eta1,
  plus a single negative root -lam_bar handled by ``emery_root``
* ``SpectNegKou``  psi3 < -eta2 < psi2 < 0 < psi1, with psi1 = phi(r)

Roots are isolated analytically (each lives between consecutive poles of the
rational continuation, or beyond the outermost pole) and then solved by
bracketed Brent iteration with a short Newton polish.  The continuation
``_rational`` evaluates the formula across poles without the domain checks
``models.psi`` performs, which is exactly what root isolation needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from .models import ExpJD, KouJD, LevyModel, SpectNegKou

__all__ = ["EmeryRoot", "KouRoots", "RootBracketError", "emery_root",
           "kou_roots"]

_EPS = math.ulp(1.0)


class RootBracketError(ArithmeticError):
    """Failed to isolate or confirm a characteristic root."""


@dataclass(frozen=True)
class KouRoots:
    """Real characteristic roots, slotted by position.

    Slots that the family does not possess are ``None``: ``ExpJD`` has no
    negative roots in this parametrisation (see ``emery_root``), and
    ``SpectNegKou`` has no root beyond an upper pole because it has none.
    """

    psi0: Optional[float]
    psi1: float
    psi2: Optional[float]
    psi3: Optional[float]

    def ordered(self) -> tuple:
        """Non-None roots in ascending order."""
        present = [x for x in (self.psi3, self.psi2, self.psi1, self.psi0)
                   if x is not None]
        return tuple(present)


@dataclass(frozen=True)
class EmeryRoot:
    """Positive solution lam_bar of psi(-lam) = r for the up-jump diffusion."""

    lam_bar: float


def _rational(model: LevyModel, beta: float) -> float:
    """psi(beta) continued through the poles, no domain validation."""
    quad = model.m * beta + 0.5 * model.sigma**2 * beta**2
    if isinstance(model, KouJD):
        return quad + model.a * (model.eta1 * model.p / (model.eta1 - beta)
                                 + model.eta2 * model.q / (model.eta2 + beta)
                                 - 1.0)
    if isinstance(model, ExpJD):
        return quad + model.a * beta / (model.eta1 - beta)
    if isinstance(model, SpectNegKou):
        return quad + model.a * (model.eta2 / (model.eta2 + beta) - 1.0)
    raise TypeError(f"no rational exponent for family {model!r}")


def _rational_prime(model: LevyModel, beta: float) -> float:
    lin = model.m + model.sigma**2 * beta
    if isinstance(model, KouJD):
        return lin + model.a * (
            model.eta1 * model.p / (model.eta1 - beta) ** 2
            - model.eta2 * model.q / (model.eta2 + beta) ** 2)
    if isinstance(model, ExpJD):
        return lin + model.a * model.eta1 / (model.eta1 - beta) ** 2
    if isinstance(model, SpectNegKou):
        return lin - model.a * model.eta2 / (model.eta2 + beta) ** 2
    raise TypeError(f"no rational exponent for family {model!r}")


def _pad_from_pole(f, pole: float, side: int, want_positive: bool) -> float:
    """Point just inside the blow-up region next to ``pole``.

    ``side`` is +1 to probe above the pole, -1 below.  The initial offset is
    relative to the pole's magnitude; if the rational term has not yet
    overwhelmed the quadratic there (small jump intensity), shrink toward the
    pole until the sign is the asymptotic one.
    """
    pad = 1e-9 * (1.0 + abs(pole))
    for _ in range(64):
        x = pole + side * pad
        val = f(x)
        if math.isfinite(val) and (val > 0) == want_positive:
            return x
        pad /= 16.0
    raise RootBracketError(f"no sign blow-up detected next to pole {pole}")


def _expand_out(f, start: float, side: int) -> float:
    """March outward from ``start`` (direction ``side``) until f > 0."""
    step = 1.0 + abs(start)
    x = start
    for _ in range(200):
        x = start + side * step
        if f(x) > 0:
            return x
        step *= 2.0
    raise RootBracketError("quadratic growth never dominated; bad parameters?")


def _solve(f, fprime, lo: float, hi: float) -> float:
    """Brent on a sign-changing bracket, then two guarded Newton steps."""
    root = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
    for _ in range(2):
        slope = fprime(root)
        if slope == 0:
            break
        cand = root - f(root) / slope
        if lo < cand < hi:
            root = cand
    res = abs(f(root))
    cond = abs(fprime(root)) * (1.0 + abs(root))
    if res > max(1e-12, 64.0 * _EPS * cond):
        raise RootBracketError(f"root residual {res} too large at {root}")
    return root


def kou_roots(model: LevyModel, r: float) -> KouRoots:
    """All real roots of psi(beta) = r for the rational-exponent families."""
    if r <= 0:
        raise ValueError("r must be positive")
    if not isinstance(model, (KouJD, ExpJD, SpectNegKou)):
        raise ValueError("characteristic roots via kou_roots exist only for "
                         "the rational-exponent jump diffusions; got "
                         f"{model.family}")

    def f(beta: float) -> float:
        return _rational(model, beta) - r

    def fp(beta: float) -> float:
        return _rational_prime(model, beta)

    # f(0) = -r < 0 anchors every inner bracket.
    psi0 = psi2 = psi3 = None
    if isinstance(model, (KouJD, ExpJD)):
        up_in = _pad_from_pole(f, model.eta1, -1, want_positive=True)
        psi1_root = _solve(f, fp, 0.0, up_in)
        up_out = _pad_from_pole(f, model.eta1, +1, want_positive=False)
        psi0 = _solve(f, fp, up_out, _expand_out(f, model.eta1, +1))
    else:
        psi1_root = _solve(f, fp, 0.0, _expand_out(f, 0.0, +1))
    if isinstance(model, (KouJD, SpectNegKou)):
        dn_in = _pad_from_pole(f, -model.eta2, +1, want_positive=True)
        psi2 = _solve(f, fp, dn_in, 0.0)
        dn_out = _pad_from_pole(f, -model.eta2, -1, want_positive=False)
        psi3 = _solve(f, fp, _expand_out(f, -model.eta2, -1), dn_out)

    roots = KouRoots(psi0=psi0, psi1=psi1_root, psi2=psi2, psi3=psi3)
    seq = roots.ordered()
    if any(b <= a for a, b in zip(seq, seq[1:])):
        raise RootBracketError(f"root ordering violated: {seq}")
    return roots


def emery_root(model: ExpJD, r: float) -> EmeryRoot:
    """Unique lam_bar > 0 with psi(-lam_bar) = r for the up-jump diffusion.

    On the negative axis the exponent of ``ExpJD`` has no pole, and
    h(lam) = psi(-lam) is convex with h(0) = 0, so h(lam) = r has exactly
    one positive solution.
    """
    if not isinstance(model, ExpJD):
        raise ValueError("emery_root applies to the upward jump diffusion "
                         f"only; got {model.family}")
    if r <= 0:
        raise ValueError("r must be positive")

    def h(lam: float) -> float:
        return (-model.m * lam + 0.5 * model.sigma**2 * lam**2
                - model.a * lam / (model.eta1 + lam) - r)

    def hp(lam: float) -> float:
        return (-model.m + model.sigma**2 * lam
                - model.a * model.eta1 / (model.eta1 + lam) ** 2)

    return EmeryRoot(lam_bar=_solve(h, hp, 0.0, _expand_out(h, 0.0, +1)))
