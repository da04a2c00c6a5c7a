"""Scalar building blocks: kappa, delta, the cost constant C(gamma), the
two-branch function b_{p,gamma} and the reduced objectives used to locate
the minimiser of the infimum representation.

Everything here is written for exponents 1 < p <= 2.  Exponents above 2 are
handled one level up by swapping to the conjugate exponent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

P_MIN = 1.0 + 1e-6
P_MAX = 1e6


class DomainError(ValueError):
    """An argument lies outside the set where a formula is defined."""


@dataclass(frozen=True)
class ExponentPair:
    p: float
    q: float
    p_star: float

    @classmethod
    def from_p(cls, p: float) -> "ExponentPair":
        p = float(p)
        if not (P_MIN <= p <= P_MAX):
            raise DomainError(f"p={p!r} outside accepted window [{P_MIN}, {P_MAX:g}]")
        q = p / (p - 1.0)
        return cls(p=p, q=q, p_star=max(p, q))

    @property
    def gamma_max(self) -> float:
        """The right end (p-1)^{-1} of the admissible gamma range."""
        return 1.0 / (self.p - 1.0)

    def dual(self) -> "ExponentPair":
        return ExponentPair.from_p(self.q)


@dataclass(frozen=True)
class ScalarParams:
    """A point of the domain after taking norms of the vector entries."""

    zeta_norm: float
    eta_norm: float
    Z: float
    H: float

    def __post_init__(self):
        for name in ("zeta_norm", "eta_norm", "Z", "H"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v!r}")

    def check(self, e: ExponentPair, rtol: float = 1e-12) -> None:
        zp = self.zeta_norm**e.p
        hq = self.eta_norm**e.q
        if self.Z < zp * (1 - rtol) or self.H < hq * (1 - rtol):
            raise DomainError(
                f"point outside the domain: Z={self.Z!r} vs |zeta|^p={zp!r}, "
                f"H={self.H!r} vs |eta|^q={hq!r}"
            )


def _require_low_p(e: ExponentPair) -> None:
    if not (1.0 < e.p <= 2.0):
        raise DomainError(f"formula defined for 1 < p <= 2 only, got p={e.p}")


def kappa(t, e: ExponentPair):
    """(1-(p-1)t)(1+t)^{p-1}; decreasing from 1 at t=0 to 0 at t=(p-1)^{-1}."""
    _require_low_p(e)
    t = np.asarray(t, dtype=float)
    out = (1.0 - (e.p - 1.0) * t) * (1.0 + t) ** (e.p - 1.0)
    return out if out.ndim else float(out)


def kappa_complement(t, e: ExponentPair):
    """1 - kappa(t) with full relative accuracy near t = 0.

    Uses p(p-1) sum_k binom(p-2, k) t^{k+2}/(k+2) for t < 1/4, where the
    direct difference would cancel.
    """
    _require_low_p(e)
    t = np.asarray(t, dtype=float)
    p = e.p
    direct = 1.0 - (1.0 - (p - 1.0) * t) * (1.0 + t) ** (p - 1.0)
    small = t < 0.25
    if np.any(small):
        ts = np.where(small, t, 0.0)
        acc = np.zeros_like(ts)
        coef = 1.0
        power = ts * ts
        for k in range(40):
            acc = acc + coef * power / (k + 2)
            coef *= (p - 2.0 - k) / (k + 1)
            power = power * ts
        direct = np.where(small, p * (p - 1.0) * acc, direct)
    return direct if direct.ndim else float(direct)


def delta_fn(t, e: ExponentPair):
    """t(1+t)^{p-2}; increasing, concave and unbounded on [0, inf)."""
    _require_low_p(e)
    t = np.asarray(t, dtype=float)
    out = t * (1.0 + t) ** (e.p - 2.0)
    return out if out.ndim else float(out)


def cost_constant(gamma, e: ExponentPair):
    """C(gamma) = ((2-p) gamma^{p-1} + gamma^{p-2}) / (p-1).

    Strictly decreasing on (0, (p-1)^{-1}] with C((p-1)^{-1}) = (p-1)^{-p}.
    """
    _require_low_p(e)
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0) or np.any(g > e.gamma_max * (1 + 1e-14)):
        raise DomainError(f"gamma must lie in (0, {e.gamma_max}], got {gamma!r}")
    out = ((2.0 - e.p) * g ** (e.p - 1.0) + g ** (e.p - 2.0)) / (e.p - 1.0)
    return out if out.ndim else float(out)


def b_scalar(x, y, gamma, e: ExponentPair):
    """b_{p,gamma} evaluated on norms |x|, |y| (broadcasting over arrays).

    The closed set |y| >= gamma|x| uses the second branch.
    """
    _require_low_p(e)
    p = e.p
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    g = np.asarray(gamma, dtype=float)
    c = cost_constant(g, e)
    second = y**p - c * x**p
    lead = (g / (g + 1.0)) ** (p - 2.0)
    first = lead * (x + y) ** (p - 1.0) * (y - x / (p - 1.0))
    out = np.where(y < g * x, first, second)
    return out if out.ndim else float(out)


def b_special(x, y, gamma: float, e: ExponentPair) -> float:
    """b_{p,gamma}(x, y) for vectors (or scalars) x, y of equal dimension."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DomainError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(b_scalar(np.linalg.norm(x), np.linalg.norm(y), gamma, e))


def growth_constant(gamma: float, e: ExponentPair) -> float:
    """A constant c with |b_{p,gamma}(x,y)| <= c(|x|^p + |y|^p)."""
    p = e.p
    first = (gamma / (gamma + 1.0)) ** (p - 2.0) * 2.0 ** (p - 1.0) * max(1.0, 1.0 / (p - 1.0))
    return max(first, 1.0, cost_constant(gamma, e))


def w_objective(gamma, Y, s: ScalarParams, e: ExponentPair):
    """-Y|eta| + H^{1/q} (b(1, Y) + C(gamma) Z/|zeta|^p)^{1/p}.

    Broadcasts over gamma and Y.  A negative radicand means the evaluation
    point is infeasible and raises DomainError.
    """
    _require_low_p(e)
    if s.zeta_norm <= 0:
        raise DomainError("w_objective needs |zeta| > 0")
    Y = np.asarray(Y, dtype=float)
    if np.any(Y < 0):
        raise DomainError("Y must be nonnegative")
    ratio = s.Z / s.zeta_norm**e.p
    rad = b_scalar(1.0, Y, gamma, e) + cost_constant(gamma, e) * ratio
    rad = np.asarray(rad)
    if np.any(rad < 0):
        raise DomainError("negative radicand: infeasible (gamma, Y)")
    out = -Y * s.eta_norm + s.H ** (1.0 / e.q) * rad ** (1.0 / e.p)
    return out if np.ndim(out) else float(out)


def F_univariate(Y, s: ScalarParams, e: ExponentPair):
    """-Y|eta| + H^{1/q} (Y^p + (p-1)^{-p}(Z/|zeta|^p - 1))^{1/p}."""
    _require_low_p(e)
    if s.zeta_norm <= 0:
        raise DomainError("F_univariate needs |zeta| > 0; use the zeta=0 closed form")
    Y = np.asarray(Y, dtype=float)
    rad = Y**e.p + (e.p - 1.0) ** (-e.p) * (s.Z / s.zeta_norm**e.p - 1.0)
    out = -Y * s.eta_norm + s.H ** (1.0 / e.q) * rad ** (1.0 / e.p)
    return out if out.ndim else float(out)


def F_minimizer(s: ScalarParams, e: ExponentPair) -> float:
    """Stationary point of F_univariate."""
    _require_low_p(e)
    zp = s.zeta_norm**e.p
    hq = s.eta_norm**e.q
    if not (s.zeta_norm > 0 and s.Z > zp and s.H > hq):
        raise DomainError("F_minimizer needs |zeta| > 0, Z > |zeta|^p and H > |eta|^q")
    return ((s.Z - zp) / (s.H - hq) * hq / zp) ** (1.0 / e.p) / (e.p - 1.0)
