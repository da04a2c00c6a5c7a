"""Evaluation of the explicit Bellman function on the full domain.

For 1 < p <= 2 there are two regimes separated by |eta|^q Z = |zeta|^p H:

* |eta|^q Z >= |zeta|^p H: (H-|eta|^q)^{1/q} (Z-|zeta|^p)^{1/p} / (p-1)
* otherwise: gamma Z^{1/p} H^{1/q} - |zeta||eta| Y with (gamma, Y) from
  :mod:`haarbellman.system_solver`.

For p > 2 the value is B_q(eta, zeta, H, Z).  On the boundary Z = |zeta|^p or
H = |eta|^q the value is 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .special_functions import (
    DomainError,
    ExponentPair,
    b_scalar,
    cost_constant,
)
from .system_solver import solve_system_arrays

BOUNDARY_RTOL = 1e-12
INTERFACE_RTOL = 1e-10


class Branch(str, enum.Enum):
    FIRST = "FirstBranch"
    SECOND = "SecondBranch"
    BOUNDARY = "Boundary"
    DUAL = "DualSwapped"


@dataclass(frozen=True)
class BellmanPoint:
    zeta: np.ndarray
    eta: np.ndarray
    Z: float
    H: float

    def __post_init__(self):
        zeta = np.atleast_1d(np.asarray(self.zeta, dtype=float))
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if zeta.ndim != 1 or zeta.shape != eta.shape:
            raise DomainError(f"zeta and eta must be vectors of equal dimension, got {zeta.shape}, {eta.shape}")
        if not (np.all(np.isfinite(zeta)) and np.all(np.isfinite(eta))):
            raise DomainError("non-finite vector entry")
        if not (np.isfinite(self.Z) and np.isfinite(self.H)) or self.Z < 0 or self.H < 0:
            raise DomainError(f"Z and H must be finite and nonnegative, got Z={self.Z!r}, H={self.H!r}")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "Z", float(self.Z))
        object.__setattr__(self, "H", float(self.H))

    @property
    def zeta_norm(self) -> float:
        return float(np.linalg.norm(self.zeta))

    @property
    def eta_norm(self) -> float:
        return float(np.linalg.norm(self.eta))

    def in_domain(self, e: ExponentPair, rtol: float = BOUNDARY_RTOL) -> bool:
        return (self.Z >= self.zeta_norm**e.p * (1 - rtol)) and (self.H >= self.eta_norm**e.q * (1 - rtol))

    def require_domain(self, e: ExponentPair) -> None:
        if not self.in_domain(e):
            raise DomainError(
                f"point not in the domain for p={e.p}: Z={self.Z!r} < |zeta|^p={self.zeta_norm**e.p!r} "
                f"or H={self.H!r} < |eta|^q={self.eta_norm**e.q!r}"
            )

    def swapped(self) -> "BellmanPoint":
        return BellmanPoint(self.eta, self.zeta, self.H, self.Z)

    def as_dict(self) -> dict:
        return {"zeta": self.zeta.tolist(), "eta": self.eta.tolist(), "Z": self.Z, "H": self.H}


@dataclass(frozen=True)
class BellmanResult:
    value: float
    branch: Branch
    gamma: float | None = None
    Y: float | None = None
    residuals: tuple[float, float] | None = field(default=None)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "branch": self.branch.value,
            "gamma": self.gamma,
            "Y": self.Y,
            "residuals": list(self.residuals) if self.residuals is not None else None,
        }


# Branch codes used by the array routines.
BOUNDARY, FIRST, SECOND = 0, 1, 2
_CODE_TO_BRANCH = {BOUNDARY: Branch.BOUNDARY, FIRST: Branch.FIRST, SECOND: Branch.SECOND}


def classify_arrays(zeta_norm, eta_norm, Z, H, e: ExponentPair):
    """Branch codes for 1 < p <= 2 (BOUNDARY, FIRST or SECOND)."""
    zp = np.asarray(zeta_norm, dtype=float) ** e.p
    hq = np.asarray(eta_norm, dtype=float) ** e.q
    Z = np.asarray(Z, dtype=float)
    H = np.asarray(H, dtype=float)
    boundary = (Z <= zp * (1 + BOUNDARY_RTOL)) | (H <= hq * (1 + BOUNDARY_RTOL))
    first = hq * Z >= zp * H * (1 - INTERFACE_RTOL)
    return np.where(boundary, BOUNDARY, np.where(first, FIRST, SECOND))


def bellman_arrays(zeta_norm, eta_norm, Z, H, e: ExponentPair):
    """Vectorised B_p on norms, any 1 < p < inf.

    Returns (value, code, gamma, Y, res1, res2) where gamma, Y and the
    residuals are NaN outside the second branch.  For p > 2 the arrays
    describe the swapped evaluation at the conjugate exponent.
    """
    if e.p > 2.0:
        return bellman_arrays(eta_norm, zeta_norm, H, Z, e.dual())
    zeta_norm, eta_norm, Z, H = (
        np.array(a, dtype=float).ravel() for a in np.broadcast_arrays(zeta_norm, eta_norm, Z, H)
    )
    code = classify_arrays(zeta_norm, eta_norm, Z, H, e)
    n = code.size
    value = np.zeros(n)
    gamma = np.full(n, np.nan)
    Y = np.full(n, np.nan)
    res1 = np.full(n, np.nan)
    res2 = np.full(n, np.nan)

    f = code == FIRST
    if np.any(f):
        value[f] = (
            np.maximum(H[f] - eta_norm[f] ** e.q, 0.0) ** (1.0 / e.q)
            * np.maximum(Z[f] - zeta_norm[f] ** e.p, 0.0) ** (1.0 / e.p)
            / (e.p - 1.0)
        )
    s = code == SECOND
    if np.any(s):
        g, y, r1, r2, _ = solve_system_arrays(zeta_norm[s], eta_norm[s], Z[s], H[s], e)
        value[s] = g * Z[s] ** (1.0 / e.p) * H[s] ** (1.0 / e.q) - zeta_norm[s] * eta_norm[s] * y
        gamma[s], Y[s], res1[s], res2[s] = g, y, r1, r2
    return value, code, gamma, Y, res1, res2


def bellman_values(zeta, eta, Z, H, e: ExponentPair) -> np.ndarray:
    """B_p for stacked vectors zeta, eta of shape (n, d)."""
    zn = np.linalg.norm(np.atleast_2d(zeta), axis=-1)
    en = np.linalg.norm(np.atleast_2d(eta), axis=-1)
    return bellman_arrays(zn, en, Z, H, e)[0]


def classify_branch(pt: BellmanPoint, e: ExponentPair) -> Branch:
    """Regime of pt for 1 < p <= 2."""
    if e.p > 2.0:
        raise DomainError("classify_branch works for 1 < p <= 2; swap to the conjugate exponent first")
    pt.require_domain(e)
    return _CODE_TO_BRANCH[int(classify_arrays(pt.zeta_norm, pt.eta_norm, pt.Z, pt.H, e))]


def eval_bellman(pt: BellmanPoint, e: ExponentPair) -> BellmanResult:
    pt.require_domain(e)
    value, code, gamma, Y, r1, r2 = bellman_arrays(pt.zeta_norm, pt.eta_norm, pt.Z, pt.H, e)
    branch = Branch.DUAL if e.p > 2.0 else _CODE_TO_BRANCH[int(code[0])]
    if np.isnan(gamma[0]):
        return BellmanResult(float(value[0]), branch)
    return BellmanResult(float(value[0]), branch, float(gamma[0]), float(Y[0]), (float(r1[0]), float(r2[0])))


def eval_bellman_p2_closed(pt: BellmanPoint) -> float:
    """sqrt((Z - |zeta|^2)(H - |eta|^2)); independent check at p = 2."""
    pt.require_domain(ExponentPair.from_p(2.0))
    a = max(pt.Z - pt.zeta_norm**2, 0.0)
    b = max(pt.H - pt.eta_norm**2, 0.0)
    return float(np.sqrt(a * b))


def infimum_objective(gamma, s, pt_norms, e: ExponentPair):
    """-s|eta| + H^{1/q} (b(|zeta|, s) + C(gamma) Z)^{1/p}, broadcasting over gamma, s."""
    zeta_norm, eta_norm, Z, H = pt_norms
    rad = b_scalar(zeta_norm, s, gamma, e) + cost_constant(gamma, e) * Z
    return -s * eta_norm + H ** (1.0 / e.q) * np.maximum(rad, 0.0) ** (1.0 / e.p)


def s_cap(zeta_norm: float, eta_norm: float, Z: float, H: float, e: ExponentPair) -> float:
    """Initial s-window: twice the larger of |zeta| gmax (second-branch
    minimisers have s = |zeta| Y < |zeta| gamma) and the first-branch
    stationary point gmax ((Z - |zeta|^p)|eta|^q / (H - |eta|^q))^{1/p}."""
    zp, hq = zeta_norm**e.p, eta_norm**e.q
    first = ((Z - zp) * hq / (H - hq)) ** (1.0 / e.p)
    return 2.0 * e.gamma_max * max(zeta_norm, first, 1e-300)


def eval_via_infimum(pt: BellmanPoint, e: ExponentPair, grid_n: int = 200, refine_rounds: int = 4) -> float:
    """Minimise the infimum representation over gamma in (0, (p-1)^{-1}], s >= 0.

    Grid search with refinement, independent of the (gamma, Y) solver.  Each
    refinement round keeps the incumbent, so more rounds never raise the value.
    """
    if not (1.0 < e.p <= 2.0):
        raise DomainError("eval_via_infimum works for 1 < p <= 2")
    norms = (pt.zeta_norm, pt.eta_norm, pt.Z, pt.H)
    if not (pt.Z > norms[0] ** e.p and pt.H > norms[1] ** e.q):
        raise DomainError("eval_via_infimum needs strict interior Z > |zeta|^p, H > |eta|^q")
    gmax = e.gamma_max
    cap = s_cap(*norms, e)

    def grid_min(g_lo, g_hi, s_lo, s_hi):
        gs = np.linspace(g_lo, g_hi, grid_n)
        ss = np.linspace(s_lo, s_hi, grid_n)
        gs = gs[gs > 0]
        vals = infimum_objective(gs[:, None], ss[None, :], norms, e)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        return float(vals[i, j]), float(gs[i]), float(ss[j]), j == grid_n - 1

    for _ in range(60):
        best = grid_min(0.0, gmax, 0.0, cap)
        if not best[3]:
            break
        cap *= 10.0
    val, g0, s0, _ = best
    wg, ws = gmax, cap
    for _ in range(refine_rounds):
        wg, ws = wg / 10.0, ws / 10.0
        cand = grid_min(max(0.0, g0 - wg / 2), min(gmax, g0 + wg / 2), max(0.0, s0 - ws / 2), s0 + ws / 2)
        if cand[0] < val:
            val, g0, s0 = cand[0], cand[1], cand[2]
    return val


def upper_bound_at(pt: BellmanPoint, e: ExponentPair, gamma: float, s: float) -> float:
    """The infimum objective at one (gamma, s): an upper bound for B_p."""
    norms = (pt.zeta_norm, pt.eta_norm, pt.Z, pt.H)
    return float(infimum_objective(gamma, s, norms, e))
