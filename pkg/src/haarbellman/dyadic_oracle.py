"""Direct maximisation of the dyadic supremum

    (1/4) sum_I |phi_{I+} - phi_{I-}| |psi_{I-} - psi_{I+}| |I|

over step functions on 2^n dyadic leaves with phi averaging to zeta,
psi to eta, (|phi|^p) <= Z and (|psi|^q) <= H.  Any feasible pair gives a
lower bound for the Bellman function, independent of its closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bellman import BellmanPoint
from .special_functions import DomainError, ExponentPair

MAX_DEPTH = 12
MAX_ITER = 500
REL_IMPROVEMENT = 1e-9
FEAS_TOL = 1e-12
INIT_NOISE = 0.25
FD_STEP = 1e-7


@dataclass(frozen=True)
class DyadicFunctionPair:
    depth: int
    phi_leaves: np.ndarray  # (2^depth, d)
    psi_leaves: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi_leaves, dtype=float)
        psi = np.asarray(self.psi_leaves, dtype=float)
        if phi.ndim == 1:
            phi = phi[:, None]
        if psi.ndim == 1:
            psi = psi[:, None]
        n = 2**self.depth
        if phi.shape[0] != n or psi.shape[0] != n or phi.shape != psi.shape:
            raise DomainError(f"need {n} leaves of equal dimension, got {phi.shape} and {psi.shape}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
            raise DomainError("non-finite leaf value")
        object.__setattr__(self, "phi_leaves", phi)
        object.__setattr__(self, "psi_leaves", psi)

    def split(self, extra: int) -> "DyadicFunctionPair":
        """The same functions on a grid refined by `extra` levels."""
        k = 2**extra
        return DyadicFunctionPair(self.depth + extra, np.repeat(self.phi_leaves, k, axis=0), np.repeat(self.psi_leaves, k, axis=0))


def _differences(leaves: np.ndarray, depth: int) -> list[np.ndarray]:
    """Sibling differences (right minus left) per level, root level first."""
    out = []
    avg = leaves
    for _ in range(depth):
        left, right = avg[0::2], avg[1::2]
        out.append(right - left)
        avg = 0.5 * (left + right)
    return out[::-1]


def objective(dp: DyadicFunctionPair) -> float:
    total = 0.0
    dphi = _differences(dp.phi_leaves, dp.depth)
    dpsi = _differences(dp.psi_leaves, dp.depth)
    for level, (a, b) in enumerate(zip(dphi, dpsi)):
        total += float(np.sum(np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))) * 2.0**-level
    return 0.25 * total


def _moment(leaves: np.ndarray, r: float) -> float:
    return float(np.mean(np.linalg.norm(leaves, axis=1) ** r))


def _project_one(leaves: np.ndarray, center: np.ndarray, bound: float, r: float) -> np.ndarray:
    out = leaves - (leaves.mean(axis=0) - center)
    if _moment(out, r) <= bound:
        return out
    dev = out - center
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _moment(center + mid * dev, r) <= bound:
            lo = mid
        else:
            hi = mid
    return center + lo * dev


def _is_feasible(dp: DyadicFunctionPair, pt: BellmanPoint, e: ExponentPair, tol: float = FEAS_TOL) -> bool:
    scale = 1.0 + pt.zeta_norm + pt.eta_norm
    return (
        np.max(np.abs(dp.phi_leaves.mean(axis=0) - pt.zeta)) <= tol * scale
        and np.max(np.abs(dp.psi_leaves.mean(axis=0) - pt.eta)) <= tol * scale
        and _moment(dp.phi_leaves, e.p) <= pt.Z * (1.0 + tol)
        and _moment(dp.psi_leaves, e.q) <= pt.H * (1.0 + tol)
    )


def constraint_defects(dp: DyadicFunctionPair, pt: BellmanPoint, e: ExponentPair) -> dict:
    """Mean defects and moment excesses (positive excess means infeasible)."""
    return {
        "phi_mean": float(np.max(np.abs(dp.phi_leaves.mean(axis=0) - pt.zeta))),
        "psi_mean": float(np.max(np.abs(dp.psi_leaves.mean(axis=0) - pt.eta))),
        "phi_moment_excess": _moment(dp.phi_leaves, e.p) - pt.Z,
        "psi_moment_excess": _moment(dp.psi_leaves, e.q) - pt.H,
    }


def feasible_project(dp: DyadicFunctionPair, pt: BellmanPoint, e: ExponentPair) -> DyadicFunctionPair:
    """Shift to the prescribed means, then contract towards them until the
    moment bounds hold.  Input feasible up to FEAS_TOL (relative) is
    returned unchanged; this keeps split pairs, whose moments are summed in
    a different order, bit-identical."""
    pt.require_domain(e)
    if dp.phi_leaves.shape[1] != pt.zeta.size:
        raise DomainError(f"leaf dimension {dp.phi_leaves.shape[1]} does not match the point ({pt.zeta.size})")
    if _is_feasible(dp, pt, e):
        return dp
    phi = _project_one(dp.phi_leaves, pt.zeta, pt.Z, e.p)
    psi = _project_one(dp.psi_leaves, pt.eta, pt.H, e.q)
    return DyadicFunctionPair(dp.depth, phi, psi)


def _gradient(dp: DyadicFunctionPair, h: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient in leaf space.

    Moving one leaf by h changes only the sibling differences on its
    ancestor path, by +-h 2^{level+1-depth}, so every partial derivative
    is assembled from depth local terms instead of a full re-evaluation.
    """
    n = dp.depth
    leaves = 2**n
    dphi = _differences(dp.phi_leaves, n)
    dpsi = _differences(dp.psi_leaves, n)
    d = dp.phi_leaves.shape[1]
    gphi = np.zeros((leaves, d))
    gpsi = np.zeros((leaves, d))
    idx = np.arange(leaves)
    eye = np.eye(d)
    for level in range(n):
        node = idx >> (n - level)
        side = np.where((idx >> (n - level - 1)) & 1, 1.0, -1.0)  # right child adds, left subtracts
        w = 2.0 ** (level + 1 - n) * side
        weight = 0.25 * 2.0**-level
        a = dphi[level][node]  # (leaves, d)
        b = dpsi[level][node]
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        for c in range(d):
            shift = (h * w)[:, None] * eye[c]
            dna = (np.linalg.norm(a + shift, axis=1) - np.linalg.norm(a - shift, axis=1)) / (2 * h)
            dnb = (np.linalg.norm(b + shift, axis=1) - np.linalg.norm(b - shift, axis=1)) / (2 * h)
            gphi[:, c] += weight * dna * nb
            gpsi[:, c] += weight * dnb * na
    return gphi, gpsi


def _initial_pair(pt: BellmanPoint, e: ExponentPair, depth: int, rng: np.random.Generator) -> DyadicFunctionPair:
    n, d = 2**depth, pt.zeta.size
    rz = max(pt.Z - pt.zeta_norm**e.p, 0.0) ** (1.0 / e.p)
    rh = max(pt.H - pt.eta_norm**e.q, 0.0) ** (1.0 / e.q)
    phi = pt.zeta + INIT_NOISE * rz * rng.normal(size=(n, d))
    psi = pt.eta + INIT_NOISE * rh * rng.normal(size=(n, d))
    return feasible_project(DyadicFunctionPair(depth, phi, psi), pt, e)


def _ascend(start: DyadicFunctionPair, pt: BellmanPoint, e: ExponentPair) -> tuple[float, DyadicFunctionPair]:
    cur = start
    val = objective(cur)
    step = 1.0
    for _ in range(MAX_ITER):
        gphi, gpsi = _gradient(cur)
        gn = np.sqrt(np.sum(gphi**2) + np.sum(gpsi**2))
        if gn == 0.0:
            break
        accepted = False
        for _ in range(40):
            trial = feasible_project(
                DyadicFunctionPair(cur.depth, cur.phi_leaves + step * gphi, cur.psi_leaves + step * gpsi), pt, e
            )
            tv = objective(trial)
            if tv > val:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        gain = tv - val
        cur, val = trial, tv
        step *= 2.0
        if gain <= REL_IMPROVEMENT * max(abs(val), 1e-300):
            break
    return val, cur


def maximize(
    pt: BellmanPoint,
    e: ExponentPair,
    depth: int,
    restarts: int = 4,
    seed: int = 0,
    init: DyadicFunctionPair | None = None,
) -> dict:
    """Projected gradient ascent with restarts; returns {"value", "pair"}.

    If `init` is given (a feasible pair of depth <= `depth`) it is split to
    the requested depth and used as the first start, so the result is never
    below objective(init).
    """
    if not 0 <= depth <= MAX_DEPTH:
        raise DomainError(f"depth must lie in [0, {MAX_DEPTH}], got {depth}")
    if restarts < 1:
        raise DomainError("restarts must be at least 1")
    pt.require_domain(e)
    rng = np.random.default_rng(seed)
    starts = []
    if init is not None:
        if init.depth > depth:
            raise DomainError("init is deeper than the requested depth")
        starts.append(feasible_project(init.split(depth - init.depth), pt, e))
    starts.extend(_initial_pair(pt, e, depth, rng) for _ in range(restarts))
    best_val, best = -np.inf, None
    for s in starts:
        v0 = objective(s)
        v, pair = _ascend(s, pt, e) if depth > 0 else (v0, s)
        if v < v0:
            v, pair = v0, s
        if v > best_val:
            best_val, best = v, pair
    return {"value": float(best_val), "pair": best}


def maximize_depths(pt: BellmanPoint, e: ExponentPair, depths, restarts: int = 2, seed: int = 0) -> list[dict]:
    """Runs over increasing depths, each started from the previous optimum."""
    out = []
    prev = None
    for depth in sorted(depths):
        res = maximize(pt, e, depth, restarts, seed, init=prev)
        out.append({"depth": depth, **res})
        prev = res["pair"]
    return out
