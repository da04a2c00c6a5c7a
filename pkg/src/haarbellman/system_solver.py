"""Constructive solution of the (gamma, Y) system and a brute-force grid
minimiser of L that serves as an independent oracle.

The system, for 1 < p <= 2 and |eta|^q Z < |zeta|^p H, reads

    kappa(Y) / kappa(gamma) = Z / |zeta|^p,
    delta(Y) / delta(gamma) = r,    r = (|eta|^q Z / (|zeta|^p H))^{1/q},

with 0 <= Y < gamma < (p-1)^{-1}.  For Y > 0 the second equation defines
gamma = G(Y) > Y, and the first becomes a monotone scalar equation in Y.
The scalar equation is solved by a bracketing Illinois iteration and G by
Newton in log t; every routine here is vectorised over arrays of points so
the verification suites can push 1e4-1e5 points through at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .special_functions import (
    DomainError,
    ExponentPair,
    ScalarParams,
    _require_low_p,
    delta_fn,
    kappa,
    kappa_complement,
    w_objective,
)

BISECT_TOL = 1e-13
RESIDUAL_TOL = 1e-11
MAX_ITER = 200


class SolverError(RuntimeError):
    """Bisection failed to bracket or to converge."""


@dataclass(frozen=True)
class GammaYSolution:
    gamma: float
    Y: float
    residual_eq1: float
    residual_eq2: float
    iterations: int
    resolution: float = 0.0

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "Y": self.Y,
            "residual_eq1": self.residual_eq1,
            "residual_eq2": self.residual_eq2,
            "iterations": self.iterations,
        }


def _bisect_increasing(fun, lo, hi, tol=BISECT_TOL, maxiter=MAX_ITER):
    """Vectorised bisection for the root of an increasing function.

    ``lo`` and ``hi`` must already bracket the root (fun(lo) <= 0 <= fun(hi)).
    Stops once every interval is below tol*|hi| (relative) or stops shrinking.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    it = 0
    while it < maxiter:
        width = hi - lo
        if np.all(width <= tol * np.abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        if np.all(stuck):
            break
        pos = fun(mid) > 0
        hi = np.where(pos & ~stuck, mid, hi)
        lo = np.where(~pos & ~stuck, mid, lo)
        it += 1
    else:
        raise SolverError(f"bisection did not converge in {maxiter} iterations")
    return 0.5 * (lo + hi), it


def _illinois_increasing(fun, lo, hi, f_lo, f_hi, tol=BISECT_TOL, maxiter=MAX_ITER):
    """Vectorised Illinois (modified regula falsi) for an increasing function.

    Keeps a bracket like bisection but converges superlinearly; the stored
    value at an endpoint retained twice in a row is halved.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = np.array(f_lo, dtype=float, copy=True)
    fhi = np.array(f_hi, dtype=float, copy=True)
    side = np.zeros(lo.shape, dtype=int)  # -1: lo moved last, +1: hi moved last
    for it in range(maxiter):
        active = hi - lo > tol * np.abs(hi)
        if not np.any(active):
            return 0.5 * (lo + hi), it
        x = hi - fhi * (hi - lo) / (fhi - flo)
        # fall back to the midpoint if the secant point is not strictly inside
        mid = 0.5 * (lo + hi)
        x = np.where((x > lo) & (x < hi), x, mid)
        fx = fun(x)
        if np.any(np.isnan(fx) & active):
            raise SolverError("function value is NaN inside the bracket")
        done = fx == 0
        up = (fx > 0) & active & ~done
        down = (fx < 0) & active & ~done
        flo = np.where(up & (side == 1), 0.5 * flo, flo)
        fhi = np.where(down & (side == -1), 0.5 * fhi, fhi)
        hi, fhi = np.where(up, x, hi), np.where(up, fx, fhi)
        lo, flo = np.where(down, x, lo), np.where(down, fx, flo)
        lo = np.where(done & active, x, lo)
        hi = np.where(done & active, x, hi)
        side = np.where(up, 1, np.where(down, -1, side))
    raise SolverError(f"Illinois iteration did not converge in {maxiter} iterations")


def _delta_log_newton(log_target, lo, hi, e: ExponentPair):
    """Solve log delta(e^u) = log_target for u <= hi, clipped below at lo.

    log delta(e^u) = u + (p-2) log(1 + e^u) is concave with slope in
    [p-1, 1]: started at u = hi the first Newton step lands left of the
    root and the iterates then increase to it.  An element stops once its
    step drops below a few ulps or turns non-positive (rounding noise).
    """
    p = e.p
    u = np.array(np.broadcast_to(hi, np.shape(log_target)), dtype=float)
    active = np.ones(u.shape, dtype=bool)
    for k in range(MAX_ITER):
        phi = u + (p - 2.0) * np.log1p(np.exp(u))
        dphi = 1.0 + (p - 2.0) / (1.0 + np.exp(-u))
        un = np.clip(u - (phi - log_target) / dphi, lo, hi)
        step = un - u
        u = np.where(active, un, u)
        small = np.abs(step) <= 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(un))
        active &= ~small if k == 0 else ~(small | (step <= 0))
        if not np.any(active):
            return u
    raise SolverError(f"Newton for delta did not converge in {MAX_ITER} iterations")


def delta_inverse(target, e: ExponentPair, upper):
    """Solve delta(t) = target on [0, upper] (target <= delta(upper))."""
    target = np.asarray(target, dtype=float)
    pos = target > 0
    with np.errstate(divide="ignore"):
        u = _delta_log_newton(np.log(np.where(pos, target, 1.0)), -np.inf, np.log(upper), e)
    return np.where(pos, np.exp(u), 0.0)


def solve_G(Y: float, r: float, e: ExponentPair, maxiter: int = MAX_ITER) -> float:
    """The unique G > Y with delta(Y) = r delta(G), for Y > 0 and 0 < r < 1."""
    _require_low_p(e)
    if not Y > 0:
        raise DomainError(f"Y must be positive, got {Y!r}")
    if not 0 < r <= 1:
        raise DomainError(f"r must lie in (0, 1], got {r!r}")
    target = delta_fn(Y, e) / r
    hi = max(2.0 * Y, 1.0)
    for _ in range(maxiter):
        if delta_fn(hi, e) >= target:
            break
        hi *= 2.0
    else:
        raise SolverError(f"could not bracket G({Y}) with r={r}: delta grows too slowly")
    G, _ = _bisect_increasing(lambda t: r * delta_fn(t, e) - delta_fn(Y, e), np.array(Y), np.array(hi), maxiter=maxiter)
    return float(G)


def _G_array(Y, r, e: ExponentPair, gmax: float):
    """G(Y) on [Y, gmax] for arrays of positive Y below Y_max."""
    target = np.log(delta_fn(Y, e)) - np.log(r)
    return np.exp(_delta_log_newton(target, np.log(Y), np.log(gmax), e))


def residuals(gamma, Y, zeta_norm, eta_norm, Z, H, e: ExponentPair):
    """Absolute residuals of both equations in cleared-denominator form.

    eq1: |kappa(Y) |zeta|^p / Z - kappa(gamma)|, eq2: |delta(Y) - r delta(gamma)|.
    Both sides of each live in [0, 1] (eq1) or [0, delta((p-1)^{-1})] (eq2).
    """
    zp = np.asarray(zeta_norm, dtype=float) ** e.p
    hq = np.asarray(eta_norm, dtype=float) ** e.q
    r = (hq * Z / (zp * H)) ** (1.0 / e.q)
    res1 = np.abs(kappa(Y, e) * zp / Z - kappa(gamma, e))
    res2 = np.abs(delta_fn(Y, e) - r * delta_fn(gamma, e))
    return res1, res2


def solve_system_arrays(zeta_norm, eta_norm, Z, H, e: ExponentPair):
    """Vectorised solver; returns (gamma, Y, res1, res2, iterations).

    Inputs must satisfy Z > |zeta|^p, H > |eta|^q and |eta|^q Z < |zeta|^p H
    elementwise.
    """
    _require_low_p(e)
    zeta_norm, eta_norm, Z, H = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (zeta_norm, eta_norm, Z, H))
    )
    zeta_norm, eta_norm, Z, H = (np.array(a, dtype=float).ravel() for a in (zeta_norm, eta_norm, Z, H))
    zp = zeta_norm**e.p
    hq = eta_norm**e.q
    if np.any(~(Z > zp)) or np.any(~(H > hq)) or np.any(~(hq * Z < zp * H)):
        raise DomainError("solve_system needs Z > |zeta|^p, H > |eta|^q and |eta|^q Z < |zeta|^p H")
    gmax = e.gamma_max
    n = zeta_norm.size
    gamma = np.empty(n)
    Y = np.zeros(n)
    iters = np.zeros(n, dtype=int)

    zero = eta_norm == 0
    if np.any(zero):
        # Y = 0 and kappa(gamma) = |zeta|^p / Z.
        target = (Z[zero] - zp[zero]) / Z[zero]
        g, it = _bisect_increasing(
            lambda t: kappa_complement(t, e) - target,
            np.zeros(target.size),
            np.full(target.size, gmax),
        )
        gamma[zero] = g
        iters[zero] = it

    nz = ~zero
    if np.any(nz):
        zpn, Zn = zp[nz], Z[nz]
        r = (hq[nz] * Zn / (zpn * H[nz])) ** (1.0 / e.q)
        ymax = delta_inverse(r * delta_fn(gmax, e), e, gmax)
        lo = 1e-12 * ymax
        hi = ymax * (1.0 - 1e-12)

        gap = (Zn - zpn) / Zn
        ratio = zpn / Zn

        def fhat(y):
            # Same sign as kappa(y)|zeta|^p/Z - kappa(G(y)), written with
            # 1 - kappa so that small gamma keeps its relative accuracy.
            return kappa_complement(_G_array(y, r, e, gmax), e) - (gap + kappa_complement(y, e) * ratio)

        f_lo, f_hi = fhat(lo), fhat(hi)
        bad = ~((f_lo < 0) & (f_hi > 0))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise SolverError(
                "bracket sign condition violated: "
                f"Fhat(lo)={f_lo[i]!r}, Fhat(hi)={f_hi[i]!r} at |zeta|={zeta_norm[nz][i]!r}, "
                f"|eta|={eta_norm[nz][i]!r}, Z={Zn[i]!r}, H={H[nz][i]!r}"
            )
        y, it = _illinois_increasing(fhat, lo, hi, f_lo, f_hi)
        Y[nz] = y
        gamma[nz] = _G_array(y, r, e, gmax)
        iters[nz] = it

    res1, res2 = residuals(gamma, Y, zeta_norm, eta_norm, Z, H, e)
    return gamma, Y, res1, res2, iters


def solve_system(s: ScalarParams, e: ExponentPair, tol: float = RESIDUAL_TOL) -> GammaYSolution:
    """Solve for (gamma, Y) at a single second-branch point."""
    gamma, Y, res1, res2, iters = solve_system_arrays(s.zeta_norm, s.eta_norm, s.Z, s.H, e)
    sol = GammaYSolution(float(gamma[0]), float(Y[0]), float(res1[0]), float(res2[0]), int(iters[0]))
    if max(sol.residual_eq1, sol.residual_eq2) > tol:
        raise SolverError(f"residuals above {tol}: {sol}")
    return sol


def minimize_L_grid(
    s: ScalarParams, e: ExponentPair, grid_n: int = 200, refine_rounds: int = 4
) -> GammaYSolution:
    """Brute-force minimum of w over the triangle 0 <= Y <= gamma <= (p-1)^{-1}.

    A uniform grid_n x grid_n grid is followed by refine_rounds passes, each
    on a window ten times narrower centred at the incumbent.  Test oracle only.
    """
    _require_low_p(e)
    if not (s.zeta_norm > 0 and s.Z > s.zeta_norm**e.p and s.H > s.eta_norm**e.q):
        raise DomainError("minimize_L_grid needs |zeta| > 0 and strict interior Z, H")
    if grid_n < 2 or refine_rounds < 0:
        raise DomainError("grid_n >= 2 and refine_rounds >= 0 required")
    gmax = e.gamma_max
    g_lo, g_hi, y_lo, y_hi = 0.0, gmax, 0.0, gmax
    best = (np.inf, np.nan, np.nan)
    cell = gmax
    for _ in range(refine_rounds + 1):
        gs = np.linspace(g_lo, g_hi, grid_n)
        ys = np.linspace(y_lo, y_hi, grid_n)
        G, Yg = np.meshgrid(gs, ys, indexing="ij")
        ok = (G > 0) & (Yg <= G)
        vals = np.full(G.shape, np.inf)
        vals[ok] = w_objective(G[ok], Yg[ok], s, e)
        k = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[k] < best[0]:
            best = (float(vals[k]), float(G[k]), float(Yg[k]))
        cell = max(gs[1] - gs[0], ys[1] - ys[0])
        half_g = (g_hi - g_lo) / 20.0
        half_y = (y_hi - y_lo) / 20.0
        g_lo, g_hi = max(0.0, best[1] - half_g), min(gmax, best[1] + half_g)
        y_lo, y_hi = max(0.0, best[2] - half_y), min(gmax, best[2] + half_y)
    _, gamma, Y = best
    res1, res2 = residuals(gamma, Y, s.zeta_norm, s.eta_norm, s.Z, s.H, e)
    return GammaYSolution(gamma, Y, float(res1), float(res2), refine_rounds + 1, resolution=float(cell))
