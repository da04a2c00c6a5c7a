"""Feasible values of E<g_inf, h_inf> - <E g_inf, E h_inf> built from the
extremal chains.  Each one is a lower bound for the Bellman function as long
as the moment constraints E|f|^p <= Z and E|h|^q <= H hold, which
:class:`LowerBound` reports explicitly.

At finite delta the chains spend slightly more of E|f|^p than the budget
they were sized for.  :func:`calibrated_lower_bound` therefore searches for
the largest sizing whose actual usage stays within the shrunken budgets, so
the returned value is always admissible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bellman import BellmanPoint
from ..special_functions import DomainError, ExponentPair
from ..system_solver import solve_system_arrays
from .chains import case1_moments, case2_moments

S_MAX = 1.0 - 1e-15
SEARCH_POINTS = 254
SEARCH_RTOL = 1e-12


@dataclass(frozen=True)
class LowerBound:
    value: float
    case: int
    gamma: float
    Y: float
    eps: float
    Zbar: float
    Hbar: float
    Ef_p: float  # E|f_inf|^p, unnormalised
    Eh_q: float  # E|h_inf|^q
    Eh_norm_defect: float  # |E h_inf - eta|
    sizing: float = float("nan")  # shrink actually used to size the chain

    def feasible(self, pt: BellmanPoint) -> bool:
        return self.Ef_p <= pt.Z and self.Eh_q <= pt.H

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _norms(pt: BellmanPoint, e: ExponentPair):
    if not 1.0 < e.p <= 2.0:
        raise DomainError("lower bounds are built for 1 < p <= 2")
    zn, en = pt.zeta_norm, pt.eta_norm
    zp, hq = zn**e.p, en**e.q
    if not (pt.Z > zp and pt.H > hq):
        raise DomainError("lower_bound needs an interior point (Z > |zeta|^p, H > |eta|^q)")
    if zn == 0.0:
        raise DomainError("the chain construction scales by |zeta| and needs zeta != 0")
    return zn, en, zp, hq


def _assemble(pt: BellmanPoint, e: ExponentPair, delta: float, s) -> dict:
    """Chain statistics for every sizing shrink in the array s."""
    zn, en, zp, hq = _norms(pt, e)
    p, q = e.p, e.q
    s = np.atleast_1d(np.asarray(s, dtype=float))
    Zbar = zp + s * (pt.Z - zp)
    Hbar = hq + s * (pt.H - hq)
    out = {"Zbar": Zbar, "Hbar": Hbar}
    # hq Zbar - zp Hbar = s (hq Z - zp H), so the case does not depend on s
    if hq * pt.Z < zp * pt.H:
        gamma, Y, _, _, _ = solve_system_arrays(zn, en, Zbar, Hbar, e)
        Ef_p, _, Eg_signed = case2_moments(p, gamma, Y, delta)
        Eg_p = gamma**p * Ef_p
        c = (Hbar * zp / (Zbar * gamma**p)) ** (1.0 / q)
        out.update(
            case=2,
            gamma=gamma,
            Y=Y,
            eps=np.zeros_like(s),
            value=zn * c * Eg_p - zn * en * Y,
            Ef_p=zp * Ef_p,
            Eh_q=c**q * Eg_p,
            Eh=c * Eg_signed,
        )
        return out
    # stationary point of F; invariant under the shrink since both gaps scale by s
    Y = ((pt.Z - zp) / (pt.H - hq) * hq / zp) ** (1.0 / p) / (p - 1.0)
    gamma = (1.0 - 10.0 * delta) / (p - 1.0)
    if not gamma > 0:
        raise DomainError(f"delta={delta} too large for the case 1 chain")
    eps = (1.0 - (p - 1.0) * gamma) * Y * (1.0 + gamma) ** (p - 1.0) / (1.0 + Y) ** p * (Zbar / zp - 1.0)
    if np.any(~(eps > 0)) or np.any(~(eps < 1)):
        raise DomainError(f"case 1 needs 0 < eps < 1, got {eps}")
    Ef_p, Eg_p, _, Eg_signed = case1_moments(p, gamma, Y, eps, delta)
    scale = (Y + eps) ** (2.0 - p) / Y
    out.update(
        case=1,
        gamma=np.full_like(s, gamma),
        Y=np.full_like(s, Y),
        eps=eps,
        value=zn * en * scale * Eg_p - zn * en * Y,
        Ef_p=zp * Ef_p,
        Eh_q=hq * scale**q * Eg_p,
        Eh=en * scale * Eg_signed,
    )
    return out


def _pick(a: dict, i: int, en: float, s: float) -> LowerBound:
    return LowerBound(
        value=float(a["value"][i]),
        case=int(a["case"]),
        gamma=float(a["gamma"][i]),
        Y=float(a["Y"][i]),
        eps=float(a["eps"][i]),
        Zbar=float(a["Zbar"][i]),
        Hbar=float(a["Hbar"][i]),
        Ef_p=float(a["Ef_p"][i]),
        Eh_q=float(a["Eh_q"][i]),
        Eh_norm_defect=abs(float(a["Eh"][i]) - en),
        sizing=s,
    )


def lower_bound(pt: BellmanPoint, e: ExponentPair, delta: float, shrink: float) -> LowerBound:
    """The chain sized for the budgets Zbar, Hbar at the given shrink, as is.

    At finite delta its usage E|f|^p may exceed Zbar slightly; see
    :func:`calibrated_lower_bound`.
    """
    if not 0.0 < shrink < 1.0:
        raise DomainError(f"shrink must lie in (0, 1), got {shrink}")
    a = _assemble(pt, e, delta, shrink)
    return _pick(a, 0, pt.eta_norm, shrink)


def calibrated_lower_bound(pt: BellmanPoint, e: ExponentPair, delta: float, shrink: float) -> LowerBound:
    """Largest chain sizing whose usage fits the shrunken budgets.

    The budgets are Z_t = |zeta|^p + shrink (Z - |zeta|^p) and likewise H_t.
    The sizing runs over (0, 1); the search keeps a feasible lower end and
    refines with SEARCH_POINTS trial sizings per round.
    """
    if not 0.0 < shrink < 1.0:
        raise DomainError(f"shrink must lie in (0, 1), got {shrink}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    zn, en, zp, hq = _norms(pt, e)
    Zt = zp + shrink * (pt.Z - zp)
    Ht = hq + shrink * (pt.H - hq)

    def ok(a):
        return (a["Ef_p"] <= Zt) & (a["Eh_q"] <= Ht)

    top = _assemble(pt, e, delta, S_MAX)
    if ok(top)[0]:
        return _pick(top, 0, en, S_MAX)
    lo, hi = shrink, S_MAX
    for _ in range(60):
        a = _assemble(pt, e, delta, lo)
        if ok(a)[0]:
            break
        hi, lo = lo, lo / 2.0
    else:
        raise DomainError("no feasible chain sizing found")
    best, best_s = a, lo
    best_i = 0
    while hi - lo > SEARCH_RTOL * hi:
        grid = np.linspace(lo, hi, SEARCH_POINTS + 2)[1:-1]
        a = _assemble(pt, e, delta, grid)
        good = np.flatnonzero(ok(a))
        if good.size:
            k = int(good[-1])
            lo = float(grid[k])
            best, best_s, best_i = a, lo, k
            hi = float(grid[k + 1]) if k + 1 < grid.size else hi
        else:
            hi = float(grid[0])
    return _pick(best, best_i, en, best_s)


def lower_bound_value(pt: BellmanPoint, e: ExponentPair, delta: float = 1e-4, shrink: float = 0.999) -> float:
    return calibrated_lower_bound(pt, e, delta, shrink).value
