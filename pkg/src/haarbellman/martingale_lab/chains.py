"""The two extremal Markov martingale pairs (f, g) and their exact terminal
statistics.

Case 2 chain, started at (1, Y) with 0 <= Y < gamma < (p-1)^{-1}:

* (x, y) with 0 < |y| < gamma x moves along the slope of -sign(y) either onto
  the line |y| = gamma x (absorbing) or onto the axis at (x + |y|, 0);
* (x, 0) moves to (x(1+delta), +-delta x) or to (x/(gamma+1), +-gamma x/(gamma+1)).

Every terminal point satisfies |g| = gamma f, and the f-values form a
geometric ladder (1+Y)/(gamma+1) (1+2 delta)^k.  The case 1 chain prepends a
single step from (1, Y) to (1-eps, Y+eps) (absorbing) or to (1+Y, 0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..special_functions import DomainError

MASS_TOL = 1e-14
MAX_ATOMS = 2_000_000


@dataclass(frozen=True)
class ChainParams:
    p: float
    gamma: float
    Y: float
    delta: float
    eps: float = 0.0

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise DomainError(f"chains are built for 1 < p <= 2, got p={self.p}")
        gmax = 1.0 / (self.p - 1.0)
        if not 0.0 < self.gamma < gmax:
            raise DomainError(f"gamma must lie in (0, {gmax}), got {self.gamma}")
        if not self.Y >= 0.0:
            raise DomainError(f"Y must be nonnegative, got {self.Y}")
        if not self.delta > 0.0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if self.eps < 0.0:
            raise DomainError(f"eps must be nonnegative, got {self.eps}")

    @property
    def is_case1(self) -> bool:
        return self.eps > 0.0


@dataclass
class ChainStats:
    f_values: np.ndarray
    g_abs: np.ndarray
    masses: np.ndarray
    tail_ratio: float
    Ef_p: float
    Eg_p: float
    Eg_signed_power: float
    Ef_mean: float
    Eg_mean: float
    extra: dict = field(default_factory=dict)

    def as_dict(self, max_atoms: int = 50) -> dict:
        n = min(max_atoms, self.masses.size)
        return {
            "tail_ratio": self.tail_ratio,
            "Ef_p": self.Ef_p,
            "Eg_p": self.Eg_p,
            "Eg_signed_power": self.Eg_signed_power,
            "Ef_mean": self.Ef_mean,
            "Eg_mean": self.Eg_mean,
            "n_atoms": int(self.masses.size),
            "atoms": [
                {"f_value": float(self.f_values[i]), "g_abs": float(self.g_abs[i]), "mass": float(self.masses[i])}
                for i in range(n)
            ],
            **self.extra,
        }


def tail_ratio(gamma: float, delta: float) -> float:
    """Probability of returning to the axis one rung higher, starting on the axis."""
    return (gamma + delta * (gamma - 1.0)) / ((1.0 + 2.0 * delta) * (gamma + delta * (gamma + 1.0)))


def axis_step(x, gamma: float, delta: float):
    """Four successors of (x, 0) and their probabilities."""
    x = np.asarray(x, dtype=float)
    den = 2.0 * gamma + 2.0 * delta * (gamma + 1.0)
    a = gamma / den
    c = delta * (gamma + 1.0) / den
    xs = np.stack([x * (1 + delta), x * (1 + delta), x / (gamma + 1), x / (gamma + 1)])
    ys = np.stack([delta * x, -delta * x, gamma * x / (gamma + 1), -gamma * x / (gamma + 1)])
    probs = np.array([a, a, c, c])
    return xs, ys, probs


def interior_step(x, y, gamma: float):
    """Successors of (x, y), 0 < |y| < gamma x: (line point, axis point) and the line probability."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.sign(y)
    m = x + np.abs(y)
    line = (m / (gamma + 1.0), s * gamma * m / (gamma + 1.0))
    axis = (m, np.zeros_like(m))
    prob_line = np.abs(y) * (gamma + 1.0) / (gamma * m)
    return line, axis, prob_line


def _one_minus_rho_p_tail(p: float, gamma, delta: float):
    # 1 - (1+2 delta)^p * tail_ratio, without cancellation
    lg = (p - 1.0) * np.log1p(2 * delta) + np.log1p(delta * (gamma - 1.0) / gamma) - np.log1p(
        delta * (gamma + 1.0) / gamma
    )
    return -np.expm1(lg)


def ladder_moments(p: float, gamma, delta: float):
    """Closed-form E f^p and E f for the case 2 rules started at (1, 0).

    Vectorised over gamma.  Rung k >= 1 (f = (1+2 delta)^k/(gamma+1)) is
    reached with probability A P^{k-1}; the geometric sums are done exactly.
    """
    gamma = np.asarray(gamma, dtype=float)
    denom_p = _one_minus_rho_p_tail(p, gamma, delta)
    if np.any(denom_p <= 0):
        raise DomainError(
            f"delta too large for given gamma: (1+2 delta)^p P >= 1 (min margin {np.min(denom_p):.3g}), series diverges"
        )
    rho = 1.0 + 2.0 * delta
    v0 = 1.0 / (gamma + 1.0)
    A = gamma / (gamma + delta * (gamma + 1.0))
    one_minus_P = 2 * delta * (gamma + 1) * (1 + delta) / ((1 + 2 * delta) * (gamma + delta * (gamma + 1)))
    one_minus_rhoP = 2 * delta / (gamma + delta * (gamma + 1))
    Ef_p = v0**p * ((1.0 - A) + A * one_minus_P * rho**p / denom_p)
    Ef = v0 * ((1.0 - A) + A * one_minus_P * rho / one_minus_rhoP)
    return Ef_p, Ef


def _ladder_atoms(gamma: float, delta: float, x0: float, reach_mass: float):
    """Terminal atoms of the ladder from (x0, 0), truncated once the
    cumulative mass reaches 1 - MASS_TOL (remainder on the last atom)."""
    P = tail_ratio(gamma, delta)
    one_minus_P = 1.0 - P
    A = gamma / (gamma + delta * (gamma + 1.0))
    k_max = int(np.ceil(np.log(MASS_TOL) / np.log(P))) + 1 if 0 < P < 1 else 1
    k_max = min(max(k_max, 1), MAX_ATOMS)
    k = np.arange(1, k_max + 1)
    masses = np.concatenate([[1.0 - A], A * np.exp((k - 1) * np.log(P)) * one_minus_P])
    masses[-1] += 1.0 - masses.sum()
    f_values = x0 / (gamma + 1.0) * np.exp(np.concatenate([[0.0], k * np.log1p(2 * delta)]))
    return f_values, masses * reach_mass


def case2_moments(p: float, gamma, Y, delta: float):
    """(E f^p, E f, E g|g|^{p-2}) of the case 2 chain; vectorised over gamma, Y."""
    gamma = np.asarray(gamma, dtype=float)
    Y = np.asarray(Y, dtype=float)
    pi_line = Y * (gamma + 1.0) / (gamma * (1.0 + Y))
    f_line = (1.0 + Y) / (gamma + 1.0)
    lad_p, lad_1 = ladder_moments(p, gamma, delta)
    Ef_p = pi_line * f_line**p + (1.0 - pi_line) * (1.0 + Y) ** p * lad_p
    Ef = pi_line * f_line + (1.0 - pi_line) * (1.0 + Y) * lad_1
    # conditionally on reaching the axis g is symmetric; only the line atom survives
    Eg_signed = pi_line * (gamma * f_line) ** (p - 1.0)
    return Ef_p, Ef, Eg_signed


def case1_moments(p: float, gamma: float, Y, eps, delta: float):
    """(E f^p, E g^p, E f, E g|g|^{p-2}) of the case 1 chain; vectorised over Y, eps."""
    Y = np.asarray(Y, dtype=float)
    eps = np.asarray(eps, dtype=float)
    w_abs = Y / (Y + eps)
    w_axis = eps / (Y + eps)
    lad_p, lad_1 = ladder_moments(p, gamma, delta)
    axis_p = w_axis * (1.0 + Y) ** p * lad_p
    Ef_p = w_abs * (1.0 - eps) ** p + axis_p
    Eg_p = w_abs * (Y + eps) ** p + gamma**p * axis_p
    Ef = w_abs * (1.0 - eps) + w_axis * (1.0 + Y) * lad_1
    Eg_signed = w_abs * (Y + eps) ** (p - 1.0)
    return Ef_p, Eg_p, Ef, Eg_signed


def extremal_chain_case2(cp: ChainParams, materialize: bool = True) -> ChainStats:
    """Exact terminal statistics of the chain started at (1, Y), eps = 0."""
    if cp.is_case1:
        raise DomainError("case 2 chain needs eps = 0")
    p, gamma, Y, delta = cp.p, cp.gamma, cp.Y, cp.delta
    if not Y < gamma:
        raise DomainError(f"case 2 chain needs Y < gamma, got Y={Y}, gamma={gamma}")
    Ef_p, Ef, Eg_signed = (float(v) for v in case2_moments(p, gamma, Y, delta))
    pi_line = Y * (gamma + 1.0) / (gamma * (1.0 + Y))
    if materialize:
        fv, ms = _ladder_atoms(gamma, delta, 1.0 + Y, 1.0 - pi_line)
        ms[0] += pi_line  # the line atom coincides with rung 0
    else:
        fv, ms = np.empty(0), np.empty(0)
    return ChainStats(
        f_values=fv,
        g_abs=gamma * fv,
        masses=ms,
        tail_ratio=tail_ratio(gamma, delta),
        Ef_p=Ef_p,
        Eg_p=gamma**p * Ef_p,
        Eg_signed_power=Eg_signed,
        Ef_mean=Ef,
        Eg_mean=Y,
        extra={"case": 2, "first_step_line_mass": pi_line},
    )


def case1_epsilon(p: float, gamma: float, Y: float, z_ratio: float) -> float:
    """First-step size for the case 1 chain; z_ratio is Zbar/|zeta|^p."""
    return (1.0 - (p - 1.0) * gamma) * Y * (1.0 + gamma) ** (p - 1.0) / (1.0 + Y) ** p * (z_ratio - 1.0)


def extremal_chain_case1(cp: ChainParams, materialize: bool = True) -> ChainStats:
    """Exact statistics of the chain (1,Y) -> (1-eps, Y+eps) | (1+Y, 0) -> case 2 rules."""
    if not cp.is_case1:
        raise DomainError("case 1 chain needs eps > 0")
    p, gamma, Y, delta, eps = cp.p, cp.gamma, cp.Y, cp.delta, cp.eps
    if not Y > 0:
        raise DomainError("case 1 chain needs Y > 0")
    if not eps < 1.0:
        raise DomainError(f"eps must be below 1, got {eps}")
    if not Y + eps >= gamma * (1.0 - eps):
        raise DomainError("(1-eps, Y+eps) is not absorbing: need Y + eps >= gamma (1 - eps)")
    Ef_p, Eg_p, Ef, Eg_signed = (float(v) for v in case1_moments(p, gamma, Y, eps, delta))
    w_abs = Y / (Y + eps)
    if materialize:
        fv, ms = _ladder_atoms(gamma, delta, 1.0 + Y, 1.0 - w_abs)
        f_values = np.concatenate([[1.0 - eps], fv])
        g_abs = np.concatenate([[Y + eps], gamma * fv])
        masses = np.concatenate([[w_abs], ms])
    else:
        f_values = g_abs = masses = np.empty(0)
    return ChainStats(
        f_values=f_values,
        g_abs=g_abs,
        masses=masses,
        tail_ratio=tail_ratio(gamma, delta),
        Ef_p=Ef_p,
        Eg_p=Eg_p,
        Eg_signed_power=Eg_signed,
        Ef_mean=Ef,
        Eg_mean=Y,
        extra={"case": 1, "absorbing_mass": w_abs, "first_step_axis_mass": 1.0 - w_abs},
    )


def extremal_chain(cp: ChainParams, materialize: bool = True) -> ChainStats:
    if cp.is_case1:
        return extremal_chain_case1(cp, materialize)
    return extremal_chain_case2(cp, materialize)


def limit_Ef_p_case2(p: float, gamma: float, Y: float) -> float:
    """delta -> 0 limit of E f^p for the case 2 chain."""
    return ((1.0 + Y) / (gamma + 1.0)) ** (p - 1.0) * (1.0 - (p - 1.0) * Y) / (1.0 - (p - 1.0) * gamma)


@dataclass
class MCEstimate:
    mean: float
    stderr: float


@dataclass
class ChainMC:
    n_paths: int
    capped: int
    max_steps: int
    max_edge_defect: float
    Ef_p: MCEstimate
    Eg_p: MCEstimate
    Eg_signed_power: MCEstimate
    Ef_mean: MCEstimate
    Eg_mean: MCEstimate

    def as_dict(self) -> dict:
        out = {"n_paths": self.n_paths, "capped": self.capped, "max_steps": self.max_steps,
               "max_edge_defect": self.max_edge_defect}
        for name in ("Ef_p", "Eg_p", "Eg_signed_power", "Ef_mean", "Eg_mean"):
            est = getattr(self, name)
            out[name] = {"mean": est.mean, "stderr": est.stderr}
        return out


def _estimate(v: np.ndarray) -> MCEstimate:
    n = v.size
    return MCEstimate(float(v.mean()), float(v.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan"))


def simulate_chain_mc(cp: ChainParams, n_paths: int, seed: int, step_cap: int = 1_000_000) -> ChainMC:
    """Monte Carlo run of the chain, all paths advanced in lockstep.

    Interior branch probabilities follow from the martingale property.  Paths
    still running after step_cap steps are counted in ``capped`` and
    excluded from the estimates.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    p, gamma, delta = cp.p, cp.gamma, cp.delta
    rng = np.random.default_rng(seed)
    x = np.ones(n_paths)
    y = np.full(n_paths, cp.Y)
    active = np.ones(n_paths, dtype=bool)
    defect = 0.0

    if cp.is_case1:
        eps = cp.eps
        u = rng.random(n_paths)
        stay = u < cp.Y / (cp.Y + eps)
        nx = np.where(stay, 1.0 - eps, 1.0 + cp.Y)
        ny = np.where(stay, cp.Y + eps, 0.0)
        defect = max(defect, float(np.max(np.abs(np.abs(ny - y) - np.abs(nx - x)))))
        x, y = nx, ny
        active = ~stay
    elif cp.Y >= gamma:
        raise DomainError("case 2 chain needs Y < gamma")

    steps = 0
    while np.any(active) and steps < step_cap:
        idx = np.flatnonzero(active)
        xa, ya = x[idx], y[idx]
        u = rng.random(idx.size)
        nx = np.empty_like(xa)
        ny = np.empty_like(ya)
        still = np.ones(idx.size, dtype=bool)

        on_axis = ya == 0.0
        if np.any(on_axis):
            xs, ys, probs = axis_step(xa[on_axis], gamma, delta)
            pick = np.searchsorted(np.cumsum(probs), u[on_axis], side="right").clip(max=3)
            cols = np.arange(pick.size)
            nx[on_axis] = xs[pick, cols]
            ny[on_axis] = ys[pick, cols]
            still[on_axis] = pick < 2
        inner = ~on_axis
        if np.any(inner):
            (lx, ly), (axx, axy), pl = interior_step(xa[inner], ya[inner], gamma)
            to_line = u[inner] < pl
            nx[inner] = np.where(to_line, lx, axx)
            ny[inner] = np.where(to_line, ly, axy)
            still[inner] = ~to_line

        defect = max(defect, float(np.max(np.abs(np.abs(ny - ya) - np.abs(nx - xa)) / (1.0 + xa))))
        x[idx], y[idx] = nx, ny
        active[idx] = still
        steps += 1

    capped = int(active.sum())
    done = ~active
    f, g = x[done], y[done]
    return ChainMC(
        n_paths=n_paths,
        capped=capped,
        max_steps=steps,
        max_edge_defect=defect,
        Ef_p=_estimate(f**p),
        Eg_p=_estimate(np.abs(g) ** p),
        Eg_signed_power=_estimate(np.sign(g) * np.abs(g) ** (p - 1.0)),
        Ef_mean=_estimate(f),
        Eg_mean=_estimate(g),
    )
