"""Finite martingale trees with a differentially subordinate second
coordinate, and the exact expectation check of the auxiliary estimate

    E|g_n|^p <= C(gamma) E|f_n|^p + b_{p,gamma}(f_0, g_0).

A tree with branching b stores level j as arrays of b^j nodes; the children
of node i at level j are nodes i*b, ..., i*b + b - 1 at level j + 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..special_functions import DomainError, ExponentPair, b_special, cost_constant

PROB_TOL = 1e-12
MARTINGALE_TOL = 1e-10
SUBORDINATION_TOL = 1e-12
MAX_DEPTH = 12


class InvalidTreeError(ValueError):
    """A MartingaleTree invariant is violated."""


@dataclass(frozen=True)
class MartingaleTree:
    branching: int
    f_levels: tuple[np.ndarray, ...]  # level j has shape (branching**j, dim)
    g_levels: tuple[np.ndarray, ...]
    cond_probs: tuple[np.ndarray, ...]  # probability of each node given its parent

    @property
    def depth(self) -> int:
        return len(self.f_levels) - 1

    @property
    def dimension(self) -> int:
        return self.f_levels[0].shape[1]

    def leaf_probabilities(self) -> np.ndarray:
        w = np.ones(1)
        for cp in self.cond_probs[1:]:
            w = np.repeat(w, self.branching) * cp
        return w

    def check(self) -> None:
        """Raise InvalidTreeError unless all three invariants hold."""
        b = self.branching
        for j in range(1, self.depth + 1):
            pf, pg = self.f_levels[j - 1], self.g_levels[j - 1]
            cf, cg, cp = self.f_levels[j], self.g_levels[j], self.cond_probs[j]
            n = pf.shape[0]
            if cf.shape != (n * b, self.dimension) or cp.shape != (n * b,):
                raise InvalidTreeError(f"level {j} has the wrong shape")
            P = cp.reshape(n, b)
            if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > PROB_TOL:
                raise InvalidTreeError(f"children probabilities at level {j} do not sum to 1")
            for parent, child, name in ((pf, cf, "f"), (pg, cg, "g")):
                mean = np.einsum("nb,nbd->nd", P, child.reshape(n, b, -1))
                err = np.abs(mean - parent) / (1.0 + np.abs(parent))
                if np.max(err) > MARTINGALE_TOL:
                    raise InvalidTreeError(f"martingale property fails for {name} at level {j}: {np.max(err):.3g}")
            df = np.linalg.norm(cf - np.repeat(pf, b, axis=0), axis=1)
            dg = np.linalg.norm(cg - np.repeat(pg, b, axis=0), axis=1)
            if np.any(dg > df + SUBORDINATION_TOL * np.maximum(1.0, df)):
                raise InvalidTreeError(f"|dg| > |df| at level {j}")

    def moments(self, p: float) -> tuple[float, float]:
        """(E|f_n|^p, E|g_n|^p) over the leaves."""
        w = self.leaf_probabilities()
        fn = np.linalg.norm(self.f_levels[-1], axis=1)
        gn = np.linalg.norm(self.g_levels[-1], axis=1)
        return float(w @ fn**p), float(w @ gn**p)


def _contraction(rng: np.random.Generator, shape: tuple, dim: int) -> np.ndarray:
    """Random matrices Q1 diag(s) Q2 with |s| <= 1, operator norm at most 1."""
    a = rng.normal(size=shape + (dim, dim))
    b = rng.normal(size=shape + (dim, dim))
    q1, _ = np.linalg.qr(a)
    q2, _ = np.linalg.qr(b)
    s = rng.uniform(-1.0, 1.0, size=shape + (dim,))
    return q1 @ (s[..., :, None] * q2)


def random_ds_pair(seed: int, depth: int, branching: int, dim: int, mode: str = "mixed") -> MartingaleTree:
    """A random tree (f, g) with g differentially subordinate to f.

    Per parent node: f-increments are drawn with conditional mean zero;
    g-increments are either a common sign times the f-increments
    (mode "sign") or random contractions of them, recentred to conditional
    mean zero and rescaled by a common factor wherever |dg| > |df|
    (mode "contraction").  "mixed" picks one of the two per node.
    """
    if not 0 <= depth <= MAX_DEPTH:
        raise DomainError(f"depth must lie in [0, {MAX_DEPTH}], got {depth}")
    if branching not in (2, 3):
        raise DomainError(f"branching must be 2 or 3, got {branching}")
    if dim < 1:
        raise DomainError(f"dim must be positive, got {dim}")
    if mode not in ("mixed", "sign", "contraction"):
        raise DomainError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    b = branching
    scale = np.exp(rng.normal(scale=0.5))
    f = [rng.normal(scale=scale, size=(1, dim))]
    g = [rng.normal(scale=scale, size=(1, dim))]
    probs = [np.ones(1)]
    for _ in range(depth):
        n = f[-1].shape[0]
        P = rng.uniform(0.05, 1.0, size=(n, b))
        P /= P.sum(axis=1, keepdims=True)
        step = scale * np.exp(rng.normal(scale=0.5, size=(n, 1, 1)))
        df = rng.normal(size=(n, b, dim)) * step
        df -= np.einsum("nb,nbd->nd", P, df)[:, None, :]

        sign = rng.choice([-1.0, 1.0], size=(n, 1, 1))
        dg_sign = sign * df
        dg = np.einsum("nbij,nbj->nbi", _contraction(rng, (n, b), dim), df)
        dg -= np.einsum("nb,nbd->nd", P, dg)[:, None, :]
        nf = np.linalg.norm(df, axis=2)
        ng = np.linalg.norm(dg, axis=2)
        ratio = np.where(ng > nf, nf / np.where(ng > 0, ng, 1.0), 1.0)
        lam = ratio.min(axis=1)
        lam = np.where(lam < 1.0, lam * (1.0 - 1e-14), 1.0)
        dg_con = dg * lam[:, None, None]

        if mode == "sign":
            use_sign = np.ones((n, 1, 1), dtype=bool)
        elif mode == "contraction":
            use_sign = np.zeros((n, 1, 1), dtype=bool)
        else:
            use_sign = rng.random(size=(n, 1, 1)) < 0.5
        dg = np.where(use_sign, dg_sign, dg_con)

        f.append((f[-1][:, None, :] + df).reshape(n * b, dim))
        g.append((g[-1][:, None, :] + dg).reshape(n * b, dim))
        probs.append(P.reshape(n * b))
    tree = MartingaleTree(b, tuple(f), tuple(g), tuple(probs))
    tree.check()
    return tree


def subordination_terms(t: MartingaleTree, gamma: float, e: ExponentPair) -> tuple[float, float, float, float]:
    """(C(gamma) E|f_n|^p, b(f_0, g_0), E|g_n|^p, slack)."""
    if not 1.0 < e.p <= 2.0:
        raise DomainError(f"the auxiliary estimate needs 1 < p <= 2, got p={e.p}")
    if not 0.0 < gamma <= e.gamma_max * (1 + 1e-14):
        raise DomainError(f"gamma must lie in (0, {e.gamma_max}], got {gamma}")
    Ef, Eg = t.moments(e.p)
    cf = cost_constant(gamma, e) * Ef
    b0 = b_special(t.f_levels[0][0], t.g_levels[0][0], gamma, e)
    return cf, b0, Eg, cf + b0 - Eg


def verify_subordination_bound(t: MartingaleTree, gamma: float, e: ExponentPair) -> float:
    """Slack C(gamma) E|f_n|^p + b(f_0, g_0) - E|g_n|^p; nonnegative in theory."""
    t.check()
    return subordination_terms(t, gamma, e)[3]


def subordination_scale(t: MartingaleTree, gamma: float, e: ExponentPair) -> float:
    cf, b0, Eg, _ = subordination_terms(t, gamma, e)
    return 1.0 + cf + abs(b0) + Eg
