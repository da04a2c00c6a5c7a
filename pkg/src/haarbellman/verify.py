"""Property suites with pass/fail reports and counterexample capture.

Every suite is deterministic per seed.  Slacks are normalised by

    scale = 1 + |value| + (p* - 1) Z^{1/p} H^{1/q}

(or a suite-specific analogue) and a sample fails when its slack drops
below -tol * scale.  ``worst_slack`` in a report is the smallest
normalised slack seen.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bellman import BellmanPoint, bellman_arrays, eval_bellman, eval_via_infimum, upper_bound_at
from .special_functions import ExponentPair, F_minimizer, ScalarParams, b_scalar, cost_constant
from .martingale_lab.haar import verify_haar_unconditionality
from .martingale_lab.lower_bound import lower_bound_value
from .martingale_lab.trees import random_ds_pair, subordination_terms

P_LIST = (1.1, 1.5, 2.0, 3.0, 10.0)
DIM_LIST = (1, 2, 3)
BELLMAN_TOL = 1e-9
TREE_TOL = 1e-10
B_TOL = 1e-10
HAAR_TOL = 1e-10
DUALITY_RTOL = 1e-8
CONSISTENCY_RTOL = 1e-4


@dataclass
class VerificationReport:
    suite: str
    samples: int
    failures: int
    worst_slack: float
    worst_case_input: dict | None
    elapsed: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


class _Tally:
    """Accumulates normalised slacks and remembers the worst input."""

    def __init__(self, suite: str, tol: float):
        self.suite = suite
        self.tol = tol
        self.samples = 0
        self.failures = 0
        self.worst = np.inf
        self.worst_input = None
        self.details: dict = {}
        self.t0 = time.perf_counter()

    def add(self, slack: np.ndarray, scale: np.ndarray, describe) -> None:
        slack = np.atleast_1d(np.asarray(slack, dtype=float))
        scale = np.atleast_1d(np.asarray(scale, dtype=float))
        if slack.size == 0:
            return
        norm = np.nan_to_num(slack / scale, nan=-np.inf)
        bad = ~(norm >= -self.tol)
        self.samples += slack.size
        self.failures += int(bad.sum())
        i = int(np.argmin(norm))
        if norm[i] < self.worst:
            self.worst = float(norm[i])
            self.worst_input = describe(i)

    def report(self) -> VerificationReport:
        return VerificationReport(
            self.suite,
            self.samples,
            self.failures,
            float(self.worst) if self.samples else 0.0,
            self.worst_input,
            time.perf_counter() - self.t0,
            self.details,
        )


def bellman_scale(value, Z, H, e: ExponentPair):
    return 1.0 + np.abs(value) + (e.p_star - 1.0) * np.asarray(Z) ** (1.0 / e.p) * np.asarray(H) ** (1.0 / e.q)


def _point_dict(p, zeta, eta, Z, H, i) -> dict:
    return {"p": float(p), "zeta": zeta[i].tolist(), "eta": eta[i].tolist(), "Z": float(Z[i]), "H": float(H[i])}


def sample_points(rng: np.random.Generator, n: int, e: ExponentPair, dim: int, stratum: str = "interior"):
    """Random points of the domain as (zeta, eta, Z, H) with zeta, eta of shape (n, dim).

    zeta, eta are standard Gaussian; Z = |zeta|^p (1+u), H = |eta|^q (1+v)
    with u, v = 9 U^2 ("interior"), one of them 0 ("boundary") or one of
    them log-uniform in [1e-11, 1e-6] ("near_boundary").
    """
    zeta = rng.normal(size=(n, dim))
    eta = rng.normal(size=(n, dim))
    u = 9.0 * rng.random(n) ** 2
    v = 9.0 * rng.random(n) ** 2
    which = rng.random(n) < 0.5
    if stratum == "boundary":
        u = np.where(which, 0.0, u)
        v = np.where(which, v, 0.0)
    elif stratum == "near_boundary":
        tiny = 10.0 ** rng.uniform(-11, -6, size=n)
        u = np.where(which, tiny, u)
        v = np.where(which, v, tiny)
    elif stratum != "interior":
        raise ValueError(f"unknown stratum {stratum!r}")
    zn = np.linalg.norm(zeta, axis=1)
    en = np.linalg.norm(eta, axis=1)
    return zeta, eta, zn**e.p * (1.0 + u), en**e.q * (1.0 + v)


def _values(zeta, eta, Z, H, e: ExponentPair) -> np.ndarray:
    return bellman_arrays(np.linalg.norm(zeta, axis=1), np.linalg.norm(eta, axis=1), Z, H, e)[0]


def check_condition_I(n_samples: int = 10_000, seed: int = 0, p_list=P_LIST, dim_list=DIM_LIST) -> VerificationReport:
    """0 <= B <= (p*-1) Z^{1/p} H^{1/q}; n_samples per (p, dim), 10% boundary and 10% near-boundary."""
    tally = _Tally("I", BELLMAN_TOL)
    rng = np.random.default_rng(seed)
    n_b = n_samples // 10
    counts = {"boundary": n_b, "near_boundary": n_b, "interior": n_samples - 2 * n_b}
    p2_err = 0.0
    for p in p_list:
        e = ExponentPair.from_p(p)
        for dim in dim_list:
            for stratum, n in counts.items():
                zeta, eta, Z, H = sample_points(rng, n, e, dim, stratum)
                B = _values(zeta, eta, Z, H, e)
                top = (e.p_star - 1.0) * Z ** (1.0 / e.p) * H ** (1.0 / e.q)
                slack = np.minimum(B, top - B)
                if p == 2.0:
                    closed = np.sqrt(np.maximum(Z - np.sum(zeta**2, axis=1), 0.0) * np.maximum(H - np.sum(eta**2, axis=1), 0.0))
                    p2_err = max(p2_err, float(np.max(np.abs(B - closed) / bellman_scale(closed, Z, H, e), initial=0.0)))
                if stratum == "boundary":
                    tally.details["boundary_max_abs_value"] = max(
                        tally.details.get("boundary_max_abs_value", 0.0), float(np.max(np.abs(B), initial=0.0))
                    )
                tally.add(slack, bellman_scale(B, Z, H, e), lambda i: _point_dict(p, zeta, eta, Z, H, i))
    tally.details["strata"] = {k: v for k, v in counts.items()}
    tally.details["p2_closed_form_max_scaled_error"] = p2_err
    return tally.report()


def _repair(zeta, eta, Z, H, e: ExponentPair):
    Z = np.maximum(Z, np.linalg.norm(zeta, axis=1) ** e.p)
    H = np.maximum(H, np.linalg.norm(eta, axis=1) ** e.q)
    return zeta, eta, Z, H


def _pair_strata(rng: np.random.Generator, n: int, e: ExponentPair, dim: int, stratum: str):
    if stratum == "random":
        return sample_points(rng, n, e, dim), sample_points(rng, n, e, dim)
    if stratum == "close":
        zeta, eta, Z, H = sample_points(rng, n, e, dim)
        r = 10.0 ** rng.uniform(-6, -2, size=(n, 1))
        b = (
            zeta + r * rng.normal(size=zeta.shape),
            eta + r * rng.normal(size=eta.shape),
            Z * (1.0 + r[:, 0] * rng.normal(size=n)),
            H * (1.0 + r[:, 0] * rng.normal(size=n)),
        )
        return (zeta, eta, Z, H), _repair(*b, e)
    if stratum == "straddle":
        zeta, eta, Z, _ = sample_points(rng, n, e, dim)
        zp = np.linalg.norm(zeta, axis=1) ** e.p
        hq = np.linalg.norm(eta, axis=1) ** e.q
        H_int = hq * Z / zp  # |eta|^q Z = |zeta|^p H
        out = []
        for sgn in (-1.0, 1.0):
            r = 10.0 ** rng.uniform(-8, -1, size=(n, 1))
            a = (
                zeta + 0.1 * r * rng.normal(size=zeta.shape),
                eta + 0.1 * r * rng.normal(size=eta.shape),
                Z * (1.0 + 0.1 * r[:, 0] * rng.normal(size=n)),
                H_int * (1.0 + sgn * r[:, 0]),
            )
            out.append(_repair(*a, e))
        return out[0], out[1]
    raise ValueError(f"unknown stratum {stratum!r}")


def check_condition_II(
    n_samples: int = 700, seed: int = 0, p_list=P_LIST, dim_list=DIM_LIST, strata=("random", "straddle", "close")
) -> VerificationReport:
    """B(mid) - (B(a-)+B(a+))/2 >= |dzeta/2||deta/2|; n_samples pairs per (p, dim, stratum)."""
    tally = _Tally("II", BELLMAN_TOL)
    rng = np.random.default_rng(seed)
    per_stratum = {s: 0 for s in strata}
    for p in p_list:
        e = ExponentPair.from_p(p)
        for dim in dim_list:
            for stratum in strata:
                a, b = _pair_strata(rng, n_samples, e, dim, stratum)
                mid = tuple(0.5 * (x + y) for x, y in zip(a, b))
                Ba, Bb, Bm = _values(*a, e), _values(*b, e), _values(*mid, e)
                rhs = np.linalg.norm(0.5 * (b[0] - a[0]), axis=1) * np.linalg.norm(0.5 * (b[1] - a[1]), axis=1)
                slack = Bm - 0.5 * (Ba + Bb) - rhs
                scale = np.maximum.reduce(
                    [bellman_scale(Ba, a[2], a[3], e), bellman_scale(Bb, b[2], b[3], e), bellman_scale(Bm, mid[2], mid[3], e)]
                )

                def describe(i, a=a, b=b, p=p, stratum=stratum):
                    return {"stratum": stratum, "a_minus": _point_dict(p, *a, i), "a_plus": _point_dict(p, *b, i)}

                tally.add(slack, scale, describe)
                per_stratum[stratum] += n_samples
    tally.details["pairs_per_stratum"] = per_stratum
    return tally.report()


def check_duality(n_samples: int = 1000, seed: int = 0, p_list=(1.2, 1.5, 2.0), dim: int = 2) -> VerificationReport:
    """B_p(zeta, eta, Z, H) against B_q(eta, zeta, H, Z), n_samples per p.

    The q side goes through the exponent-swapping dispatch, so for p < 2
    this exercises that path; at p = 2 it is a genuine symmetry check.
    """
    tally = _Tally("duality", DUALITY_RTOL)
    rng = np.random.default_rng(seed)
    for p in p_list:
        e = ExponentPair.from_p(p)
        zeta, eta, Z, H = sample_points(rng, n_samples, e, dim)
        # strict interior only
        Z = Z * (1.0 + 1e-9) + 1e-12
        H = H * (1.0 + 1e-9) + 1e-12
        v1 = _values(zeta, eta, Z, H, e)
        v2 = _values(eta, zeta, H, Z, e.dual())
        tally.add(-np.abs(v1 - v2), np.maximum(np.abs(v1), 1e-300), lambda i, p=p, zeta=zeta, eta=eta, Z=Z, H=H: _point_dict(p, zeta, eta, Z, H, i))
    return tally.report()


def check_consistency(
    n_samples: int = 20, seed: int = 0, p_list=(1.2, 1.5, 1.8, 2.0), dim: int = 2, with_lower_bound: bool = True
) -> VerificationReport:
    """Infimum representation vs closed form, and lower <= B <= upper at the solved minimiser."""
    tally = _Tally("consistency", CONSISTENCY_RTOL)
    rng = np.random.default_rng(seed)
    worst = {"infimum": 0.0, "sandwich_width": 0.0}
    for p in p_list:
        e = ExponentPair.from_p(p)
        zeta, eta, Z, H = sample_points(rng, n_samples, e, dim)
        Z, H = Z + 1e-3 * (1.0 + Z), H + 1e-3 * (1.0 + H)
        for i in range(n_samples):
            pt = BellmanPoint(zeta[i], eta[i], Z[i], H[i])
            res = eval_bellman(pt, e)
            B = res.value
            if res.gamma is not None:
                gamma, s = res.gamma, pt.zeta_norm * res.Y
            else:
                gamma = e.gamma_max
                s = pt.zeta_norm * F_minimizer(ScalarParams(pt.zeta_norm, pt.eta_norm, pt.Z, pt.H), e)
            upper = upper_bound_at(pt, e, gamma, s)
            inf = eval_via_infimum(pt, e)
            slacks = [CONSISTENCY_RTOL * B - abs(inf - B), (upper - B) + CONSISTENCY_RTOL * B]
            worst["infimum"] = max(worst["infimum"], abs(inf - B) / B)
            if with_lower_bound:
                lower = lower_bound_value(pt, e)
                slacks.append(B - lower + BELLMAN_TOL * bellman_scale(B, pt.Z, pt.H, e))
                worst["sandwich_width"] = max(worst["sandwich_width"], (upper - lower) / B)
            # the tolerance is folded into the slacks, so the tally threshold is 0
            tally.add(np.array([min(slacks)]), np.array([B]), lambda _, pt=pt, p=p: {"p": p, **pt.as_dict()})
    tally.tol = 0.0
    tally.details["max_relative_errors"] = worst
    return tally.report()


def check_subordination(n_samples: int = 10_000, seed: int = 0, p_list=(1.2, 1.5, 1.8), max_depth: int = 8) -> VerificationReport:
    """Exact tree expectations against C(gamma) E|f|^p + b(f_0, g_0) - E|g|^p >= 0."""
    tally = _Tally("subordination", TREE_TOL)
    rng = np.random.default_rng(seed)
    for k in range(n_samples):
        depth = int(rng.integers(0, max_depth + 1))
        branching = int(rng.integers(2, 4))
        dim = int(rng.integers(1, 4))
        tree_seed = int(rng.integers(0, 2**63 - 1))
        mode = ("mixed", "sign", "contraction")[k % 3]
        t = random_ds_pair(tree_seed, depth, branching, dim, mode)
        for p in p_list:
            e = ExponentPair.from_p(p)
            for gamma in (0.3 * e.gamma_max, e.gamma_max):
                cf, b0, Eg, slack = subordination_terms(t, gamma, e)

                def describe(_, p=p, gamma=gamma):
                    return {"tree_seed": tree_seed, "depth": depth, "branching": branching, "dim": dim, "mode": mode, "p": p, "gamma": gamma}

                tally.add(np.array([slack]), np.array([1.0 + cf + abs(b0) + Eg]), describe)
    return tally.report()


def check_b_properties(n_samples: int = 100_000, seed: int = 0, p_list=(1.1, 1.3, 1.5, 1.8, 2.0), dim_list=DIM_LIST) -> VerificationReport:
    """Majorisation and midpoint concavity of t -> b(x+th, y+tk) for |k| <= |h|.

    n_samples configurations in total, split evenly over (p, dim); gamma is
    uniform in (0, (p-1)^{-1}] with a quarter of the draws at the endpoint.
    """
    tally = _Tally("b_properties", B_TOL)
    rng = np.random.default_rng(seed)
    combos = [(p, d) for p in p_list for d in dim_list]
    per = -(-n_samples // len(combos))
    for p, dim in combos:
        e = ExponentPair.from_p(p)
        n = per
        g = e.gamma_max * np.where(rng.random(n) < 0.25, 1.0, 1.0 - rng.random(n))
        x = rng.normal(size=(n, dim)) * np.exp(rng.normal(size=(n, 1)))
        y = rng.normal(size=(n, dim)) * np.exp(rng.normal(size=(n, 1)))
        h = rng.normal(size=(n, dim))
        k = rng.normal(size=(n, dim))
        k *= (rng.random((n, 1)) * np.linalg.norm(h, axis=1, keepdims=True)) / np.linalg.norm(k, axis=1, keepdims=True)
        s = 10.0 ** rng.uniform(-4, 0.5, size=(n, 1))

        def b(u, v):
            return b_scalar(np.linalg.norm(u, axis=1), np.linalg.norm(v, axis=1), g, e)

        c = cost_constant(g, e)
        xn, yn = np.linalg.norm(x, axis=1), np.linalg.norm(y, axis=1)
        b0 = b(x, y)
        maj = b0 - (yn**p - c * xn**p)
        tally.add(maj, 1.0 + np.abs(b0) + yn**p + c * xn**p, lambda i: {"check": "majorization", "p": p, "gamma": float(g[i]), "x": x[i].tolist(), "y": y[i].tolist()})
        bm, bp = b(x - s * h, y - s * k), b(x + s * h, y + s * k)
        conc = b0 - 0.5 * (bm + bp)
        tally.add(
            conc,
            1.0 + np.abs(b0) + np.abs(bm) + np.abs(bp),
            lambda i: {
                "check": "midpoint_concavity",
                "p": p,
                "gamma": float(g[i]),
                "x": x[i].tolist(),
                "y": y[i].tolist(),
                "h": (s[i] * h[i]).tolist(),
                "k": (s[i] * k[i]).tolist(),
            },
        )
    return tally.report()


def check_haar(n_samples: int = 10_000, seed: int = 0, p_list=(1.5, 3.0), max_coeffs: int = 128) -> VerificationReport:
    """Sign-changed Haar sums never exceed (p*-1) times the original in L^p."""
    tally = _Tally("haar", HAAR_TOL)
    rng = np.random.default_rng(seed)
    for _ in range(n_samples):
        n = int(rng.integers(1, max_coeffs + 1))
        dim = int(rng.integers(1, 4))
        a = rng.normal(size=(n, dim)) * np.exp(rng.normal(size=(n, 1)))
        a[rng.random(n) < 0.2] = 0.0
        if not np.any(a):
            a[0, 0] = 1.0
        signs = rng.choice([-1.0, 1.0], size=n)
        for p in p_list:
            e = ExponentPair.from_p(p)
            ratio = verify_haar_unconditionality(a, signs, e)
            tally.add(
                np.array([e.p_star - 1.0 - ratio]),
                np.array([1.0]),
                lambda _, p=p: {"p": p, "coeffs": a.tolist(), "signs": signs.tolist()},
            )
    return tally.report()


SUITES = {
    "I": check_condition_I,
    "II": check_condition_II,
    "duality": check_duality,
    "consistency": check_consistency,
    "subordination": check_subordination,
    "b": check_b_properties,
    "haar": check_haar,
}


def run_suites(names, seed: int = 0, quick: bool = False) -> list[VerificationReport]:
    """Run the named suites; quick mode shrinks every sample count."""
    quick_sizes = {"I": 500, "II": 50, "duality": 100, "consistency": 3, "subordination": 300, "b": 5000, "haar": 500}
    out = []
    for name in names:
        fn = SUITES[name]
        if quick:
            out.append(fn(n_samples=quick_sizes[name], seed=seed))
        else:
            out.append(fn(seed=seed))
    return out
