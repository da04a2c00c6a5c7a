"""Sign changes of Haar coefficients on a finite dyadic grid.

The Haar function with index k = 2^j + m (0 <= m < 2^j) is +1 on the left
half and -1 on the right half of [m 2^-j, (m+1) 2^-j); index 0 is the
constant 1.
"""
from __future__ import annotations

import numpy as np

from ..special_functions import DomainError, ExponentPair

MAX_COEFFS = 2**12


def haar_synthesis(coeffs) -> np.ndarray:
    """Values of sum_k a_k h_k on the 2^J cells of the finest grid needed.

    coeffs has shape (n+1,) or (n+1, d); the result has shape (2^J, d).
    """
    a = np.asarray(coeffs, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    n1 = a.shape[0]
    if not 1 <= n1 <= MAX_COEFFS:
        raise DomainError(f"need between 1 and {MAX_COEFFS} coefficients, got {n1}")
    levels = max(int(np.ceil(np.log2(n1))), 0) if n1 > 1 else 0
    cells = 2**levels
    pad = np.zeros((cells, a.shape[1]))
    pad[:n1] = a
    values = np.repeat(pad[:1], cells, axis=0)
    for j in range(levels):
        block = pad[2**j : 2 ** (j + 1)]  # one coefficient per interval of length 2^-j
        half = cells // 2 ** (j + 1)
        signed = np.stack([block, -block], axis=1).reshape(2 ** (j + 1), -1)
        values += np.repeat(signed, half, axis=0)
    return values


def lp_norm(values: np.ndarray, p: float) -> float:
    """L^p norm of the Euclidean norm of a step function on equal cells."""
    return float(np.mean(np.linalg.norm(values, axis=1) ** p) ** (1.0 / p))


def verify_haar_unconditionality(coeffs, signs, e: ExponentPair) -> float:
    """||sum eps_k a_k h_k||_p / ||sum a_k h_k||_p; at most p* - 1 in theory."""
    a = np.asarray(coeffs, dtype=float)
    s = np.asarray(signs, dtype=float)
    if s.shape != (a.shape[0],) or np.any(np.abs(s) != 1.0):
        raise DomainError("signs must be a vector of +-1 matching the number of coefficients")
    if not np.any(a):
        raise DomainError("all coefficients vanish; the ratio is undefined")
    base = haar_synthesis(a)
    flipped = haar_synthesis(a * (s if a.ndim == 1 else s[:, None]))
    return lp_norm(flipped, e.p) / lp_norm(base, e.p)
