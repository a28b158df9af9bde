"""Distances between readout distributions."""

from __future__ import annotations

import math

import numpy as np


def _diag(x) -> np.ndarray:
    rho = getattr(x, "rho", x)
    arr = np.asarray(rho)
    d = np.real(np.diag(arr)) if arr.ndim == 2 else np.real(arr)
    return np.clip(d, 0.0, None)


def hellinger(rho, sigma) -> float:
    """Hellinger distance between the diagonals of two density matrices.

    Accepts density matrices, :class:`DensityMatrix` objects, or bare
    probability vectors.  Tiny negative entries are clipped to zero.
    """
    p, q = _diag(rho), _diag(sigma)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(math.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)) / math.sqrt(2))


def hellinger_stderr(rho, sigma, diag_stderr) -> float:
    """First-order error propagation of diagonal standard errors into ``hellinger``.

    Entries are treated as independent.
    """
    p, q = _diag(rho), _diag(sigma)
    s = np.asarray(diag_stderr, dtype=float)
    h = hellinger(p, q)
    if h == 0:
        return float(np.sqrt(np.sum(s**2)) / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        grad = np.where(p > 0, (np.sqrt(p) - np.sqrt(q)) / np.sqrt(p), 0.0) / (4 * h)
    return float(np.sqrt(np.sum((grad * s) ** 2)))


def fidelity_from_hellinger(h: float) -> float:
    if not 0 <= h <= 1:
        raise ValueError(f"Hellinger distance {h} outside [0, 1]")
    return (1 - h * h) ** 2
