"""Stochastic mode-transfer matrices for lossy and depolarizing elements.

Every function broadcasts over numpy arrays of draws: scalar draws give a
single ``(k, k)`` matrix, arrays of shape ``(B,)`` give ``(B, k, k)``.  Time
inside an element is rescaled to ``s in [0, 1]`` so the stochastic integrals
have unit-length support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import bs_matrix


class NoiseDomainError(ValueError):
    """Probability outside the perturbative window ``0 <= p < 0.5``."""


def epsilon_from_p(p: float) -> float:
    """Noise strength for an error probability: ``sqrt(-ln(1 - 2p) / 2)``."""
    if not 0 <= p < 0.5:
        raise NoiseDomainError(f"error probability {p} outside [0, 0.5)")
    return math.sqrt(-math.log1p(-2.0 * p) / 2.0)


def p_from_epsilon(eps: float) -> float:
    return -math.expm1(-2.0 * eps * eps) / 2.0


def ics_covariance(theta_eff):
    """Covariance of ``(I_C, I_S)`` for a linear angle ramp ``theta(s) = theta_eff * s``.

    Returns ``(var_c, var_s, cov)``; ``var_c + var_s = 1``.
    """
    t = np.asarray(theta_eff, dtype=float)
    half = 0.5 * np.sinc(2.0 * t / np.pi)  # sin(2t) / (4t) -> 1/2 at t = 0
    var_c = 0.5 + half
    var_s = 0.5 - half
    cov = 0.5 * t * np.sinc(t / np.pi) ** 2  # sin^2(t) / (2t)
    if t.ndim == 0:
        return float(var_c), float(var_s), float(cov)
    return var_c, var_s, cov


def ics_cholesky(theta_eff):
    """Lower-triangular factor ``(l00, l10, l11)`` of the ``(I_C, I_S)`` covariance."""
    var_c, var_s, cov = ics_covariance(theta_eff)
    l00 = np.sqrt(var_c)
    l10 = cov / l00
    l11 = np.sqrt(np.maximum(var_s - l10 * l10, 0.0))
    return l00, l10, l11


def ics_from_normals(theta_eff, z0, z1):
    """Map two independent standard normals onto correlated ``(I_C, I_S)``."""
    l00, l10, l11 = ics_cholesky(theta_eff)
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    return l00 * z0, l10 * z0 + l11 * z1


def draw_ics(theta_eff: float, rng) -> tuple[float, float]:
    """One correlated draw of ``(I_C, I_S)`` from ``rng.standard_normal``."""
    z = np.asarray(rng.standard_normal(2), dtype=float)
    i_c, i_s = ics_from_normals(theta_eff, z[0], z[1])
    return float(i_c), float(i_s)


@dataclass(frozen=True)
class StochasticDraw:
    """Sampled stochastic integrals for one element of one trajectory.

    ``i_c``/``i_s`` belong to the (first) physical mode, ``i_c1``/``i_s1`` to the
    second mode of a beam splitter.  ``w_*`` feed depolarization layers and
    ``w`` a free-propagation loss channel.  Fields may be arrays.
    """

    i_c: float = 0.0
    i_s: float = 0.0
    i_c1: float = 0.0
    i_s1: float = 0.0
    w_x: float = 0.0
    w_y: float = 0.0
    w_z: float = 0.0
    w: float = 0.0


ZERO_DRAW = StochasticDraw()


def _mat2(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in (a, b, c, d)))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def rot_b(x):
    """``exp(i x B)`` on two creation operators: ``[[cos, i sin], [i sin, cos]]``."""
    c, s = np.cos(x), np.sin(x)
    return _mat2(c, 1j * s, 1j * s, c)


def rot_c(x):
    """``exp(-i x C)`` on two creation operators: ``[[cos, -sin], [sin, cos]]``."""
    c, s = np.cos(x), np.sin(x)
    return _mat2(c, -s, s, c)


def _diag(*entries):
    entries = np.broadcast_arrays(*(np.asarray(e, dtype=complex) for e in entries))
    k = len(entries)
    out = np.zeros(entries[0].shape + (k, k), dtype=complex)
    for i, e in enumerate(entries):
        out[..., i, i] = e
    return out


def _embed3(block, i, j):
    """Embed a 2x2 block on modes (i, j) of a 3-mode identity."""
    block = np.asarray(block)
    out = np.zeros(block.shape[:-2] + (3, 3), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = out[..., 2, 2] = 1.0
    for a, p in enumerate((i, j)):
        for b, q in enumerate((i, j)):
            out[..., p, q] = block[..., a, b]
    return out


def noisy_phase_shifter(theta, eps, draw: StochasticDraw):
    """Lossy phase shifter on (physical, virtual) modes; unitary."""
    ph = _diag(np.exp(1j * np.asarray(theta)), 1.0)
    return ph @ rot_b(eps * np.asarray(draw.i_c)) @ rot_c(eps * np.asarray(draw.i_s))


def noisy_phase_shifter_traced(theta, eps, draw: StochasticDraw):
    """Physical-mode block after dropping the virtual mode; shape ``(..., 1, 1)``."""
    amp = np.exp(1j * np.asarray(theta)) * np.cos(eps * np.asarray(draw.i_c)) * np.cos(eps * np.asarray(draw.i_s))
    return np.asarray(amp, dtype=complex)[..., None, None]


def noisy_beam_splitter(theta, phi, eps0, eps1, draw: StochasticDraw):
    """Lossy beam splitter on modes (0, 1) with shared virtual mode 2; unitary.

    The ideal splitter uses the full ``(theta, phi)``; the loss factors are the
    ones derived for ``phi = 0``.
    """
    ideal = np.zeros((3, 3), dtype=complex)
    ideal[:2, :2] = bs_matrix(theta, phi)
    ideal[2, 2] = 1.0
    return (
        ideal
        @ _embed3(rot_b(eps0 * np.asarray(draw.i_c)), 0, 2)
        @ _embed3(rot_c(eps0 * np.asarray(draw.i_s)), 1, 2)
        @ _embed3(rot_b(eps1 * np.asarray(draw.i_c1)), 1, 2)
        @ _embed3(rot_c(eps1 * np.asarray(draw.i_s1)), 0, 2)
    )


def beam_splitter_damping(eps0, eps1, draw: StochasticDraw):
    """Per-mode amplitude factors ``(d0, d1)`` of the traced lossy beam splitter."""
    d0 = np.cos(eps0 * np.asarray(draw.i_c)) * np.cos(eps1 * np.asarray(draw.i_s1))
    d1 = np.cos(eps0 * np.asarray(draw.i_s)) * np.cos(eps1 * np.asarray(draw.i_c1))
    return d0, d1


def noisy_beam_splitter_traced(theta, phi, eps0, eps1, draw: StochasticDraw):
    """Two physical modes after dropping the virtual one; sub-unitary."""
    d0, d1 = beam_splitter_damping(eps0, eps1, draw)
    return bs_matrix(theta, phi) @ _diag(d0, d1)


def depolarization_layer(eps_d, draw: StochasticDraw):
    """Random rotation of a dual-rail pair; both modes physical, unitary."""
    return (
        rot_b(eps_d * np.asarray(draw.w_x))
        @ rot_c(eps_d * np.asarray(draw.w_y))
        @ _diag(1.0, np.exp(1j * eps_d * np.asarray(draw.w_z)))
    )


def loss_channel(eps, draw: StochasticDraw):
    """Guide/detector loss on (physical, virtual) modes; unitary."""
    return rot_b(eps * np.asarray(draw.w))


def loss_channel_traced(eps, draw: StochasticDraw):
    return np.asarray(np.cos(eps * np.asarray(draw.w)), dtype=complex)[..., None, None]
