"""Uplink physical layer.

Log-distance path loss, Gauss-Markov Rayleigh fading, zero-forcing
combining norms, SINR, and the per-slot bit capacities of the transmit and
local-compute paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cmatrix


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance attenuation: ``g0_db - 10*alpha*log10(d/d0)`` in dB."""

    g0_db: float = -30.0
    alpha: float = 3.0
    d0_m: float = 1.0

    def __post_init__(self):
        if self.d0_m <= 0:
            raise ValueError("reference distance d0_m must be positive")

    def gain(self, distance_m: float) -> float:
        """Linear power gain at the given distance."""
        if distance_m <= 0:
            raise ValueError(f"distance must be positive, got {distance_m}")
        db = self.g0_db - 10.0 * self.alpha * math.log10(distance_m / self.d0_m)
        return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class PhyConstants:
    """Fixed radio and processor constants shared by all users."""

    noise_power_w: float = 1e-9
    bandwidth_hz: float = 1e6
    slot_s: float = 1e-3
    kappa: float = 1e-27          # effective switched capacitance
    cycles_per_bit: float = 500.0
    n_antennas: int = 4

    def __post_init__(self):
        for name in ("noise_power_w", "bandwidth_hz", "slot_s", "kappa", "cycles_per_bit", "n_antennas"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class ChannelState:
    """Complex uplink channel, one column per user.

    Column ``m`` follows a first-order autoregression with coefficient
    ``rho[m]`` whose stationary per-entry variance is ``gains[m]``; the
    path-loss gain is folded into the entries once at initialization and
    into the innovation, never re-applied per step.
    """

    h: np.ndarray       # (N, M) complex128
    rho: np.ndarray     # (M,) in [0, 1]
    gains: np.ndarray   # (M,) positive linear power gains


def _draw_columns(n_antennas: int, gains: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, per-entry variance gains[m]."""
    scale = np.sqrt(gains / 2.0)
    re = rng.standard_normal((n_antennas, gains.size))
    im = rng.standard_normal((n_antennas, gains.size))
    return scale * (re + 1j * im)


def init_channel(constants: PhyConstants, gains, rho, rng: np.random.Generator) -> ChannelState:
    """Draw a channel from the stationary distribution of the recursion."""
    gains = np.asarray(gains, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if gains.ndim != 1 or gains.size < 1:
        raise ValueError("gains must be a nonempty 1-d sequence")
    if rho.shape != gains.shape:
        raise ValueError(f"per-user lists differ in length: {rho.shape} vs {gains.shape}")
    if np.any(gains <= 0):
        raise ValueError("path-loss gains must be strictly positive")
    if np.any((rho < 0) | (rho > 1)):
        raise ValueError("correlation coefficients must lie in [0, 1]")
    h = _draw_columns(constants.n_antennas, gains, rng)
    return ChannelState(h=h, rho=rho.copy(), gains=gains.copy())


def evolve_channel(state: ChannelState, rng: np.random.Generator) -> ChannelState:
    """One autoregressive step; preserves the per-entry variance."""
    innovation = _draw_columns(state.h.shape[0], state.gains, rng)
    h = state.rho * state.h + np.sqrt(1.0 - state.rho * state.rho) * innovation
    return ChannelState(h=h, rho=state.rho, gains=state.gains)


def zf_norms(h) -> np.ndarray:
    """Per-user squared norms of the zero-forcing combining rows.

    The m-th row of the channel pseudo-inverse has squared norm equal to
    the m-th diagonal entry of the inverse Gram matrix, so the
    pseudo-inverse never needs to be formed. Raises SingularMatrixError
    for rank-deficient channels.
    """
    h = cmatrix.as_cmatrix(h)
    if h.shape[0] < h.shape[1]:
        raise cmatrix.DimensionError(
            f"more users than antennas: channel shape {h.shape}"
        )
    gram_inv = cmatrix.invert_hpd(h.conj().T @ h)
    return np.ascontiguousarray(np.diagonal(gram_inv).real)


def sinr(p_offload_w: float, zf_norm: float, noise_power_w: float) -> float:
    """Post-combining SINR: transmit power over noise times the row norm."""
    if zf_norm <= 0:
        raise ValueError(f"combining norm must be positive, got {zf_norm}")
    if noise_power_w <= 0:
        raise ValueError(f"noise power must be positive, got {noise_power_w}")
    if p_offload_w < 0:
        raise ValueError(f"transmit power must be nonnegative, got {p_offload_w}")
    return p_offload_w / (noise_power_w * zf_norm)


def offload_capacity(constants: PhyConstants, gamma: float) -> float:
    """Bits transmittable in one slot at the given SINR."""
    if gamma < 0:
        raise ValueError(f"SINR must be nonnegative, got {gamma}")
    return constants.slot_s * constants.bandwidth_hz * math.log2(1.0 + gamma)


def local_capacity(constants: PhyConstants, p_local_w: float) -> float:
    """Bits computable locally in one slot at the given CPU power.

    The feasible CPU frequency is the cube root of power over the switched
    capacitance, so the capacity grows with the cube root of power.
    """
    if p_local_w < 0:
        raise ValueError(f"compute power must be nonnegative, got {p_local_w}")
    freq = (p_local_w / constants.kappa) ** (1.0 / 3.0)
    return constants.slot_s * freq / constants.cycles_per_bit
