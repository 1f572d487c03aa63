"""Delay-estimation bounds and high-SNR variance predictions.

The CRLB is evaluated without the spectral CFO correction term, which
vanishes for linearly modulated training signals.  All functions return
variances in s^2; take the square root for an RMSE reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundInput:
    """Per-branch ingredients of the bound, as equal-length arrays.

    energy, deriv_energy, cross_term describe the waveform (E, E~, E^R),
    amplitude is the true channel amplitude and noise_psd the branch
    noise spectral density.
    """

    energy: np.ndarray
    deriv_energy: np.ndarray
    cross_term: np.ndarray
    amplitude: np.ndarray
    noise_psd: np.ndarray

    def __post_init__(self):
        arrays = [np.atleast_1d(np.asarray(getattr(self, f), dtype=float))
                  for f in ("energy", "deriv_energy", "cross_term", "amplitude", "noise_psd")]
        n = arrays[0].size
        if n == 0 or any(a.shape != (n,) for a in arrays):
            raise ValueError("bound inputs must be non-empty arrays of equal length")
        for name, a in zip(("energy", "deriv_energy", "cross_term", "amplitude", "noise_psd"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(self.energy <= 0) or np.any(self.deriv_energy < 0) or np.any(self.noise_psd <= 0):
            raise ValueError("need E > 0, E~ >= 0 and sigma^2 > 0 on every branch")
        if np.any(self.deriv_energy - self.cross_term**2 / self.energy < 0):
            raise ValueError("E~ - (E^R)^2 / E must be nonnegative")

    @property
    def K(self) -> int:
        return self.energy.size

    @classmethod
    def from_waveforms(cls, waveforms, amplitude, noise_psd) -> "BoundInput":
        from .waveform import cross_term, derivative_energy, energy
        return cls(np.array([energy(s) for s in waveforms]),
                   np.array([derivative_energy(s) for s in waveforms]),
                   np.array([cross_term(s) for s in waveforms]),
                   np.broadcast_to(np.asarray(amplitude, dtype=float), (len(waveforms),)),
                   np.broadcast_to(np.asarray(noise_psd, dtype=float), (len(waveforms),)))


def branch_variances(b: BoundInput) -> np.ndarray:
    """High-SNR per-branch delay variances ``sigma_i^2 / (E~_i a_i^2)``."""
    with np.errstate(divide="ignore"):
        return b.noise_psd / (b.deriv_energy * b.amplitude**2)


def crlb(b: BoundInput) -> float:
    info = np.sum(b.amplitude**2 / b.noise_psd * (b.deriv_energy - b.cross_term**2 / b.energy))
    if not info > 0:
        raise ValueError("zero Fisher information: no branch carries delay information")
    return float(1.0 / info)


def crlb_constant_envelope(b: BoundInput) -> float:
    """Bound for constant-envelope training, ``(sum E~_i a_i^2 / sigma_i^2)^-1``."""
    # same operation order as crlb so the two agree bit-for-bit when E^R = 0
    info = np.sum(b.amplitude**2 / b.noise_psd * b.deriv_energy)
    if not info > 0:
        raise ValueError("zero Fisher information: no branch carries delay information")
    return float(1.0 / info)


def variance_optimal_combining(b: BoundInput, a_hats) -> float:
    """Conditional variance of the weighted-mean combiner given ``a_hats``."""
    a_hat = np.broadcast_to(np.asarray(a_hats, dtype=float), (b.K,))
    if np.all(a_hat == 0):
        raise ValueError("all amplitude estimates are zero")
    num = np.sum(a_hat**4 * b.deriv_energy / (b.amplitude**2 * b.noise_psd))
    den = np.sum(a_hat**2 * b.deriv_energy / b.noise_psd)
    return float(num / den**2)


def variance_selection(b: BoundInput) -> float:
    return float(np.min(branch_variances(b)))


def variance_equal(b: BoundInput) -> float:
    return float(np.sum(branch_variances(b)) / b.K**2)
