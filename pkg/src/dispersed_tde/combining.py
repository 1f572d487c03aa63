"""Second-step fusion of per-branch delay estimates."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import BranchEstimate


class CombinerKind(enum.Enum):
    OPTIMAL = "optimal"
    SELECTION = "selection"
    EQUAL = "equal"


class DegenerateCombination(ValueError):
    """All combining weights vanished, so the weighted mean is undefined."""


@dataclass(frozen=True)
class BranchWeightInput:
    estimate: BranchEstimate
    deriv_energy: float
    noise_psd: float

    def __post_init__(self):
        if not self.deriv_energy > 0:
            raise ValueError("derivative energy must be positive")
        if not self.noise_psd >= 0:
            raise ValueError("noise spectral density must be nonnegative")


def kappa(estimate: BranchEstimate, deriv_energy: float, noise_psd: float) -> float:
    """Combining weight ``a_hat^2 * E~ / sigma^2``: estimated SNR times the
    derivative energy of the branch waveform."""
    if not (deriv_energy > 0 and noise_psd > 0):
        raise ValueError("kappa needs positive derivative energy and noise density")
    return estimate.a_hat**2 * deriv_energy / noise_psd


def weights(inputs: Sequence[BranchWeightInput]) -> np.ndarray:
    """Per-branch kappa.

    Noise-free branches take the ``sigma -> 0`` limit: they alone carry
    weight, proportional to ``a_hat^2 * E~``.
    """
    psd = np.array([b.noise_psd for b in inputs])
    if np.any(psd == 0):
        return np.array([b.estimate.a_hat**2 * b.deriv_energy if p == 0 else 0.0
                         for b, p in zip(inputs, psd)])
    return np.array([kappa(b.estimate, b.deriv_energy, b.noise_psd) for b in inputs])


def combine(kind: CombinerKind, inputs: Sequence[BranchWeightInput]) -> float:
    """Final delay estimate from per-branch estimates.

    Raises
    ------
    DegenerateCombination
        For optimal combining when every weight is zero.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("no branch estimates to combine")
    kind = CombinerKind(kind)
    taus = np.array([b.estimate.tau_hat_s for b in inputs])
    if len(inputs) == 1:
        if kind is CombinerKind.OPTIMAL and weights(inputs)[0] == 0:
            raise DegenerateCombination("the only branch has zero weight")
        return float(taus[0])
    if kind is CombinerKind.EQUAL:
        tau = float(np.mean(taus))
    else:
        k = weights(inputs)
        if kind is CombinerKind.SELECTION:
            return float(taus[int(np.argmax(k))])
        total = np.sum(k)
        if not total > 0:
            raise DegenerateCombination("all combining weights are zero")
        tau = float(np.sum(k * taus) / total)
    # rounding can step just outside the hull when all estimates agree
    return min(max(tau, float(taus.min())), float(taus.max()))
