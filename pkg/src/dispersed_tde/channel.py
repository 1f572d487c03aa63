"""Multi-branch received signal model.

Branch ``i`` observes ``a_i exp(j phi_i) exp(j w_i t) s_i(t - tau) + n_i(t)``
on a common window ``[0, T)`` sampled at the shared interval ``dt``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .waveform import SampledSignal, delayed, energy

#: Desk-scale limit on the number of branches in one plan.
MAX_BANDS = 16

# substream purpose tags
FADING, DELAY, CFO, NOISE = 0, 1, 2, 3


def substream(seed, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under a master seed.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`; in the
    latter case ``key`` extends its spawn key, so nested substreams stay
    independent of evaluation order.
    """
    if isinstance(seed, np.random.SeedSequence):
        entropy, base = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, base = int(seed), ()
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=base + tuple(key)))


@dataclass(frozen=True)
class Band:
    waveform: SampledSignal
    noise_psd: float
    bandwidth_hz: float
    cfo_enabled: bool = False

    def __post_init__(self):
        if not (self.noise_psd >= 0 and np.isfinite(self.noise_psd)):
            raise ValueError(f"noise spectral density must be >= 0, got {self.noise_psd}")

    @property
    def cfo_limit_rad_s(self) -> float:
        """Half-width of the CFO prior, 1% of the band in rad/s."""
        return 2 * np.pi * 0.01 * self.bandwidth_hz


@dataclass(frozen=True)
class BandPlan:
    bands: Tuple[Band, ...]
    observation_window_s: float

    def __post_init__(self):
        bands = tuple(self.bands)
        object.__setattr__(self, "bands", bands)
        if not 1 <= len(bands) <= MAX_BANDS:
            raise ValueError(f"need between 1 and {MAX_BANDS} bands, got {len(bands)}")
        dt = bands[0].waveform.dt_s
        for b in bands:
            if not np.isclose(b.waveform.dt_s, dt, rtol=1e-12, atol=0):
                raise ValueError("all branch waveforms must share one sample interval")
        if not self.observation_window_s > 0:
            raise ValueError("observation window must be positive")
        lo, hi = self.feasible_delays()
        if lo > hi:
            raise ValueError("observation window is too short to contain every waveform")

    @property
    def K(self) -> int:
        return len(self.bands)

    @property
    def dt_s(self) -> float:
        return self.bands[0].waveform.dt_s

    @property
    def n_samples(self) -> int:
        return int(round(self.observation_window_s / self.dt_s))

    @property
    def times(self) -> np.ndarray:
        return self.dt_s * np.arange(self.n_samples)

    @property
    def noise_psd(self) -> np.ndarray:
        return np.array([b.noise_psd for b in self.bands])

    def feasible_delays(self) -> Tuple[float, float]:
        """Delays for which every shifted waveform lies inside the window."""
        lo = max(-b.waveform.t0_s for b in self.bands)
        hi = (self.n_samples - 1) * self.dt_s - max(b.waveform.t_end_s for b in self.bands)
        return lo, hi

    def with_noise_psd(self, noise_psd) -> "BandPlan":
        psd = np.broadcast_to(np.asarray(noise_psd, dtype=float), (self.K,))
        bands = tuple(Band(b.waveform, float(p), b.bandwidth_hz, b.cfo_enabled)
                      for b, p in zip(self.bands, psd))
        return BandPlan(bands, self.observation_window_s)

    def total_energy(self) -> float:
        return sum(energy(b.waveform) for b in self.bands)


@dataclass(frozen=True)
class ChannelRealization:
    delay_s: float
    amplitudes: np.ndarray
    phases: np.ndarray
    cfo_rad_s: np.ndarray

    def __post_init__(self):
        for name in ("amplitudes", "phases", "cfo_rad_s"):
            x = np.array(getattr(self, name), dtype=float)
            x.setflags(write=False)
            object.__setattr__(self, name, x)
        if np.any(self.amplitudes < 0):
            raise ValueError("channel amplitudes must be nonnegative")
        if np.any((self.phases < 0) | (self.phases >= 2 * np.pi)):
            raise ValueError("channel phases must lie in [0, 2 pi)")
        if not (self.amplitudes.shape == self.phases.shape == self.cfo_rad_s.shape):
            raise ValueError("per-branch channel arrays differ in length")

    @property
    def alphas(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    @classmethod
    def fixed(cls, delay_s: float, K: int, amplitude=1.0, phase=0.0, cfo=0.0):
        """Deterministic realization with the same parameters on every branch."""
        full = lambda v: np.broadcast_to(np.asarray(v, dtype=float), (K,))
        return cls(delay_s, full(amplitude), np.mod(full(phase), 2 * np.pi), full(cfo))


@dataclass(frozen=True)
class ReceivedSignal:
    branches: Tuple[SampledSignal, ...]

    def __post_init__(self):
        branches = tuple(self.branches)
        object.__setattr__(self, "branches", branches)
        if not branches:
            raise ValueError("received signal has no branches")
        n, dt = len(branches[0]), branches[0].dt_s
        if any(len(r) != n or r.dt_s != dt or r.t0_s != 0.0 for r in branches):
            raise ValueError("all branches must share the sample interval and window")

    def __len__(self):
        return len(self.branches)

    def __getitem__(self, i) -> SampledSignal:
        return self.branches[i]


def draw_rayleigh_channel(rng_seed, plan: BandPlan,
                          delay_prior: Optional[Tuple[float, float]] = None) -> ChannelRealization:
    """Draw one Rayleigh fading realization with unit average power.

    The delay is uniform on ``delay_prior`` (default: every delay that keeps
    all waveforms inside the window).  CFO is uniform within 1% of the band
    on branches that enable it and exactly zero elsewhere.
    """
    feasible = plan.feasible_delays()
    lo, hi = feasible if delay_prior is None else delay_prior
    if not hi > lo:
        raise ValueError(f"empty delay prior [{lo}, {hi}]")
    if lo < feasible[0] - 1e-15 or hi > feasible[1] + 1e-15:
        raise ValueError("delay prior extends beyond the feasible delays of the plan")
    K = plan.K
    amplitudes = np.empty(K)
    phases = np.empty(K)
    cfo = np.zeros(K)
    for i, band in enumerate(plan.bands):
        g = substream(rng_seed, i, FADING)
        # E{a^2} = 2 scale^2 = 1
        amplitudes[i] = g.rayleigh(scale=np.sqrt(0.5))
        phases[i] = g.uniform(0.0, 2 * np.pi)
        if band.cfo_enabled:
            lim = band.cfo_limit_rad_s
            cfo[i] = substream(rng_seed, i, CFO).uniform(-lim, lim)
    delay = substream(rng_seed, DELAY).uniform(lo, hi)
    return ChannelRealization(delay, amplitudes, phases, cfo)


def synthesize_received(plan: BandPlan, ch: ChannelRealization, rng_seed=None) -> ReceivedSignal:
    """Build the K noisy branch observations for one channel realization.

    Each noise component has per-sample variance ``sigma_i^2 / dt`` so that
    ``dt``-weighted correlations reproduce continuous-time statistics.
    Branches with zero noise density are returned noise-free; ``rng_seed``
    may then be ``None``.
    """
    if ch.amplitudes.size != plan.K:
        raise ValueError("channel realization does not match the band plan")
    n, dt = plan.n_samples, plan.dt_s
    t = plan.times
    out = []
    for i, band in enumerate(plan.bands):
        x = delayed(band.waveform, ch.delay_s, n)
        x = x * ch.amplitudes[i] * np.exp(1j * ch.phases[i])
        if ch.cfo_rad_s[i] != 0.0:
            x = x * np.exp(1j * ch.cfo_rad_s[i] * t)
        if band.noise_psd > 0:
            if rng_seed is None:
                raise ValueError("a seed is required for noisy branches")
            g = substream(rng_seed, i, NOISE)
            w = g.standard_normal((2, n))
            x = x + np.sqrt(band.noise_psd / dt) * (w[0] + 1j * w[1])
        out.append(SampledSignal(x, dt, 0.0))
    return ReceivedSignal(tuple(out))


def snr_to_sigma(snr_db: float, total_energy: float) -> float:
    """Noise spectral density for ``SNR = 10 log10(sum E_i / (2 sigma^2))``."""
    if not total_energy > 0:
        raise ValueError("total energy must be positive")
    return total_energy / (2.0 * 10.0 ** (snr_db / 10.0))


def sigma_to_snr(noise_psd: float, total_energy: float) -> float:
    return 10.0 * np.log10(total_energy / (2.0 * noise_psd))
