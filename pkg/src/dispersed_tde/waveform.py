"""Training waveforms and the signal functionals used by bounds and combiners.

All signals are uniformly sampled complex baseband sequences.  Integrals are
evaluated as ``dt``-weighted sums so the discrete results carry the same
units as their continuous-time counterparts.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

#: Maximum truncated tail energy, as a fraction of the total pulse energy.
TAIL_ENERGY_LIMIT = 1e-8
#: Minimum ratio between sample rate and pulse bandwidth.
MIN_OVERSAMPLING = 8.0


class PulseShape(enum.Enum):
    GAUSSIAN_DOUBLET = "gaussian_doublet"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled complex waveform.

    Sample ``k`` sits at time ``t0_s + k * dt_s``.  The sample array is
    stored read-only so instances can be shared freely.
    """

    samples: np.ndarray
    dt_s: float
    t0_s: float = 0.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=complex)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("a sampled signal needs a 1-D array of at least 2 samples")
        if not (self.dt_s > 0 and np.isfinite(self.dt_s)):
            raise ValueError(f"sample interval must be positive, got {self.dt_s}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0_s + self.dt_s * np.arange(len(self))

    @property
    def t_end_s(self) -> float:
        """Time of the last sample."""
        return self.t0_s + self.dt_s * (len(self) - 1)

    @property
    def support_s(self) -> float:
        """Width of the interval covered by the samples (``n * dt``)."""
        return self.dt_s * len(self)

    def scaled(self, factor: complex) -> "SampledSignal":
        return SampledSignal(self.samples * factor, self.dt_s, self.t0_s)


@dataclass(frozen=True)
class PulseSpec:
    """Pulse description.

    ``bandwidth_hz`` is the nominal band B of the branch; for the Gaussian
    doublet the time scale is ``1 / bandwidth_hz``.  ``custom`` carries the
    samples when ``shape`` is ``CUSTOM``.
    """

    shape: PulseShape
    bandwidth_hz: float
    sample_rate_hz: float
    truncation_halfwidth_s: float
    custom: Optional[SampledSignal] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_hz}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not self.truncation_halfwidth_s > 0:
            raise ValueError("truncation half-width must be positive")
        if self.sample_rate_hz < MIN_OVERSAMPLING * self.bandwidth_hz * (1 - 1e-12):
            raise ValueError(
                f"sample rate {self.sample_rate_hz:g} Hz is below "
                f"{MIN_OVERSAMPLING:g} x bandwidth {self.bandwidth_hz:g} Hz"
            )
        if self.shape is PulseShape.CUSTOM and self.custom is None:
            raise ValueError("custom pulse shape needs sampled data")

    @property
    def time_scale_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def dt_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    @classmethod
    def doublet(cls, bandwidth_hz: float, sample_rate_hz: Optional[float] = None,
                halfwidth_factor: float = 4.0) -> "PulseSpec":
        """Gaussian doublet spec with the default 16x oversampling and a
        truncation of ``halfwidth_factor`` time scales on each side."""
        if sample_rate_hz is None:
            sample_rate_hz = 16.0 * bandwidth_hz
        return cls(PulseShape.GAUSSIAN_DOUBLET, bandwidth_hz, sample_rate_hz,
                   halfwidth_factor / bandwidth_hz)


@dataclass(frozen=True)
class TrainingSpec:
    """Linearly modulated pulse train ``sum_l d[l] p(t - l T)``."""

    symbols: Sequence[complex]
    symbol_period_s: float
    pulse: PulseSpec


def doublet_shape(x):
    """Unnormalized doublet ``(1 - 4 pi x^2) exp(-2 pi x^2)`` at ``x = t / zeta``."""
    x = np.asarray(x, dtype=float)
    return (1.0 - 4.0 * np.pi * x**2) * np.exp(-2.0 * np.pi * x**2)


def doublet_tail_fraction(halfwidth: float) -> float:
    """Energy fraction of the analytic doublet outside ``|x| > halfwidth``
    (``halfwidth`` in units of the time scale)."""
    density = lambda x: doublet_shape(x) ** 2
    total = 2.0 * integrate.quad(density, 0.0, np.inf)[0]
    # quad on [a, inf) loses precision far into the tail; the integrand is
    # negligible past 10 time scales.
    tail = 2.0 * integrate.quad(density, halfwidth, max(10.0, 2 * halfwidth),
                                epsabs=0.0, epsrel=1e-10)[0]
    return tail / total


def _doublet_grid(spec: PulseSpec) -> np.ndarray:
    dt = spec.dt_s
    m = int(np.floor(spec.truncation_halfwidth_s / dt + 1e-9))
    if m < 1:
        raise ValueError("truncation half-width is shorter than one sample")
    return dt * np.arange(-m, m + 1)


def gaussian_doublet(spec: PulseSpec) -> SampledSignal:
    """Sample a unit-energy Gaussian doublet on ``[-halfwidth, +halfwidth]``.

    The sample grid is symmetric about ``t = 0`` so the result is real and
    even; amplitude is fixed so the discrete energy is exactly one.
    """
    if spec.shape is not PulseShape.GAUSSIAN_DOUBLET:
        raise ValueError(f"expected a Gaussian doublet spec, got {spec.shape}")
    if doublet_tail_fraction(spec.truncation_halfwidth_s / spec.time_scale_s) >= TAIL_ENERGY_LIMIT:
        raise ValueError(
            f"truncation at {spec.truncation_halfwidth_s:g} s leaves more than "
            f"{TAIL_ENERGY_LIMIT:g} of the energy in the tails"
        )
    t = _doublet_grid(spec)
    s = doublet_shape(t / spec.time_scale_s)
    # force exact symmetry; floating point of +/- t is already symmetric,
    # but averaging guards against grids built from a shifted origin
    s = 0.5 * (s + s[::-1])
    s = s / np.sqrt(np.sum(s**2) * spec.dt_s)
    return SampledSignal(s.astype(complex), spec.dt_s, float(t[0]))


def pulse_signal(spec: PulseSpec) -> SampledSignal:
    """Unit-energy sampled pulse for any supported shape."""
    if spec.shape is PulseShape.GAUSSIAN_DOUBLET:
        return gaussian_doublet(spec)
    custom = spec.custom
    if not np.isclose(custom.dt_s, spec.dt_s, rtol=1e-9, atol=0):
        raise ValueError("custom pulse sample interval does not match the spec sample rate")
    e = energy(custom)
    if e <= 0:
        raise ValueError("custom pulse has zero energy")
    return custom.scaled(1.0 / np.sqrt(e))


def modulated_train(spec: TrainingSpec) -> SampledSignal:
    """Unit-energy pulse train over the symbols of ``spec``.

    The symbol period must be an integer number of samples and no shorter
    than the sampled pulse, so neighbouring pulses never overlap.
    """
    symbols = np.asarray(spec.symbols, dtype=complex)
    if symbols.size == 0:
        raise ValueError("training sequence has no symbols")
    pulse = pulse_signal(spec.pulse)
    dt = pulse.dt_s
    period = spec.symbol_period_s / dt
    step = int(round(period))
    if abs(period - step) > 1e-6:
        raise ValueError("symbol period must be an integer number of samples")
    if step < len(pulse):
        raise ValueError(
            f"symbol period {spec.symbol_period_s:g} s is shorter than the pulse "
            f"support {pulse.support_s:g} s"
        )
    n = step * (symbols.size - 1) + len(pulse)
    out = np.zeros(n, dtype=complex)
    for l, d in enumerate(symbols):
        out[l * step:l * step + len(pulse)] += d * pulse.samples
    train = SampledSignal(out, dt, pulse.t0_s)
    e = energy(train)
    if e <= 0:
        raise ValueError("training sequence has zero energy")
    return train.scaled(1.0 / np.sqrt(e))


def spectrum(s: SampledSignal):
    """Return ``(f, S)``: DFT frequencies in Hz and the dt-scaled spectrum."""
    f = np.fft.fftfreq(len(s), s.dt_s)
    return f, np.fft.fft(s.samples) * s.dt_s


def energy(s: SampledSignal) -> float:
    return float(np.sum(np.abs(s.samples) ** 2) * s.dt_s)


def derivative_energy(s: SampledSignal) -> float:
    """Energy of the first derivative, ``sum (2 pi f)^2 |S(f)|^2 df``.

    Evaluated in the frequency domain, which is exact for band-limited
    samples; finite differences bias the result low at coarse sampling.
    """
    f, S = spectrum(s)
    df = 1.0 / (len(s) * s.dt_s)
    return float(np.sum((2 * np.pi * f) ** 2 * np.abs(S) ** 2) * df)


def cross_term(s: SampledSignal) -> float:
    """``integral Re{s'(t) s*(t)} dt`` by the midpoint rule.

    Uses the sample-to-sample difference against the midpoint average; the
    sum telescopes to ``(|s_end|^2 - |s_start|^2) / 2``, the exact value of
    the continuous integral.
    """
    x = s.samples
    diff = (x[1:] - x[:-1]) / s.dt_s
    mid = 0.5 * (x[1:] + x[:-1])
    return float(np.sum(np.real(diff * np.conj(mid))) * s.dt_s)


def effective_bandwidth(s: SampledSignal) -> float:
    """RMS bandwidth ``beta`` in Hz, ``beta^2 = (1/E) int f^2 |S(f)|^2 df``."""
    f, S = spectrum(s)
    p = np.abs(S) ** 2
    total = np.sum(p)
    if total <= 0:
        raise ValueError("effective bandwidth is undefined for a zero-energy signal")
    return float(np.sqrt(np.sum(f**2 * p) / total))


def delayed(s: SampledSignal, tau_s: float, n_samples: int, pad: int = 8) -> np.ndarray:
    """Samples of ``s(t - tau_s)`` on the grid ``t_k = k * dt``, ``k < n_samples``.

    Whole-sample shifts are exact copies.  The fractional remainder is
    applied as a linear phase on the zero-padded spectrum, which preserves
    energy for band-limited pulses.
    """
    dt = s.dt_s
    start = (tau_s + s.t0_s) / dt
    end = start + len(s) - 1
    if start < -1e-9 or end > n_samples - 1 + 1e-9:
        raise ValueError(
            f"delay {tau_s:.6g} s moves the waveform outside the "
            f"{n_samples}-sample window"
        )
    n0 = int(np.floor(start))
    frac = start - n0
    if abs(frac - round(frac)) < 1e-9:
        n0 += int(round(frac))
        frac = 0.0
    out = np.zeros(n_samples, dtype=complex)
    if frac == 0.0:
        out[n0:n0 + len(s)] = s.samples
        return out
    buf = np.concatenate([np.zeros(pad), s.samples, np.zeros(pad)])
    k = np.fft.fftfreq(buf.size)
    buf = np.fft.ifft(np.fft.fft(buf) * np.exp(-2j * np.pi * k * frac))
    lo = n0 - pad
    a, b = max(lo, 0), min(lo + buf.size, n_samples)
    out[a:b] = buf[a - lo:b - lo]
    return out
