"""Per-branch maximum-likelihood estimation and the joint-ML reference.

The phase is eliminated analytically: for fixed delay and CFO the
likelihood is maximized by ``phi = arg C``, where ``C`` is the complex
correlation of the observation with the delayed template.  What remains is
a grid search over ``(tau, omega)`` on a delay grid finer than the sample
interval, followed by an optional parabolic refinement of the peak.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .channel import BandPlan, ReceivedSignal
from .waveform import SampledSignal, delayed, energy


class Refine(enum.Enum):
    NONE = "none"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class SearchGrid:
    """Discretization of the delay/CFO search.

    ``tau_step_s`` must divide the signal sample interval an integer number
    of times.  A zero ``omega_step`` means the CFO is fixed at
    ``omega_range[0]`` (the range must then be degenerate).
    """

    tau_step_s: float
    tau_range: Tuple[float, float]
    omega_step: float = 0.0
    omega_range: Tuple[float, float] = (0.0, 0.0)
    refine: Refine = Refine.PARABOLIC

    def __post_init__(self):
        lo, hi = self.tau_range
        if not self.tau_step_s > 0:
            raise ValueError("delay step must be positive")
        if hi < lo:
            raise ValueError("empty delay search range")
        wlo, whi = self.omega_range
        if whi < wlo or self.omega_step < 0:
            raise ValueError("invalid CFO search range")
        if self.omega_step == 0 and whi != wlo:
            raise ValueError("a CFO range needs a positive step")

    def omegas(self) -> np.ndarray:
        lo, hi = self.omega_range
        if self.omega_step == 0:
            return np.array([lo], dtype=float)
        n = int(np.floor((hi - lo) / self.omega_step + 1e-9)) + 1
        return lo + self.omega_step * np.arange(n)

    def upsampling(self, dt_s: float) -> int:
        up = dt_s / self.tau_step_s
        n = int(round(up))
        if n < 1 or abs(up - n) > 1e-6:
            raise ValueError(
                f"delay step {self.tau_step_s:g} s is not an integer fraction of dt {dt_s:g} s"
            )
        return n

    @classmethod
    def for_plan(cls, plan: BandPlan, branch: int = None, tau_step_factor: int = 4,
                 refine: Refine = Refine.PARABOLIC, omega_points: int = 21,
                 tau_range: Tuple[float, float] = None) -> "SearchGrid":
        """Default grid: step ``dt / tau_step_factor`` over ``tau_range``
        (all feasible delays when omitted), with a CFO search only on
        branches that enable it."""
        omega_step, omega_range = 0.0, (0.0, 0.0)
        if branch is not None and plan.bands[branch].cfo_enabled:
            lim = plan.bands[branch].cfo_limit_rad_s
            omega_range = (-lim, lim)
            omega_step = 2 * lim / (omega_points - 1)
        return cls(plan.dt_s / tau_step_factor, tau_range or plan.feasible_delays(),
                   omega_step, omega_range, refine)


@dataclass(frozen=True)
class BranchEstimate:
    tau_hat_s: float
    a_hat: float
    phi_hat: float
    omega_hat: float
    peak_metric: float


def correlate(r: SampledSignal, s: SampledSignal, tau: float, omega: float = 0.0) -> complex:
    """``sum_k r[k] exp(-j omega t_k) conj(s(t_k - tau)) dt``.

    The template is delayed with a fractional-delay shift; raises
    ``ValueError`` when the delayed template leaves the observation window.
    """
    if not np.isclose(r.dt_s, s.dt_s, rtol=1e-12, atol=0):
        raise ValueError("observation and template sample intervals differ")
    template = delayed(s, tau - r.t0_s, len(r))
    x = r.samples
    if omega != 0.0:
        x = x * np.exp(-1j * omega * r.times)
    return complex(np.sum(x * np.conj(template)) * r.dt_s)


def _template_spectrum(s: SampledSignal, n: int) -> np.ndarray:
    # DFT of s(t_k) on a circular n-sample grid with time 0 at index 0
    if len(s) > n:
        raise ValueError("template is longer than the observation window")
    start = s.t0_s / s.dt_s
    n0 = int(np.floor(start + 1e-9))
    frac = start - n0
    if abs(frac) < 1e-9:
        frac = 0.0
    buf = np.zeros(n, dtype=complex)
    buf[(n0 + np.arange(len(s))) % n] = s.samples
    U = np.fft.fft(buf)
    if frac:
        U = U * np.exp(-2j * np.pi * np.fft.fftfreq(n) * frac)
    return U


def _cross_spectra(r: SampledSignal, s: SampledSignal, omegas) -> np.ndarray:
    """Rows of ``FFT(r exp(-j w t)) * conj(U)`` for each CFO candidate."""
    if not np.isclose(r.dt_s, s.dt_s, rtol=1e-12, atol=0):
        raise ValueError("observation and template sample intervals differ")
    n = len(r)
    Uc = np.conj(_template_spectrum(s, n))
    t = r.t0_s + r.dt_s * np.arange(n)
    rows = []
    for w in omegas:
        x = r.samples if w == 0.0 else r.samples * np.exp(-1j * w * t)
        rows.append(np.fft.fft(x) * Uc)
    return np.array(rows)


def _profile(X: np.ndarray, dt: float, up: int) -> np.ndarray:
    """Correlation at ``tau_m = m dt / up`` by zero-padding the cross spectrum."""
    n = X.shape[-1]
    pos = (n + 1) // 2
    Xp = np.zeros(X.shape[:-1] + (up * n,), dtype=complex)
    Xp[..., :pos] = X[..., :pos]
    Xp[..., up * n - (n - pos):] = X[..., pos:]
    return np.fft.ifft(Xp, axis=-1) * (dt * up)


def _eval_at(X: np.ndarray, dt: float, tau: float) -> complex:
    n = X.size
    f = np.fft.fftfreq(n, dt)
    return complex(np.sum(X * np.exp(2j * np.pi * f * tau)) * dt / n)


def _index_window(tau_range, step, total):
    lo = int(np.ceil(tau_range[0] / step - 1e-9))
    hi = int(np.floor(tau_range[1] / step + 1e-9))
    lo, hi = max(lo, 0), min(hi, total - 1)
    if hi < lo:
        raise ValueError("delay search range contains no grid points")
    return lo, hi


def _peak(metric: np.ndarray, lo: int, hi: int, refine: Refine) -> float:
    """Fractional grid index of the maximum of ``metric`` over ``[lo, hi]``."""
    m = lo + int(np.argmax(metric[lo:hi + 1]))  # first maximum: smallest delay
    if refine is Refine.NONE or m == lo or m == hi:
        return float(m)
    y0, y1, y2 = metric[m - 1], metric[m], metric[m + 1]
    den = y0 - 2 * y1 + y2
    if den >= 0:
        return float(m)
    return m + float(np.clip(0.5 * (y0 - y2) / den, -0.5, 0.5))


def branch_ml(r: SampledSignal, s: SampledSignal, grid: SearchGrid) -> BranchEstimate:
    """ML delay, amplitude, phase and CFO for one branch.

    ``(tau, omega)`` maximize ``|C|`` over the grid, ``phi_hat = arg C`` and
    ``a_hat = Re{C exp(-j phi_hat)} / E`` at the optimum.
    """
    dt = r.dt_s
    up = grid.upsampling(dt)
    omegas = grid.omegas()
    X = _cross_spectra(r, s, omegas)
    power = np.abs(_profile(X, dt, up)) ** 2
    lo, hi = _index_window(grid.tau_range, grid.tau_step_s, power.shape[-1])
    # best CFO row at the best delay; ties go to the first (lowest) omega
    best = np.argmax(power[:, lo:hi + 1], axis=0)
    row = int(best[int(np.argmax(power[best, lo + np.arange(hi - lo + 1)]))])
    m = _peak(power[row], lo, hi, grid.refine)
    tau_hat = m * grid.tau_step_s
    c = _eval_at(X[row], dt, tau_hat)
    phi_hat = float(np.mod(np.angle(c), 2 * np.pi))
    a_hat = float(np.real(c * np.exp(-1j * phi_hat))) / energy(s)
    return BranchEstimate(tau_hat, a_hat, phi_hat, float(omegas[row]), abs(c))


def joint_ml(recv: ReceivedSignal, plan: BandPlan,
             grid: Union[SearchGrid, Sequence[SearchGrid]]) -> float:
    """Common-delay ML estimate over all branches.

    For each candidate delay the amplitude, phase and CFO of every branch
    are maximized out, leaving the 1-D objective
    ``sum_i max_w |C_i(tau, w)|^2 / (2 sigma_i^2 E_i)``.
    Noise-free branches, when present, dominate in the limit and are
    weighted equally among themselves.
    """
    if len(recv) == 0 or plan.K == 0:
        raise ValueError("joint estimation needs at least one branch")
    if len(recv) != plan.K:
        raise ValueError("received signal does not match the band plan")
    grids = [grid] * plan.K if isinstance(grid, SearchGrid) else list(grid)
    if len(grids) != plan.K:
        raise ValueError("need one search grid per branch")
    step = grids[0].tau_step_s
    if any(not np.isclose(g.tau_step_s, step, rtol=1e-12, atol=0) for g in grids):
        raise ValueError("branch grids must share the delay step")
    psd = plan.noise_psd
    noiseless = psd == 0
    dt = plan.dt_s
    up = grids[0].upsampling(dt)
    total = None
    for i, (band, g) in enumerate(zip(plan.bands, grids)):
        if noiseless.any() and not noiseless[i]:
            continue
        X = _cross_spectra(recv[i], band.waveform, g.omegas())
        p = np.max(np.abs(_profile(X, dt, up)) ** 2, axis=0)
        w = 1.0 if noiseless.any() else 1.0 / (2.0 * psd[i])
        term = w * p / energy(band.waveform)
        total = term if total is None else total + term
    lo = max(g.tau_range[0] for g in grids)
    hi = min(g.tau_range[1] for g in grids)
    lo, hi = _index_window((lo, hi), step, total.size)
    return _peak(total, lo, hi, grids[0].refine) * step
