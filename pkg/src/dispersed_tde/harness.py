"""Seeded Monte Carlo driver for RMSE-vs-SNR and RMSE-vs-band-count studies.

Every trial draws its channel and noise from substreams keyed by the master
seed, the trial index and the branch index only.  The same trial therefore
sees the same fading and the same (rescaled) noise at every sweep point,
which makes neighbouring points directly comparable, and results do not
depend on how trials are scheduled across workers.
"""
from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bounds
from .channel import (Band, BandPlan, draw_rayleigh_channel, snr_to_sigma,
                      synthesize_received)
from .combining import (BranchWeightInput, CombinerKind, DegenerateCombination,
                        combine)
from .estimators import Refine, SearchGrid, branch_ml, joint_ml
from .waveform import PulseSpec, derivative_energy, gaussian_doublet

log = logging.getLogger(__name__)

JOINT_ML = "joint_ml"
METHODS = ("optimal", "selection", "equal", JOINT_ML)
SNR_SWEEP, BAND_SWEEP = "snr", "bands"

CSV_COLUMNS = ("sweep_value", "combiner", "rmse_s", "crlb_rmse_s", "trials",
               "failed_trials", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep.

    For an SNR sweep the plan uses ``bandwidths_hz`` as given and ``points``
    are SNRs in dB.  For a band sweep ``points`` are band counts K and the
    plan for K takes the first K entries of ``bandwidths_hz`` repeated
    cyclically, all with noise density ``noise_psd``.
    """

    bandwidths_hz: Tuple[float, ...] = (200e3, 100e3, 400e3)
    sweep_kind: str = SNR_SWEEP
    points: Tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0)
    trials: int = 2000
    seed: int = 0
    combiners: Tuple[str, ...] = METHODS
    tau_step_factor: int = 4
    refine: str = "parabolic"
    noise_psd: float = 0.1
    oversampling: float = 16.0
    cfo_enabled: bool = False
    #: delay prior width in units of the widest pulse support
    delay_span_factor: float = 1.0
    workers: int = 1
    output_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "bandwidths_hz", tuple(float(b) for b in self.bandwidths_hz))
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        object.__setattr__(self, "combiners", tuple(self.combiners))
        if self.trials < 1:
            raise ValueError("need at least one trial per point")
        if not self.points:
            raise ValueError("sweep has no points")
        if not self.bandwidths_hz or min(self.bandwidths_hz) <= 0:
            raise ValueError("bandwidths must be positive")
        if self.sweep_kind not in (SNR_SWEEP, BAND_SWEEP):
            raise ValueError(f"unknown sweep kind {self.sweep_kind!r}")
        if self.sweep_kind == BAND_SWEEP and any(p < 1 or p != int(p) for p in self.points):
            raise ValueError("band sweep points must be positive integers")
        for c in self.combiners:
            if c not in METHODS:
                raise ValueError(f"unknown combiner {c!r}; choose from {', '.join(METHODS)}")
        Refine(self.refine)

    def band_count(self, sweep_value: float) -> int:
        if self.sweep_kind == BAND_SWEEP:
            return int(sweep_value)
        return len(self.bandwidths_hz)

    def bandwidths_for(self, K: int) -> Tuple[float, ...]:
        return tuple(self.bandwidths_hz[i % len(self.bandwidths_hz)] for i in range(K))


@dataclass
class PointResult:
    """Per-trial outcomes at one sweep point (NaN marks a failed trial)."""

    sweep_value: float
    squared_errors: Dict[str, np.ndarray]
    crlb_var: np.ndarray

    def rmse(self, method: str) -> float:
        e = self.squared_errors[method]
        e = e[np.isfinite(e)]
        return math.sqrt(float(np.mean(e))) if e.size else math.nan

    def rmse_ci(self, method: str, z: float = 1.96) -> Tuple[float, float]:
        """Normal-approximation interval on the RMSE (via the MSE)."""
        e = self.squared_errors[method]
        e = e[np.isfinite(e)]
        mse = float(np.mean(e))
        se = float(np.std(e, ddof=1) / np.sqrt(e.size)) if e.size > 1 else 0.0
        return math.sqrt(max(mse - z * se, 0.0)), math.sqrt(mse + z * se)

    def failed(self, method: str) -> int:
        return int(np.sum(~np.isfinite(self.squared_errors[method])))

    @property
    def crlb_rmse(self) -> float:
        return math.sqrt(float(np.mean(self.crlb_var)))


@dataclass(frozen=True)
class RmseRow:
    sweep_value: float
    combiner: str
    rmse_s: float
    crlb_rmse_s: float
    trials: int
    failed_trials: int
    seed: int


@dataclass
class RmseReport:
    config: ExperimentConfig
    rows: List[RmseRow] = field(default_factory=list)
    points: List[PointResult] = field(default_factory=list)

    def rmse(self, sweep_value: float, method: str) -> float:
        for r in self.rows:
            if r.sweep_value == sweep_value and r.combiner == method:
                return r.rmse_s
        raise KeyError((sweep_value, method))

    def point(self, sweep_value: float) -> PointResult:
        for p in self.points:
            if p.sweep_value == sweep_value:
                return p
        raise KeyError(sweep_value)

    def series(self, method: str) -> np.ndarray:
        return np.array([p.rmse(method) for p in self.points])

    def crlb_series(self) -> np.ndarray:
        return np.array([p.crlb_rmse for p in self.points])


class ReportWriteError(OSError):
    """Writing the CSV failed; ``report`` holds the finished results."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@functools.lru_cache(maxsize=64)
def _plan_and_prior(bandwidths: Tuple[float, ...], oversampling: float, cfo: bool,
                    span_factor: float):
    fs = oversampling * max(bandwidths)
    waveforms = [gaussian_doublet(PulseSpec.doublet(b, fs)) for b in bandwidths]
    dt = 1.0 / fs
    support = max(s.support_s for s in waveforms)
    zeta = 1.0 / min(bandwidths)
    span = span_factor * support
    # window = widest support + delay span + a guard of four time scales
    n = int(math.ceil((support + span + 4 * zeta) / dt))
    bands = tuple(Band(s, 1.0, b, cfo) for s, b in zip(waveforms, bandwidths))
    plan = BandPlan(bands, n * dt)
    lo, hi = plan.feasible_delays()
    pad = 0.5 * (hi - lo - span)
    return plan, (lo + pad, hi - pad)


def build_plan(config: ExperimentConfig, sweep_value: float):
    """Band plan with the noise density of ``sweep_value`` and its delay prior."""
    K = config.band_count(sweep_value)
    plan, prior = _plan_and_prior(config.bandwidths_for(K), config.oversampling,
                                  config.cfo_enabled, config.delay_span_factor)
    if config.sweep_kind == SNR_SWEEP:
        psd = snr_to_sigma(sweep_value, plan.total_energy())
    else:
        psd = config.noise_psd
    return plan.with_noise_psd(psd), prior


def trial_seed(config: ExperimentConfig, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.seed, spawn_key=(int(trial_index),))


def run_trial(config: ExperimentConfig, sweep_value: float, trial_index: int,
              return_details: bool = False):
    """Squared delay error of every requested method on one realization.

    All combiners and the joint-ML reference see the same received signal
    and the same branch estimates.  A combiner that cannot produce an
    estimate reports NaN.  Also returns the CRLB at the drawn amplitudes.
    """
    plan, prior = build_plan(config, sweep_value)
    seed = trial_seed(config, trial_index)
    ch = draw_rayleigh_channel(seed, plan, prior)
    recv = synthesize_received(plan, ch, seed)
    refine = Refine(config.refine)
    # the search covers exactly the support of the delay prior
    grids = [SearchGrid.for_plan(plan, i, config.tau_step_factor, refine, tau_range=prior)
             for i in range(plan.K)]
    estimates = [branch_ml(recv[i], band.waveform, g)
                 for i, (band, g) in enumerate(zip(plan.bands, grids))]
    inputs = [BranchWeightInput(e, derivative_energy(b.waveform), b.noise_psd)
              for e, b in zip(estimates, plan.bands)]
    errors = {}
    for method in config.combiners:
        try:
            if method == JOINT_ML:
                tau = joint_ml(recv, plan, grids)
            else:
                tau = combine(CombinerKind(method), inputs)
        except DegenerateCombination:
            log.debug("trial %d at %g: %s failed", trial_index, sweep_value, method)
            errors[method] = math.nan
            continue
        errors[method] = (tau - ch.delay_s) ** 2
    psd = plan.noise_psd
    if np.all(psd > 0):
        b = bounds.BoundInput.from_waveforms([band.waveform for band in plan.bands],
                                             ch.amplitudes, psd)
        crlb_var = bounds.crlb(b)
    else:
        crlb_var = 0.0
    if return_details:
        return errors, crlb_var, {"channel": ch, "estimates": estimates, "plan": plan}
    return errors, crlb_var


def _run_chunk(config, sweep_value, indices):
    return [run_trial(config, sweep_value, i) for i in indices]


def _run_point(config: ExperimentConfig, sweep_value: float, pool=None) -> PointResult:
    indices = list(range(config.trials))
    if pool is None:
        results = _run_chunk(config, sweep_value, indices)
    else:
        n_chunks = max(1, 4 * config.workers)
        chunks = [indices[k::n_chunks] for k in range(n_chunks)]
        results = [None] * config.trials
        futures = [pool.submit(_run_chunk, config, sweep_value, c) for c in chunks if c]
        for c, fut in zip([c for c in chunks if c], futures):
            for i, res in zip(c, fut.result()):
                results[i] = res
    sq = {m: np.array([r[0][m] for r in results]) for m in config.combiners}
    crlb_var = np.array([r[1] for r in results])
    return PointResult(sweep_value, sq, crlb_var)


def run_sweep(config: ExperimentConfig) -> RmseReport:
    """Run every sweep point and write the CSV when ``output_path`` is set."""
    report = RmseReport(config)
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for value in config.points:
            point = _run_point(config, value, pool)
            report.points.append(point)
            for m in config.combiners:
                report.rows.append(RmseRow(value, m, point.rmse(m), point.crlb_rmse,
                                           config.trials, point.failed(m), config.seed))
            log.info("point %g done: %s", value,
                     ", ".join(f"{m}={point.rmse(m):.3e}" for m in config.combiners))
    finally:
        if pool is not None:
            pool.shutdown()
    if config.output_path:
        from .io import write_report_csv
        try:
            write_report_csv(report, config.output_path)
        except OSError as exc:
            raise ReportWriteError(f"could not write {config.output_path}: {exc}", report) from exc
    return report


def run_snr_sweep(config: ExperimentConfig) -> RmseReport:
    if config.sweep_kind != SNR_SWEEP:
        raise ValueError("configuration is not an SNR sweep")
    return run_sweep(config)


def run_band_sweep(config: ExperimentConfig) -> RmseReport:
    if config.sweep_kind != BAND_SWEEP:
        raise ValueError("configuration is not a band sweep")
    return run_sweep(config)


def snr_study_config(**overrides) -> ExperimentConfig:
    """Three bands of 200, 100 and 400 kHz swept over SNR."""
    return replace(ExperimentConfig(), **overrides)


def band_study_config(**overrides) -> ExperimentConfig:
    """One to eight 100 kHz bands at noise density 0.1."""
    base = ExperimentConfig(bandwidths_hz=(100e3,), sweep_kind=BAND_SWEEP,
                            points=tuple(range(1, 9)), noise_psd=0.1)
    return replace(base, **overrides)
