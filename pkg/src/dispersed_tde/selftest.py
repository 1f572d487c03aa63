"""Fast invariant checks, runnable without pytest."""
from __future__ import annotations

import numpy as np

from . import bounds
from .channel import Band, BandPlan, ChannelRealization, synthesize_received
from .combining import BranchWeightInput, CombinerKind, combine
from .estimators import SearchGrid, branch_ml, joint_ml
from .harness import ExperimentConfig, run_sweep
from .waveform import (PulseSpec, cross_term, derivative_energy, effective_bandwidth,
                       energy, gaussian_doublet)


def _parseval():
    for b in (50e3, 100e3, 200e3, 400e3):
        s = gaussian_doublet(PulseSpec.doublet(b))
        lhs = derivative_energy(s) / energy(s)
        rhs = 4 * np.pi**2 * effective_bandwidth(s) ** 2
        if abs(lhs - rhs) > 1e-6 * lhs or abs(energy(s) - 1) > 1e-9:
            return False
    return True


def _doublet_symmetry():
    s = gaussian_doublet(PulseSpec.doublet(100e3)).samples
    return np.max(np.abs(s - s[::-1])) <= 1e-12


def _cross_term():
    s = gaussian_doublet(PulseSpec.doublet(100e3))
    x = s.samples
    ends = 0.5 * (abs(x[-1]) ** 2 - abs(x[0]) ** 2)
    return abs(cross_term(s) - ends) <= 1e-9 * derivative_energy(s)


def _noiseless_exactness():
    fs = 1.6e6
    waves = [gaussian_doublet(PulseSpec.doublet(100e3, fs)) for _ in range(3)]
    plan = BandPlan(tuple(Band(w, 0.0, 100e3) for w in waves), 161 / fs + 2 * waves[0].support_s)
    lo, _ = plan.feasible_delays()
    tau = lo + 37 / fs
    recv = synthesize_received(plan, ChannelRealization.fixed(tau, 3, 1.0, 1.0))
    grid = SearchGrid.for_plan(plan)
    est = [branch_ml(recv[i], w, grid) for i, w in enumerate(waves)]
    tol = 1e-3 / fs
    inputs = [BranchWeightInput(e, derivative_energy(w), 0.0) for e, w in zip(est, waves)]
    taus = [combine(k, inputs) for k in CombinerKind] + [joint_ml(recv, plan, grid)]
    return all(abs(t - tau) <= tol for t in taus)


def _crlb_consistency():
    rng = np.random.default_rng(1)
    for _ in range(200):
        K = int(rng.integers(1, 9))
        b = bounds.BoundInput(np.ones(K), rng.uniform(1e9, 1e12, K), np.zeros(K),
                              rng.uniform(0.05, 2.0, K), rng.uniform(1e-4, 1.0, K))
        v = bounds.variance_optimal_combining(b, b.amplitude)
        if abs(v - bounds.crlb_constant_envelope(b)) > 1e-12 * v:
            return False
        if bounds.crlb(b) != bounds.crlb_constant_envelope(b):
            return False
    return True


def _determinism():
    cfg = ExperimentConfig(points=(20.0,), trials=5, seed=11)
    a, b = run_sweep(cfg), run_sweep(cfg)
    return a.rows == b.rows


CHECKS = {
    "parseval identity": _parseval,
    "doublet symmetry": _doublet_symmetry,
    "cross-term endpoint identity": _cross_term,
    "noiseless exactness": _noiseless_exactness,
    "crlb consistency": _crlb_consistency,
    "sweep determinism": _determinism,
}


def run_selftest(echo=print) -> bool:
    ok = True
    for name, check in CHECKS.items():
        passed = bool(check())
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
