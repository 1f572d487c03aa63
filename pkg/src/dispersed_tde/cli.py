"""Command-line entry point: ``dispersed-tde <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import bounds, config
from .channel import snr_to_sigma
from .combining import BranchWeightInput, CombinerKind, DegenerateCombination, combine
from .estimators import joint_ml
from .harness import BAND_SWEEP, SNR_SWEEP, ReportWriteError, build_plan, run_sweep, run_trial
from .waveform import derivative_energy, effective_bandwidth


def _common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key (repeatable)")


def _load(args, kind):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for flag, key in (("seed", "seed"), ("trials", "trials"), ("out", "output.path")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = str(v)
    for flag, key in (("points", "sweep.points"), ("workers", "workers"),
                      ("bands", "bands.bandwidth_hz")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = str(v)
    return config.load_config(args.config, overrides, kind)


def _sweep(args, kind):
    cfg = _load(args, kind)
    try:
        report = run_sweep(cfg)
    except ReportWriteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        report = exc.report
        status = 1
    else:
        status = 0
    print("sweep_value,combiner,rmse_s,crlb_rmse_s,failed_trials")
    for r in report.rows:
        print(f"{r.sweep_value:g},{r.combiner},{r.rmse_s:.6e},{r.crlb_rmse_s:.6e},{r.failed_trials}")
    return status


def _estimate(args):
    cfg = _load(args, SNR_SWEEP)
    errors, crlb_var, d = run_trial(cfg, args.snr, args.trial, return_details=True)
    ch, plan = d["channel"], d["plan"]
    print(f"true delay: {ch.delay_s:.9e} s")
    print("branch,bandwidth_hz,a,a_hat,tau_hat_s,phi_hat,omega_hat")
    for i, (e, b) in enumerate(zip(d["estimates"], plan.bands)):
        print(f"{i},{b.bandwidth_hz:g},{ch.amplitudes[i]:.4f},{e.a_hat:.4f},"
              f"{e.tau_hat_s:.9e},{e.phi_hat:.4f},{e.omega_hat:.4g}")
    for m, sq in errors.items():
        err = "failed" if not np.isfinite(sq) else f"{np.sqrt(sq):.3e} s"
        print(f"{m}: |error| = {err}")
    print(f"crlb rmse at drawn amplitudes: {np.sqrt(crlb_var):.3e} s")
    return 0


def _crlb(args):
    cfg = _load(args, SNR_SWEEP)
    plan, _ = build_plan(cfg, args.snr)
    if args.noise_psd is not None:
        plan = plan.with_noise_psd(args.noise_psd)
    amps = np.ones(plan.K) if args.amplitudes is None else np.array(config._floats(args.amplitudes))
    b = bounds.BoundInput.from_waveforms([x.waveform for x in plan.bands], amps, plan.noise_psd)
    print("branch,bandwidth_hz,effective_bandwidth_hz,deriv_energy,noise_psd")
    for i, x in enumerate(plan.bands):
        print(f"{i},{x.bandwidth_hz:g},{effective_bandwidth(x.waveform):.6g},"
              f"{derivative_energy(x.waveform):.6g},{x.noise_psd:.6g}")
    rows = [("crlb", bounds.crlb(b)),
            ("optimal (a_hat = a)", bounds.variance_optimal_combining(b, amps)),
            ("selection", bounds.variance_selection(b)),
            ("equal", bounds.variance_equal(b))]
    for name, v in rows:
        print(f"{name}: variance {v:.6e} s^2, rmse {np.sqrt(v):.6e} s")
    return 0


def _selftest(args):
    from .selftest import run_selftest
    return 0 if run_selftest() else 1


def build_parser():
    p = argparse.ArgumentParser(prog="dispersed-tde",
                                description="Delay estimation over dispersed frequency bands")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep-snr", help="RMSE versus SNR")
    _common(s)
    s.add_argument("--points", help="comma list of SNRs in dB")
    s.add_argument("--bands", help="comma list of bandwidths in Hz")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=lambda a: _sweep(a, SNR_SWEEP))

    s = sub.add_parser("sweep-bands", help="RMSE versus number of bands")
    _common(s)
    s.add_argument("--points", help="comma list of band counts")
    s.add_argument("--bands", help="comma list of bandwidths in Hz (cycled)")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=lambda a: _sweep(a, BAND_SWEEP))

    s = sub.add_parser("estimate", help="one synthetic trial with per-branch estimates")
    _common(s)
    s.add_argument("--snr", type=float, default=20.0)
    s.add_argument("--trial", type=int, default=0)
    s.add_argument("--bands", help="comma list of bandwidths in Hz")
    s.set_defaults(func=_estimate)

    s = sub.add_parser("crlb", help="bound for a band plan")
    _common(s)
    s.add_argument("--snr", type=float, default=20.0)
    s.add_argument("--noise-psd", type=float)
    s.add_argument("--amplitudes", help="comma list of channel amplitudes (default 1)")
    s.add_argument("--bands", help="comma list of bandwidths in Hz")
    s.set_defaults(func=_crlb)

    s = sub.add_parser("selftest", help="run the invariant checks")
    _common(s)
    s.set_defaults(func=_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
