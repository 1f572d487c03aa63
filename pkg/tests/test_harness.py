import math

import numpy as np
import pytest

from dispersed_tde import harness
from dispersed_tde.cli import main
from dispersed_tde.combining import DegenerateCombination
from dispersed_tde.config import load_config, parse_pairs
from dispersed_tde.harness import (CSV_COLUMNS, METHODS, ExperimentConfig, ReportWriteError,
                                   build_plan, snr_study_config, band_study_config, run_band_sweep,
                                   run_snr_sweep, run_sweep, run_trial)
from dispersed_tde.io import read_report_csv


def small(**kw):
    kw.setdefault("trials", 6)
    return snr_study_config(points=(10.0, 30.0), **kw)


def test_snr_sweep_uses_three_band_plan():
    plan, prior = build_plan(snr_study_config(), 20.0)
    assert [b.bandwidth_hz for b in plan.bands] == [200e3, 100e3, 400e3]
    lo, hi = plan.feasible_delays()
    assert lo <= prior[0] < prior[1] <= hi
    assert np.all(plan.noise_psd == pytest.approx(0.015, rel=1e-12))


def test_band_sweep_config():
    cfg = band_study_config()
    assert cfg.points == tuple(float(k) for k in range(1, 9))
    plan, _ = build_plan(cfg, 5)
    assert plan.K == 5 and all(b.bandwidth_hz == 100e3 for b in plan.bands)
    assert np.all(plan.noise_psd == 0.1)


def test_noiseless_trial_is_exact():
    cfg = small()
    dt = build_plan(cfg, math.inf)[0].dt_s
    for k in range(5):
        errors, crlb_var = run_trial(cfg, math.inf, k)
        assert set(errors) == set(METHODS)
        for m, e in errors.items():
            assert e <= (1e-3 * dt) ** 2, m
        assert crlb_var == 0.0


def test_noiseless_band_sweep_exact():
    cfg = band_study_config(points=(1, 3), trials=4, noise_psd=0.0)
    report = run_band_sweep(cfg)
    dt = build_plan(cfg, 3)[0].dt_s
    assert all(r.rmse_s <= 1e-3 * dt for r in report.rows)


def test_trial_deterministic():
    cfg = small()
    assert run_trial(cfg, 15.0, 3) == run_trial(cfg, 15.0, 3)
    assert run_trial(cfg, 15.0, 3) != run_trial(cfg, 15.0, 4)


def test_single_band_combiners_agree():
    cfg = band_study_config(points=(1,), trials=10)
    for k in range(10):
        errors, _ = run_trial(cfg, 1, k)
        assert errors["optimal"] == errors["selection"] == errors["equal"]


def test_failed_trials_counted(monkeypatch):
    real = harness.combine

    def flaky(kind, inputs):
        if kind.value == "optimal" and inputs[0].estimate.a_hat < 0.7:
            raise DegenerateCombination("forced")
        return real(kind, inputs)

    monkeypatch.setattr(harness, "combine", flaky)
    report = run_snr_sweep(small(trials=20))
    failed = {r.combiner: r.failed_trials for r in report.rows if r.sweep_value == 30.0}
    assert failed["optimal"] > 0
    assert failed["selection"] == failed["equal"] == failed["joint_ml"] == 0
    p = report.point(30.0)
    assert np.sum(np.isnan(p.squared_errors["optimal"])) == failed["optimal"]
    assert math.isfinite(report.rmse(30.0, "optimal"))


def test_csv_schema_and_round_trip(tmp_path):
    out = tmp_path / "r.csv"
    report = run_sweep(small(output_path=str(out)))
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 2 * len(METHODS)
    assert lines[1].startswith("10,optimal,")
    back = read_report_csv(out)
    for a, b in zip(back, report.rows):
        assert a.rmse_s == b.rmse_s and a.combiner == b.combiner and a.seed == b.seed


def test_csv_identical_across_worker_counts(tmp_path):
    paths = []
    for w in (1, 2):
        p = tmp_path / f"w{w}.csv"
        run_sweep(small(trials=9, workers=w, output_path=str(p)))
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_write_failure_keeps_report(tmp_path):
    bad = tmp_path / "missing" / "deeper" / "r.csv"
    with pytest.raises(ReportWriteError) as info:
        run_sweep(small(trials=2, output_path=str(bad)))
    assert len(info.value.report.rows) == 2 * len(METHODS)


def test_failure_rate_small_at_moderate_snr():
    report = run_snr_sweep(snr_study_config(points=(10.0,), trials=200))
    for r in report.rows:
        assert r.failed_trials / r.trials < 0.01


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(points=())
    with pytest.raises(ValueError):
        ExperimentConfig(combiners=("median",))
    with pytest.raises(ValueError):
        ExperimentConfig(sweep_kind="bands", points=(1.5,))
    with pytest.raises(ValueError):
        run_band_sweep(snr_study_config())


def test_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# study\nsweep.kind = bands\nsweep.points = 1, 2\ntrials = 7\n"
                 "combiners = optimal,equal\nbands.noise_psd = 0.2\n", encoding="utf-8")
    cfg = load_config(str(p), {"seed": "5"})
    assert cfg.sweep_kind == "bands" and cfg.points == (1.0, 2.0)
    assert cfg.trials == 7 and cfg.seed == 5 and cfg.noise_psd == 0.2
    assert cfg.combiners == ("optimal", "equal")
    assert cfg.bandwidths_hz == (100e3,)
    with pytest.raises(KeyError):
        load_config(None, {"trails": "3"})
    with pytest.raises(ValueError):
        parse_pairs(["no equals sign"])


def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sweep-snr", "--trials", "3", "--points", "20", "--seed", "2", "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "20,optimal," in capsys.readouterr().out


def test_cli_band_sweep(capsys):
    assert main(["sweep-bands", "--trials", "2", "--points", "1,2",
                 "--set", "combiners=selection"]) == 0
    out = capsys.readouterr().out
    assert out.count("selection") == 2


def test_cli_estimate_and_crlb(capsys):
    assert main(["estimate", "--snr", "30", "--trial", "1"]) == 0
    out = capsys.readouterr().out
    assert "true delay" in out and "joint_ml" in out
    assert main(["crlb", "--snr", "20", "--amplitudes", "1,1,1"]) == 0
    assert "crlb: variance" in capsys.readouterr().out


def test_cli_errors(capsys):
    assert main(["sweep-snr", "--set", "nonsense=1"]) == 2
    assert main(["sweep-snr", "--trials", "0"]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_selftest(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out
