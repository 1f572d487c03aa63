"""CSV persistence for waveforms, received branches and RMSE reports."""
from __future__ import annotations

import csv
import os
from typing import List

import numpy as np

from .waveform import SampledSignal

SIGNAL_COLUMNS = ("time_s", "re", "im")


def _num(x) -> str:
    # repr round-trips exactly and never uses thousands separators
    return repr(float(x))


def _sweep_value(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def write_signal_csv(s: SampledSignal, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIGNAL_COLUMNS)
        for t, z in zip(s.times, s.samples):
            w.writerow((_num(t), _num(z.real), _num(z.imag)))


def read_signal_csv(path) -> SampledSignal:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SIGNAL_COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(SIGNAL_COLUMNS)}")
    data = np.array(rows[1:], dtype=float)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    t = data[:, 0]
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not np.allclose(np.diff(t), dt, rtol=1e-6, atol=0):
        raise ValueError(f"{path}: samples are not uniformly spaced")
    return SampledSignal(data[:, 1] + 1j * data[:, 2], dt, t[0])


def write_received_csv(recv, directory, prefix: str = "branch") -> List[str]:
    """One signal CSV per branch, named ``<prefix><i>.csv``."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, r in enumerate(recv.branches):
        p = os.path.join(directory, f"{prefix}{i}.csv")
        write_signal_csv(r, p)
        paths.append(p)
    return paths


def write_report_csv(report, path) -> None:
    from .harness import CSV_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            w.writerow((_sweep_value(r.sweep_value), r.combiner, _num(r.rmse_s),
                        _num(r.crlb_rmse_s), r.trials, r.failed_trials, r.seed))


def read_report_csv(path):
    """Rows of a report CSV as :class:`~dispersed_tde.harness.RmseRow`."""
    from .harness import CSV_COLUMNS, RmseRow
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [RmseRow(float(v), c, float(r), float(b), int(n), int(f), int(s))
                for v, c, r, b, n, f, s in reader]
