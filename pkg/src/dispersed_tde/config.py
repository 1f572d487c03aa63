"""Plain-text ``key = value`` experiment configuration.

Recognized keys::

    bands.bandwidth_hz    comma list of band bandwidths in Hz
    bands.noise_psd       noise spectral density for band sweeps
    bands.cfo             true/false, enable the CFO search
    sweep.kind            snr | bands
    sweep.points          comma list (SNR in dB, or band counts)
    trials                trials per sweep point
    seed                  master seed
    combiners             comma list of optimal, selection, equal, joint_ml
    grid.tau_step_factor  delay grid points per sample interval
    grid.refine           parabolic | none
    waveform.oversampling sample rate / widest bandwidth
    delay.span_factor     delay prior width in widest-pulse supports
    workers               worker processes
    output.path           CSV destination

Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Dict, Iterable, Mapping, Optional

from .harness import BAND_SWEEP, ExperimentConfig, snr_study_config, band_study_config


def _floats(v):
    return tuple(float(x) for x in v.split(",") if x.strip())


def _bool(v):
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


KEYS = {
    "bands.bandwidth_hz": ("bandwidths_hz", _floats),
    "bands.noise_psd": ("noise_psd", float),
    "bands.cfo": ("cfo_enabled", _bool),
    "sweep.kind": ("sweep_kind", str.strip),
    "sweep.points": ("points", _floats),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "combiners": ("combiners", lambda v: tuple(x.strip() for x in v.split(",") if x.strip())),
    "grid.tau_step_factor": ("tau_step_factor", int),
    "grid.refine": ("refine", str.strip),
    "waveform.oversampling": ("oversampling", float),
    "delay.span_factor": ("delay_span_factor", float),
    "workers": ("workers", int),
    "output.path": ("output_path", str.strip),
}


def parse_pairs(lines: Iterable[str]) -> Dict[str, str]:
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {no}: expected key = value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def apply(base: ExperimentConfig, pairs: Mapping[str, str]) -> ExperimentConfig:
    """Return ``base`` with the ``key = value`` overrides applied."""
    changes = {}
    for k, v in pairs.items():
        if k not in KEYS:
            raise KeyError(f"unknown configuration key {k!r}")
        field, conv = KEYS[k]
        changes[field] = conv(v)
    return replace(base, **changes)


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, str]] = None,
                kind: Optional[str] = None) -> ExperimentConfig:
    """Read a config file on top of the defaults for ``kind``.

    Without an explicit ``kind`` the file's ``sweep.kind`` (default ``snr``)
    chooses the base: the three-band SNR sweep or the 100 kHz band sweep.
    """
    pairs = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            pairs.update(parse_pairs(fh))
    pairs.update(overrides or {})
    kind = kind or pairs.get("sweep.kind", "snr").strip()
    base = band_study_config() if kind == BAND_SWEEP else snr_study_config()
    pairs["sweep.kind"] = kind
    return apply(base, pairs)
