"""Command-line front end.

Settings come from built-in defaults, then the ``--config`` file, then the
command-line flags, each overriding the previous one.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, MODES, ConfigError, RunConfig, load_config
from .experiments import (
    MEASURED_SHOTS,
    bsm_benchmark,
    calibration_sweep,
    default_grid,
    link_rate,
    nuclear_flip_curve,
    run_teleportation,
    teleported_state_tomography,
)
from .nv import PERFECT_INIT, averaged_populations
from .protocol import SIX_LABELS, TeleportRecord, SourceState, derive_bell_correspondence

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("nvteleport")

APPROXIMATIONS = [
    "m_I = +1 nuclear branch: Alice's pulses are taken as fully off-resonant, so Bob's qubit is fully mixed "
    "and the nitrogen reads out as m_I = 0; no line-shape integration",
    "CORPSE electron pulses and electron resets between nitrogen readout rounds are ideal",
]


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


# --- experiment runners: each returns (results, summary lines, {csv name: text}) ---

def _teleport(cfg: RunConfig):
    pops = PERFECT_INIT if cfg.corrected_initialization else averaged_populations(cfg.model)
    shots = MEASURED_SHOTS if cfg.measured_shots else cfg.shots
    res = run_teleportation(cfg.model, SIX_LABELS, shots, cfg.mode, cfg.seed, pops, cfg.workers)
    out = res.to_dict()
    if not cfg.no_feedforward:
        out.pop("no_feedforward_fidelity")
    m = res.mean
    lines = [f"mean fidelity {m.value:.4f} +- {m.std_error:.4f} ({m.method})"]
    lines += [f"  {l:>3}: {e.value:.4f} +- {e.std_error:.4f}" for l, e in res.per_label.items()]
    lines += [f"  outcome {o}: p = {res.outcome_distribution[o]:.4f}, fidelity {e.value:.4f}"
              for o, e in res.per_outcome.items()]
    if cfg.no_feedforward:
        lines.append(f"fixed-pulse reanalysis {res.no_feedforward.value:.4f} +- {res.no_feedforward.std_error:.4f}")
    csvs = {"fidelities.csv": _csv(("label", "fidelity", "std_error", "n_shots"),
                                   ((l, e.value, e.std_error, e.n_shots) for l, e in res.per_label.items()))}
    if cfg.write_records and res.batches:
        rows = (tuple(r.to_row().values()) for b in res.batches for r in b.records())
        csvs["records.csv"] = _csv(TeleportRecord.FIELDS, rows)
    return out, lines, csvs


def _benchmark(cfg: RunConfig):
    res = bsm_benchmark(cfg.model, cfg.mode, cfg.noisy_preparation, cfg.shots, cfg.seed)
    lines = [f"mean ideal-outcome probability {res.mean.value:.4f} +- {res.mean.std_error:.4f} ({cfg.mode})"]
    lines += [f"  {b:>4} -> {res.correspondence[b]}: {e.value:.4f}" for b, e in res.per_bell.items()]
    return res.to_dict(), lines, {}


def _calibrate(cfg: RunConfig):
    model = cfg.model
    out, lines, csvs = {}, [], {}
    for which in ("rotation_axis_phase", "evolution_time"):
        s = calibration_sweep(model, which, default_grid(which, model, cfg.sweep_points), cfg.mode,
                              cfg.shots, cfg.seed)
        out[which] = s.to_dict()
        flag = " (degenerate fit)" if s.degenerate else ""
        lines.append(f"{which}: optimum {s.parameter} = {s.optimum!r}, residual rms {s.residual_rms:.3g}{flag}")
        csvs[f"calibration_{which}.csv"] = _csv(("value", "P00", "P01", "P10", "P11", "fit"), s.rows())
        model = model.replace(**{s.parameter: s.optimum})
    return out, lines, csvs


def _flips(cfg: RunConfig):
    grid = np.linspace(0, cfg.flip_max_attempts, cfg.flip_points).round()
    c = nuclear_flip_curve(cfg.model, grid, cfg.flip_amplitude, cfg.flip_offset)
    out = {"p_flip_attempt": c.p_flip_attempt, "p_flip_cycle": c.p_flip_cycle,
           "amplitude": c.amplitude, "offset": c.offset, "fit_ok": c.fit_ok}
    lines = [f"fitted flip probability per attempt {c.p_flip_attempt:.4g}, per cycle {c.p_flip_cycle:.4g}"
             + ("" if c.fit_ok else " (fit failed)")]
    return out, lines, {"nuclear_flips.csv": _csv(("attempts", "p_minus1"), c.rows())}


def _tomography(cfg: RunConfig):
    pops = PERFECT_INIT if cfg.corrected_initialization else averaged_populations(cfg.model)
    out, lines, rows = {}, [], []
    for label in SIX_LABELS:
        t = teleported_state_tomography(cfg.model, SourceState.canonical(label), pops)
        m = t.state.matrix
        out[label] = {"expectations": list(t.expectations), "rho00": float(m[0, 0].real),
                      "rho01": complex(m[0, 1]), "physical": t.physical}
        lines.append(f"  {label:>3}: <X> {t.expectations[0]:+.4f} <Y> {t.expectations[1]:+.4f} "
                     f"<Z> {t.expectations[2]:+.4f}")
        rows.append((label, *t.expectations, float(m[0, 0].real), float(m[0, 1].real), float(m[0, 1].imag)))
    csvs = {"tomography.csv": _csv(("label", "ex", "ey", "ez", "rho00", "rho01_re", "rho01_im"), rows)}
    return out, ["teleported-state Pauli expectations (outcome-corrected):"] + lines, csvs


def _link_rate(cfg: RunConfig):
    r = link_rate(cfg.model, cfg.mode, cfg.shots, cfg.seed)
    lines = [f"expected herald rate {r.expected_rate:.6g} /s (one per {1 / r.expected_rate:.4g} s)"]
    if r.sampled_rate is not None:
        lines.append(f"sampled herald rate {r.sampled_rate:.6g} /s over {r.n_events} events")
    return r.to_dict(), lines, {}


RUNNERS = {
    "teleport": _teleport,
    "bsm-benchmark": _benchmark,
    "calibrate": _calibrate,
    "nuclear-flips": _flips,
    "tomography": _tomography,
    "link-rate": _link_rate,
}


def build_report(cfg: RunConfig) -> tuple[dict, str, dict[str, str]]:
    results, lines, csvs = RUNNERS[cfg.experiment](cfg)
    report = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "experiment": cfg.experiment,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "shots": cfg.shots,
        "config": {k: v for k, v in cfg.__dict__.items() if k not in ("model", "out_dir")},
        "model": cfg.model.to_dict(),
        "bell_correspondence": derive_bell_correspondence(cfg.model),
        "approximations": APPROXIMATIONS,
        "results": results,
    }
    header = [f"experiment {cfg.experiment}, mode {cfg.mode}, seed {cfg.seed}"]
    corr = ", ".join(f"{k} -> {v}" for k, v in report["bell_correspondence"].items())
    summary = "\n".join(header + lines + [f"Bell correspondence: {corr}"]) + "\n"
    return report, summary, csvs


def run(cfg: RunConfig) -> int:
    try:
        report, summary, csvs = build_report(cfg)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps_report(report), encoding="utf-8")
        (out / "summary.txt").write_text(summary, encoding="utf-8")
        for name, text in csvs.items():
            (out / name).write_text(text, encoding="utf-8")
    except (ValueError, RuntimeError, OSError, ArithmeticError) as exc:
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME
    sys.stdout.write(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvteleport", description="Simulate teleportation between two NV-center nodes.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--shots", type=int, help="Monte Carlo shots (per input state for teleport)")
    p.add_argument("--seed", type=int, help="master seed, 0 <= seed < 2**64")
    p.add_argument("--out-dir", help="directory for summary.txt, report.json and CSV series")
    p.add_argument("--workers", type=int, help="worker processes for Monte Carlo runs")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        overrides = {k: v for k, v in (("experiment", args.experiment), ("mode", args.mode),
                                       ("shots", args.shots), ("seed", args.seed),
                                       ("out_dir", args.out_dir), ("workers", args.workers))
                     if v is not None}
        cfg = cfg.replace(**overrides)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
