"""Command-line front end: INI config in, CSV table out.

    dielmotion kk-check --config kk.ini --out kk.csv
    dielmotion casimir --config mirror.ini --out pressure.csv --tolerance 2e-3

Exit status is 0 on success, 2 for invalid input and 3 when a numerical
method fails to converge.  Output is written to a temporary file in the
target directory and renamed into place, so a failed run leaves nothing.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InfeasibleError, InstabilityError, NonConvergenceError, ValidationError
from .output import write_atomic

log = logging.getLogger("dielmotion")

KINDS = ("kk-check", "pulse-pressure", "casimir", "packet")
EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3

# short tag naming the numerical method behind each table
METHODS = {
    "kk-check": "kk:subtracted-pv+simpson",
    "pulse-pressure": "fdtd:leapfrog+tfsf;force:stress-difference",
    "casimir": "lifshitz:imag-axis;quad:gauss-laguerre*gauss-legendre",
    "packet": "packet:gaussian-free;envelope:trapezoid",
}


class Table:
    """Column names, rows and extra ``#`` metadata for one CSV artifact."""

    def __init__(self, columns, rows, meta=None):
        self.columns = list(columns)
        self.rows = np.asarray(rows, dtype=float).reshape(-1, len(self.columns))
        self.meta = dict(meta or {})


# ---------------------------------------------------------------------------
# configuration


def _read_config(path: Path) -> configparser.ConfigParser:
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return cp


def _section(cp: configparser.ConfigParser, name: str):
    if not cp.has_section(name):
        raise ValidationError(f"config needs a [{name}] section")
    return cp[name]


def _get(sec, key, conv=float, default=None):
    if key not in sec:
        if default is None:
            raise ValidationError(f"[{sec.name}] missing '{key}'")
        return default
    try:
        return conv(sec[key])
    except ValueError as exc:
        raise ValidationError(f"[{sec.name}] {key}: {exc}") from exc


def _floats(text: str):
    return [float(v) for v in text.replace(",", " ").split()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _model(cp, config_path: Path):
    from .susceptibility import load_model

    rel = _get(_section(cp, "run"), "model", str)
    path = Path(rel)
    if not path.is_absolute():
        path = config_path.parent / path
    return load_model(path), path


def config_digest(cp: configparser.ConfigParser, extra_files=(), flags=None) -> str:
    """sha256 over the canonical config, referenced files and CLI overrides."""
    h = hashlib.sha256()
    for name in sorted(cp.sections()):
        h.update(f"[{name}]\n".encode())
        for key in sorted(cp[name]):
            h.update(f"{key}={cp[name][key].strip()}\n".encode())
    for path in extra_files:
        h.update(Path(path).read_bytes())
    for key, val in sorted((flags or {}).items()):
        h.update(f"--{key}={val}\n".encode())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# commands


def run_kk_check(cp, config_path, tol):
    from .susceptibility import eval_chi, kk_real_from_imag

    model, mpath = _model(cp, config_path)
    sec = _section(cp, "kk")
    w_max = _get(sec, "omega_max")
    points = _get(sec, "points", int, 4096)
    e_max = _get(sec, "eval_max")
    n_eval = _get(sec, "eval_points", int, 301)
    if not (0 < e_max < w_max) or points < 5 or n_eval < 2:
        raise ValidationError("need 0 < eval_max < omega_max, points >= 5, eval_points >= 2")
    grid = np.linspace(0.0, w_max, points)
    om = np.linspace(0.0, e_max, n_eval)
    exact = np.real(eval_chi(model, om))
    kk = kk_real_from_imag(grid, np.imag(eval_chi(model, grid)), om, tol=tol)
    scale = np.max(np.abs(exact))
    rel = np.abs(kk - exact) / scale
    meta = {"max_rel_error": f"{rel.max():.6e}", "normalization": "max|Re chi| on output range"}
    return Table(["omega", "re_chi_analytic", "re_chi_kk", "rel_error"], np.column_stack([om, exact, kk, rel]), meta), [mpath]


def run_casimir(cp, config_path, tol):
    from .casimir import QuadratureSpec, casimir_pressure_halfspaces, perfect_mirror_pressure

    model, mpath = _model(cp, config_path)
    sec = _section(cp, "casimir")
    seps = _get(sec, "separations", _floats)
    if not seps or min(seps) <= 0:
        raise ValidationError("separations must be positive")
    quad = QuadratureSpec(_get(sec, "n_kappa", int, 48), _get(sec, "n_theta", int, 32))
    rows = []
    for d in seps:
        res = casimir_pressure_halfspaces(model, model, d, quad, tol=tol)
        rows.append([d, res.pressure, res.error, perfect_mirror_pressure(d)])
    return Table(["d", "pressure", "error", "mirror_pressure"], rows), [mpath]


def run_pulse_pressure(cp, config_path, tol):
    from .reservoir_dynamics import Grid1D, PulseExperimentConfig, PulseSource, run_pulse_experiment

    model, mpath = _model(cp, config_path)
    sec = _section(cp, "pulse")
    grid = Grid1D(_get(sec, "x_min"), _get(sec, "x_max"), _get(sec, "cells", int), _get(sec, "courant", float, 0.5))
    src = PulseSource(
        _get(sec, "carrier"), _get(sec, "width"), _get(sec, "amplitude", float, 1.0), _get(sec, "launch")
    )
    kw = {}
    if "duration" in sec:
        kw["duration"] = _get(sec, "duration")
    if tol is not None:
        kw["separation_tol"] = tol
    cfg = PulseExperimentConfig(
        model,
        _get(sec, "slab_left"),
        _get(sec, "thickness"),
        grid,
        src,
        reservoir_nodes=_get(sec, "reservoir_nodes", int, 512),
        lossless=_get(sec, "lossless", _bool, False),
        pml_cells=_get(sec, "pml_cells", int, 32),
        **kw,
    )
    res = run_pulse_experiment(cfg)
    cols = ["t", "surface", "abraham_rate", "net", "mechanical", "residual"]
    rows = [[getattr(r, c) for c in cols] for r in res.records]
    meta = {
        "R": f"{res.R:.9e}",
        "T": f"{res.T:.9e}",
        "A": f"{res.A:.9e}",
        "incident_energy": f"{res.incident_energy:.9e}",
        "reservoir_nodes": str(res.reservoir.count),
        "steps": str(res.steps),
    }
    return Table(cols, rows, meta), [mpath]


def run_packet(cp, config_path, tol):
    from .wavepacket import FluctuationKernel, WavePacketParams, packet_diagnostics, spreading_time

    sec = _section(cp, "packet")
    params = WavePacketParams(_get(sec, "mass"), _get(sec, "alpha"), _get(sec, "center", float, 0.0))
    t = np.linspace(0.0, _get(sec, "t_max"), _get(sec, "t_points", int, 201))
    kernel, files = None, []
    if cp.has_option("run", "model"):
        model, mpath = _model(cp, config_path)
        om = np.linspace(_get(sec, "omega_min"), _get(sec, "omega_max"), _get(sec, "omega_points", int, 801))
        kernel = FluctuationKernel.from_model(model, om)
        files = [mpath]
    diag = packet_diagnostics(params, t, kernel, _get(sec, "acceleration", float, 0.0))
    scale = float(np.max(np.abs(diag.envelope))) or 1.0
    rel_err = diag.envelope_error / scale
    if tol is not None and kernel is not None and rel_err > tol:
        raise NonConvergenceError(f"envelope relative error {rel_err:.3g} exceeds tolerance")
    meta = {
        "spreading_time": f"{spreading_time(params.mass, params.alpha):.9e}",
        "envelope_rel_error": f"{rel_err:.3e}",
    }
    return Table(["t", "variance", "mean_shift", "envelope"], diag.rows(), meta), files


COMMANDS = {
    "kk-check": run_kk_check,
    "pulse-pressure": run_pulse_pressure,
    "casimir": run_casimir,
    "packet": run_packet,
}


# ---------------------------------------------------------------------------
# output


def render_csv(table: Table, meta: dict) -> str:
    buf = io.StringIO()
    for key, val in {**meta, **table.meta}.items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dielmotion", description="Dielectric motion experiments to CSV.")
    p.add_argument("kind", choices=KINDS, help="experiment to run")
    p.add_argument("--config", required=True, type=Path, help="INI config file")
    p.add_argument("--out", type=Path, help="output CSV (default: [run] out, else stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (recorded; runs are serial)")
    p.add_argument("--tolerance", type=float, help="convergence tolerance passed to the solver")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def run(kind: str, config: Path, out: Path | None = None, threads: int = 1, tolerance: float | None = None) -> int:
    """Run one experiment and write its CSV; returns the exit status."""
    try:
        if threads < 1:
            raise ValidationError("--threads must be >= 1")
        if tolerance is not None and not (tolerance > 0 and math.isfinite(tolerance)):
            raise ValidationError("--tolerance must be positive")
        cp = _read_config(Path(config))
        if out is None and cp.has_option("run", "out"):
            out = Path(config).parent / cp.get("run", "out")
        table, files = COMMANDS[kind](cp, Path(config), tolerance)
        flags = {"kind": kind, "tolerance": tolerance}
        meta = {
            "dielmotion": __version__,
            "kind": kind,
            "config_sha256": config_digest(cp, files, flags),
            "method": METHODS[kind],
            "threads": str(threads),
        }
        text = render_csv(table, meta)
    except (ValidationError, InfeasibleError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except (NonConvergenceError, InstabilityError) as exc:
        log.error("did not converge: %s", exc)
        return EXIT_NONCONVERGED
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)
        log.info("wrote %d rows to %s", len(table.rows), out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    return run(args.kind, args.config, args.out, args.threads, args.tolerance)


if __name__ == "__main__":
    sys.exit(main())
