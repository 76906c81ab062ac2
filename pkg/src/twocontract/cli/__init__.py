"""Command-line entry point: ``twocontract <analyze|index|regions|simulate|equilibria> [flags]``.

Every command writes into ``--out`` (default ``out``) and finishes with a
``MANIFEST.json`` listing the files written and, on failure, the stage and
module that raised. Floats in JSON and CSV output carry 12 significant
digits, so repeated runs give byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..equilibria import classify, find_equilibria
from ..errors import AnalysisError, ConfigurationError, ConstructionError
from ..poincare import Circle, quarter_turn_table, table_to_csv, winding_number
from ..regions import (RegionLabel, build_region_grid, energy_spec_for, equilibria_region_report,
                       level_set_contours, omega_label, validate_energy_decrease)
from ..simulate import boa_validate
from ..systems import VectorField, field_from_json
from .render import regions_svg

PRESETS = ("example1", "example2", "example3", "intro", "opinion")
VERDICTS = ("d0_found", "no_omega", "inconclusive_index")

DEFAULTS = {
    "bbox": [-5.0, 5.0, -5.0, 5.0],
    "grid": [100, 100],
    "r": 1.0,
    "radius": 4.0,
    "center": [0.0, 0.0],
    "samples": 100,
    "seed": 0,
    "dt": 1e-3,
    "t_max": 50.0,
    "eta": 0.0,
    "band": 1e-9,
}


def load_system(spec: str) -> dict:
    """Preset name or path to a JSON file with ``kind``/``params`` (and optional ``analysis`` defaults)."""
    if spec in PRESETS:
        text = resources.files("twocontract.presets").joinpath(f"{spec}.json").read_text()
    else:
        path = Path(spec)
        if not path.is_file():
            raise ConfigurationError(f"--system {spec!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
        text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConstructionError(f"system file is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConstructionError("system definition must be a JSON object")
    return obj


@dataclass
class AnalysisConfig:
    system: dict
    bbox: tuple
    nx: int
    ny: int
    r: float
    eta: float
    band: float
    radius: float
    center: tuple
    samples: int
    seed: int
    dt: float
    t_max: float
    out: Path

    @property
    def field(self) -> VectorField:
        return field_from_json(self.system)

    def to_dict(self) -> dict:
        return {"bbox": list(self.bbox), "grid": [self.nx, self.ny], "r": self.r, "eta": self.eta,
                "band": self.band, "radius": self.radius, "center": list(self.center),
                "samples": self.samples, "seed": self.seed, "dt": self.dt, "t_max": self.t_max}


def _floats(text: str, n: int, flag: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"{flag} expects {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise ConfigurationError(f"{flag} expects {n} finite comma-separated numbers, got {text!r}")
    return vals


def build_config(args) -> AnalysisConfig:
    system = load_system(args.system)
    d = dict(DEFAULTS)
    d.update(system.get("analysis", {}))
    bbox = _floats(args.bbox, 4, "--bbox") if args.bbox else [float(v) for v in d["bbox"]]
    grid = [int(v) for v in _floats(args.grid, 2, "--grid")] if args.grid else [int(v) for v in d["grid"]]
    center = _floats(args.center, 2, "--center") if args.center else [float(v) for v in d["center"]]

    def pick(name, key=None, cast=float):
        v = getattr(args, name)
        return cast(d[key or name] if v is None else v)

    cfg = AnalysisConfig(
        system={"kind": system.get("kind"), "params": system.get("params")},
        bbox=tuple(bbox), nx=grid[0], ny=grid[1],
        r=pick("r"), eta=pick("eta"), band=pick("band"), radius=pick("radius"), center=tuple(center),
        samples=pick("samples", cast=int), seed=pick("seed", cast=int),
        dt=pick("dt"), t_max=pick("tmax", "t_max"), out=Path(args.out),
    )
    if cfg.samples < 1:
        raise ConfigurationError("--samples must be >= 1")
    if cfg.seed < 0:
        raise ConfigurationError("--seed must be non-negative")
    if not cfg.radius > 0:
        raise ConfigurationError("--radius must be positive")
    return cfg


def _clean(obj):
    """Round floats to 12 significant digits and make the tree JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        v = float(f"{v:.12g}")
        return 0.0 if v == 0 else v
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class Outputs:
    """Ordered writer that records every file for the manifest."""

    def __init__(self, root: Path, command: str):
        self.root = root
        self.command = command
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        (self.root / name).write_text(text)
        self.files.append(name)

    def manifest(self, failure: dict | None = None) -> None:
        entries = []
        for name in self.files:
            digest = hashlib.sha256((self.root / name).read_bytes()).hexdigest()
            entries.append({"file": name, "sha256": digest})
        doc = {"command": self.command, "status": "failed" if failure else "ok", "files": entries}
        if failure:
            doc["failure"] = failure
        (self.root / "MANIFEST.json").write_text(dumps(doc))


class _Stage:
    def __init__(self):
        self.name = "config"


def _region_of(field, cfg):
    return lambda x: omega_label(field, x, cfg.eta, cfg.band)


def _grid(field, cfg):
    spec = energy_spec_for(field, cfg.r)
    return spec, build_region_grid(field, spec, cfg.bbox, cfg.nx, cfg.ny, cfg.eta, cfg.band)


def _write_regions(out: Outputs, grid, eqs=()) -> None:
    out.write("regions.csv", grid.to_csv())
    out.write("regions.svg", regions_svg(grid, level_set_contours(grid), eqs))


def _write_trajectories(out: Outputs, boa) -> None:
    for k, tr in enumerate(boa.trajectories):
        out.write(f"traj_{k}.csv", tr.to_csv())


def cmd_analyze(cfg: AnalysisConfig, out: Outputs, stage: _Stage) -> dict:
    report: dict = {"system": cfg.system, "config": cfg.to_dict(), "notes": [], "warnings": []}
    stage.name = "system"
    field = cfg.field

    stage.name = "regions"
    spec, grid = _grid(field, cfg)
    report["regions"] = grid.summary()

    stage.name = "equilibria"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        eqs = find_equilibria(field, cfg.bbox, notes=report["notes"])

        stage.name = "index"
        curve = Circle(cfg.center, cfg.radius)
        enclosing = winding_number(field, curve)
        report["enclosing_curve"] = {"center": list(cfg.center), "radius": cfg.radius, **enclosing.to_dict()}
        report["total_index"] = enclosing.index
        eqs = classify(eqs, field, _region_of(field, cfg), total_index=enclosing.index)
    report["warnings"] += [str(w.message) for w in caught]
    report["equilibria"] = [e.to_dict() for e in eqs]
    report["energy"] = None
    report["d0"] = None
    report["boa"] = None
    _write_regions(out, grid, eqs)

    if report["regions"]["counts"][RegionLabel.OMEGA.value] == 0:
        verdict = "no_omega"
        line = "no Omega cells in the box: the trace is nowhere negative, so no common basin estimate exists"
    elif enclosing.index != 1:
        verdict = "inconclusive_index"
        line = f"enclosing curve index is {enclosing.index}, not +1: the curve does not bound a single attractor set"
    else:
        stage.name = "energy"
        report["energy"] = validate_energy_decrease(spec, field, grid).to_dict()
        d0_cells = report["regions"]["D0_cells"]
        report["d0"] = {"cells": d0_cells, "fraction": report["regions"]["D0_fraction"], "r": cfg.r}
        if d0_cells == 0:
            verdict = "no_omega"
            line = f"Omega does not meet the sublevel set E < {cfg.r:g}; D0 is empty"
        else:
            stage.name = "simulate"
            boa = boa_validate(field, grid, eqs, n_samples=cfg.samples, seed=cfg.seed, t_max=cfg.t_max, dt=cfg.dt)
            report["boa"] = boa.to_dict()
            _write_trajectories(out, boa)
            verdict = "d0_found"
            line = (f"D0 covers {d0_cells} cells; {boa.converged}/{boa.n_samples} sampled trajectories "
                    f"converged to an equilibrium")
    report["verdict"] = verdict
    report["verdict_line"] = line
    out.write("report.json", dumps(report))
    print(f"verdict: {verdict} -- {line}")
    return report


def cmd_index(cfg: AnalysisConfig, out: Outputs, stage: _Stage, table: bool = False) -> dict:
    stage.name = "system"
    field = cfg.field
    stage.name = "index"
    res = winding_number(field, Circle(cfg.center, cfg.radius))
    report = {"system": cfg.system, "center": list(cfg.center), "radius": cfg.radius, **res.to_dict()}
    print(f"index: {res.index:+d} (total angle change {res.total_angle_change:.6f} rad, {res.samples_used} samples)")
    if table:
        rows = quarter_turn_table(field, cfg.radius, cfg.center)
        out.write("index_table.csv", table_to_csv(rows))
        report["table"] = rows
    out.write("report.json", dumps(report))
    return report


def cmd_regions(cfg: AnalysisConfig, out: Outputs, stage: _Stage) -> dict:
    stage.name = "system"
    field = cfg.field
    stage.name = "regions"
    _, grid = _grid(field, cfg)
    stage.name = "equilibria"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        eqs = find_equilibria(field, cfg.bbox)
        placement = equilibria_region_report(eqs, _region_of(field, cfg))
    _write_regions(out, grid, eqs)
    report = {"system": cfg.system, "config": cfg.to_dict(), "regions": grid.summary(),
              "equilibria": placement["equilibria"], "warnings": [str(w.message) for w in caught]}
    out.write("report.json", dumps(report))
    counts = report["regions"]["counts"]
    print("cells: " + ", ".join(f"{k}={v}" for k, v in counts.items()) + f", D0={report['regions']['D0_cells']}")
    return report


def cmd_simulate(cfg: AnalysisConfig, out: Outputs, stage: _Stage) -> dict:
    stage.name = "system"
    field = cfg.field
    stage.name = "regions"
    _, grid = _grid(field, cfg)
    stage.name = "equilibria"
    eqs = find_equilibria(field, cfg.bbox)
    stage.name = "simulate"
    boa = boa_validate(field, grid, eqs, n_samples=cfg.samples, seed=cfg.seed, t_max=cfg.t_max, dt=cfg.dt)
    _write_trajectories(out, boa)
    report = {"system": cfg.system, "config": cfg.to_dict(), "equilibria": [e.to_dict() for e in eqs],
              "boa": boa.to_dict()}
    out.write("report.json", dumps(report))
    print(f"converged: {boa.converged}/{boa.n_samples}")
    return report


def cmd_equilibria(cfg: AnalysisConfig, out: Outputs, stage: _Stage) -> dict:
    stage.name = "system"
    field = cfg.field
    stage.name = "equilibria"
    notes: list = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        eqs = classify(find_equilibria(field, cfg.bbox, notes=notes), field, _region_of(field, cfg))
    report = {"system": cfg.system, "config": cfg.to_dict(), "equilibria": [e.to_dict() for e in eqs],
              "notes": notes, "warnings": [str(w.message) for w in caught]}
    out.write("report.json", dumps(report))
    for e in eqs:
        print(f"({e.location[0]:.6f}, {e.location[1]:.6f})  index {e.index:+d}  {e.region:7s} {e.nature}")
    return report


COMMANDS = {
    "analyze": cmd_analyze,
    "index": cmd_index,
    "regions": cmd_regions,
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", required=True, help=f"preset ({', '.join(PRESETS)}) or JSON file")
    common.add_argument("--bbox", help="x0,x1,y0,y1")
    common.add_argument("--grid", help="NX,NY")
    common.add_argument("--r", type=float, help="energy level defining U = {E < r}")
    common.add_argument("--eta", type=float, help="margin below zero required for Omega")
    common.add_argument("--band", type=float, help="half-width of the Omega0 band")
    common.add_argument("--radius", type=float, help="radius of the index circle")
    common.add_argument("--center", help="cx,cy of the index circle")
    common.add_argument("--samples", type=int, help="number of D0 samples to simulate")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--dt", type=float, help="RK4 step")
    common.add_argument("--tmax", type=float, help="integration horizon")
    common.add_argument("--out", default="out", help="output directory")
    parser = argparse.ArgumentParser(prog="twocontract", description="Planar 2-contraction analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "index":
            p.add_argument("--table", action="store_true", help="write the quarter-turn angle table CSV")
    return parser


_LIST_FLAGS = ("--bbox", "--center", "--grid")


def _join_list_values(argv: list[str]) -> list[str]:
    # argparse reads "-5,5,-5,5" as an option string, so bind list values with "="
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in _LIST_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = make_parser().parse_args(_join_list_values(argv))
    stage = _Stage()
    out = None
    try:
        cfg = build_config(args)
        out = Outputs(cfg.out, args.command)
        kwargs = {"table": args.table} if args.command == "index" else {}
        COMMANDS[args.command](cfg, out, stage, **kwargs)
    except AnalysisError as exc:
        module = "cli" if stage.name == "config" else exc.module
        failure = {"stage": stage.name, "module": module, "error": type(exc).__name__, "message": str(exc)}
        print(f"error in {module} during {stage.name}: {exc}", file=sys.stderr)
        if out is None:
            out = Outputs(Path(args.out), args.command)
        out.manifest(failure)
        return 2
    out.manifest()
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
