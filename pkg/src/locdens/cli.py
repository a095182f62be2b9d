"""Command-line front end.

    locdens <density|convexity|tails|spread|compare|selftest> --config PATH --out PATH [--resolution-scale K]

Scenario files are YAML. Results are comma-separated tables preceded by a
``#`` comment block holding the library version, the command and the
effective (defaults-resolved) configuration.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from . import __version__
from .analysis import (
    MONOTONE_JITTER,
    convexity_gap,
    default_tail_window,
    fit_tail,
    front_speed,
    is_nonincreasing,
    localization_width,
    narrow_energy_study,
    tail_profile,
)
from .density import Prescription, Region, density_values, region_probability, spatial_extent
from .errors import LocdensError
from .selftest import run_selftest
from .state import (
    MIN_MOMENTUM_NODES,
    MixedState,
    ModelParams,
    MomentumState,
    energy_moment,
    make_gaussian,
    mix,
)

MIN_SPATIAL_POINTS = 200
COMMANDS = ("density", "convexity", "tails", "spread", "compare", "selftest")

DEFAULTS: dict[str, Any] = {
    "grids": {"momentum_nodes": 512, "spatial_window": "auto", "spatial_points": 2001},
    "run": {
        "state": None,
        "times": [0.0],
        "regions": [[-1.0, 1.0]],
        "quantile": 0.1,
        "speed_tolerance": 0.05,
        "prescriptions": ["povm", "naive"],
        "tail_window": "auto",
        "tail_points": 64,
        "family": None,
        "bound_quantile": 0.9,
    },
}


class ConfigError(Exception):
    """Invalid scenario file; the message names the offending field."""


def fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def _line_index(node, path=(), out=None) -> dict:
    """Map field paths to 1-based line numbers of a composed YAML node tree."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_index(v, path + (str(k.value),), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


@dataclass
class Scenario:
    params: ModelParams
    states: dict[str, MomentumState]
    mixtures: dict[str, MixedState]
    effective: dict
    lines: dict = field(default_factory=dict)

    @property
    def grids(self) -> dict:
        return self.effective["grids"]

    @property
    def run(self) -> dict:
        return self.effective["run"]

    def lookup(self, name: str):
        if name in self.states:
            return self.states[name]
        if name in self.mixtures:
            return self.mixtures[name]
        raise ConfigError(f"run.state: unknown state or mixture {name!r}")


class _Validator:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, msg):
        dotted = ".".join(str(p) for p in path)
        probe = tuple(path)
        while probe and probe not in self.lines:
            probe = probe[:-1]
        where = f" (line {self.lines[probe]})" if probe in self.lines else ""
        raise ConfigError(f"{dotted}: {msg}{where}")

    def number(self, d, path, key, required=True, default=None):
        if key not in d or d[key] is None:
            if required:
                self.fail(path + (key,), "missing required field")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(path + (key,), f"expected a finite number, got {v!r}")
        return float(v)


def load_scenario(text: str, resolution_scale: float = 1.0) -> Scenario:
    """Parse and validate a YAML scenario, building its states and mixtures."""
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse config{where}: {getattr(exc, 'problem', exc)}") from None
    lines = _line_index(root) if root is not None else {}
    v = _Validator(lines)
    if not isinstance(raw, dict):
        v.fail((), "top level must be a mapping")
    if not resolution_scale > 0:
        raise ConfigError(f"--resolution-scale must be > 0, got {resolution_scale}")

    model = raw.get("model")
    if not isinstance(model, dict):
        v.fail(("model",), "missing required section")
    mass = v.number(model, ("model",), "mass")
    dim = v.number(model, ("model",), "dim")
    if dim not in (1.0, 3.0):
        v.fail(("model", "dim"), f"must be 1 or 3, got {model['dim']!r}")
    if mass < 0:
        v.fail(("model", "mass"), f"must be >= 0, got {mass}")
    params = ModelParams(mass, int(dim))

    grids = copy.deepcopy(DEFAULTS["grids"])
    grids.update(raw.get("grids") or {})
    run = copy.deepcopy(DEFAULTS["run"])
    run.update(raw.get("run") or {})
    for key in ("momentum_nodes", "spatial_points"):
        val = grids[key]
        if isinstance(val, bool) or not isinstance(val, int):
            v.fail(("grids", key), f"expected an integer, got {val!r}")
        grids[key] = int(round(val * resolution_scale))
    if grids["momentum_nodes"] < MIN_MOMENTUM_NODES:
        v.fail(("grids", "momentum_nodes"), f"{grids['momentum_nodes']} below minimum {MIN_MOMENTUM_NODES}")
    if grids["spatial_points"] < MIN_SPATIAL_POINTS:
        v.fail(("grids", "spatial_points"), f"{grids['spatial_points']} below minimum {MIN_SPATIAL_POINTS}")
    win = grids["spatial_window"]
    if win != "auto":
        if not (isinstance(win, list) and len(win) == 2 and all(isinstance(x, (int, float)) for x in win) and win[0] < win[1]):
            v.fail(("grids", "spatial_window"), f"expected 'auto' or [lo, hi] with lo < hi, got {win!r}")
        grids["spatial_window"] = [float(x) for x in win]

    states: dict[str, MomentumState] = {}
    eff_states = []
    for i, spec in enumerate(raw.get("states") or []):
        path = ("states", i)
        if not isinstance(spec, dict):
            v.fail(path, "each state must be a mapping")
        name = spec.get("name")
        if not isinstance(name, str) or not name:
            v.fail(path + ("name",), "missing required field")
        if name in states:
            v.fail(path + ("name",), f"duplicate state name {name!r}")
        kind = spec.get("type", "gaussian")
        if kind != "gaussian":
            v.fail(path + ("type",), f"unsupported wavepacket type {kind!r}")
        p0 = v.number(spec, path, "p0")
        sigma = v.number(spec, path, "sigma")
        try:
            states[name] = make_gaussian(params, p0, sigma, n_nodes=grids["momentum_nodes"])
        except LocdensError as exc:
            v.fail(path, str(exc))
        eff_states.append({"name": name, "type": "gaussian", "p0": p0, "sigma": sigma})

    mixtures: dict[str, MixedState] = {}
    eff_mixtures = []
    for i, spec in enumerate(raw.get("mixtures") or []):
        path = ("mixtures", i)
        if not isinstance(spec, dict):
            v.fail(path, "each mixture must be a mapping")
        name = spec.get("name")
        if not isinstance(name, str) or not name:
            v.fail(path + ("name",), "missing required field")
        comps = spec.get("components")
        if not isinstance(comps, list) or not comps:
            v.fail(path + ("components",), "missing or empty component list")
        resolved = []
        for j, comp in enumerate(comps):
            if not (isinstance(comp, list) and len(comp) == 2):
                v.fail(path + ("components", j), "expected [weight, state-name]")
            w, ref = comp
            if ref not in states:
                v.fail(path + ("components", j), f"unknown state {ref!r}")
            if isinstance(w, bool) or not isinstance(w, (int, float)):
                v.fail(path + ("components", j), f"weight must be a number, got {w!r}")
            resolved.append((float(w), ref))
        try:
            mixtures[name] = mix([(w, states[ref]) for w, ref in resolved])
        except LocdensError as exc:
            v.fail(path, str(exc))
        eff_mixtures.append({"name": name, "components": [[w, ref] for w, ref in resolved]})

    for key in ("prescriptions",):
        for j, pr in enumerate(run[key]):
            try:
                Prescription(pr)
            except ValueError:
                v.fail(("run", key, j), f"unknown prescription {pr!r}")
    effective = {
        "model": {"mass": mass, "dim": int(dim)},
        "states": eff_states,
        "mixtures": eff_mixtures,
        "grids": grids,
        "run": run,
        "resolution_scale": resolution_scale,
    }
    return Scenario(params, states, mixtures, effective, lines)


def _need_states(sc: Scenario):
    if not sc.states:
        raise ConfigError("states: at least one state is required for this command")


def _primary(sc: Scenario):
    name = sc.run.get("state")
    if name is None:
        _need_states(sc)
        return next(iter(sc.states)), next(iter(sc.states.values()))
    return name, sc.lookup(name)


def _times(sc: Scenario) -> list[float]:
    ts = sc.run["times"]
    if not isinstance(ts, list) or not ts or not all(isinstance(t, (int, float)) for t in ts):
        raise ConfigError(f"run.times: expected a non-empty list of numbers, got {ts!r}")
    return [float(t) for t in ts]


def _regions(sc: Scenario) -> list[Region]:
    out = []
    dim = sc.params.dim
    for i, spec in enumerate(sc.run["regions"]):
        try:
            if spec and isinstance(spec[0], list):
                out.append(Region(tuple(tuple(iv) for iv in spec), dim))
            else:
                out.append(Region((tuple(spec),), dim))
        except (LocdensError, TypeError, ValueError) as exc:
            raise ConfigError(f"run.regions.{i}: {exc}") from None
    return out


def _region_label(r: Region) -> str:
    return "+".join(f"[{fmt(a)}:{fmt(b)}]" for a, b in r.intervals)


def cmd_density(sc: Scenario):
    name, state = _primary(sc)
    times = _times(sc)
    win = sc.grids["spatial_window"]
    n = sc.grids["spatial_points"]
    if win == "auto":
        X = max(spatial_extent(state, t, Prescription.POVM) for t in times)
        pts = np.linspace(-X, X, n) if sc.params.dim == 1 else np.linspace(0.0, X, n)
    else:
        pts = np.linspace(win[0], win[1], n)
    header = ["x", "t", "povm", "naive", "nw", "energy_raw"]
    rows = []
    for t in times:
        cols = [density_values(state, pts, t, pr) for pr in ("povm", "naive", "nw", "energy_raw")]
        for i, x in enumerate(pts):
            rows.append([x, t] + [c[i] for c in cols])
    return header, rows, []


def cmd_convexity(sc: Scenario):
    if not sc.mixtures:
        raise ConfigError("mixtures: the convexity command needs at least one mixture")
    regions = _regions(sc)
    times = _times(sc)
    header = ["mixture", "t", "record", "label", "prescription", "value", "convex", "difference"]
    rows, violations = [], []
    names = {id(s): n for n, s in sc.states.items()}
    for mname, m in sc.mixtures.items():
        for w, s in m.components:
            rows.append([mname, "", "component_energy", names[id(s)], "", energy_moment(s, 1), "", ""])
        for t in times:
            for pr in (Prescription.POVM, Prescription.NAIVE):
                gap = convexity_gap(m, t, pr) if len(m.components) > 1 else 0.0
                rows.append([mname, t, "gap_l1", "", pr.value, gap, "", ""])
                if pr is Prescription.POVM and gap > 1e-12:
                    violations.append(f"{mname} t={fmt(t)}: povm convexity gap {gap:.3e} > 1e-12")
            for r in regions:
                for pr in (Prescription.POVM, Prescription.NAIVE):
                    value = region_probability(m, r, t, pr)
                    convex = math.fsum(w * region_probability(s, r, t, pr) for w, s in m.components)
                    diff = value - convex
                    rows.append([mname, t, "region", _region_label(r), pr.value, value, convex, diff])
                    if pr is Prescription.POVM and abs(diff) > 1e-12:
                        violations.append(
                            f"{mname} t={fmt(t)} {_region_label(r)}: |povm mixture - convex| = {abs(diff):.3e} > 1e-12")
    return header, rows, violations


def cmd_tails(sc: Scenario):
    _need_states(sc)
    mass = sc.params.mass
    header = ["state", "prescription", "r_lo", "r_hi", "n_points", "gamma_hat", "gamma_stderr",
              "residual", "mass", "bound", "holds"]
    rows, violations = [], []
    window = sc.run["tail_window"]
    for name, s in sc.states.items():
        for pr in sc.run["prescriptions"]:
            pr = Prescription(pr)
            if pr is Prescription.ENERGY_RAW:
                continue
            win = default_tail_window(s, pr) if window == "auto" else tuple(float(x) for x in window)
            fit = fit_tail(tail_profile(s, pr, win, int(sc.run["tail_points"])), win)
            holds = fit.within_bound(mass)
            rows.append([name, pr.value, fit.r_lo, fit.r_hi, fit.n_points, fit.gamma_hat, fit.gamma_stderr,
                         fit.residual, mass, fit.bound(mass), holds])
            if not holds:
                violations.append(
                    f"{name} {pr.value}: gamma_hat = {fit.gamma_hat:.6g} > m + 3*stderr = {fit.bound(mass):.6g}")
    return header, rows, violations


def cmd_spread(sc: Scenario):
    _need_states(sc)
    q = float(sc.run["quantile"])
    tol = float(sc.run["speed_tolerance"])
    times = sorted(set([0.0] + _times(sc)))
    header = ["state", "prescription", "q", "t", "radius", "speed", "limit", "holds"]
    rows, violations = [], []
    for name, s in sc.states.items():
        for pr in sc.run["prescriptions"]:
            pr = Prescription(pr)
            if pr is Prescription.ENERGY_RAW:
                continue
            fr = front_speed(s, pr, q, times)
            rows.append([name, pr.value, q, 0.0, fr.radii[0], "", 1 + tol, ""])
            for t, r, v in zip(fr.times[1:], fr.radii[1:], fr.speeds):
                holds = v <= 1 + tol
                rows.append([name, pr.value, q, t, r, v, 1 + tol, holds])
                if not holds:
                    violations.append(f"{name} {pr.value} t={fmt(t)}: speed = {v:.6g} > 1 + tol = {1 + tol:.6g}")
    return header, rows, violations


def cmd_compare(sc: Scenario):
    _need_states(sc)
    names = sc.run["family"] or list(sc.states)
    for i, n in enumerate(names):
        if n not in sc.states:
            raise ConfigError(f"run.family.{i}: unknown state {n!r}")
    family = [sc.states[n] for n in names]
    table = narrow_energy_study(family)
    qb = float(sc.run["bound_quantile"])
    header = ["state", "relative_spread", "mean_energy", "l1_naive_povm", "width", "width_energy_product"]
    rows = []
    for n, s, row in zip(names, family, table):
        width = localization_width(s, qb)
        e = energy_moment(s, 1)
        rows.append([n, row.relative_spread, e, row.l1, width, width * e])
    violations = []
    l1 = [r.l1 for r in table]
    if not is_nonincreasing(l1, MONOTONE_JITTER):
        violations.append(
            "L1(naive, povm) not nonincreasing along the family: "
            + ", ".join(f"{a:.6g} -> {b:.6g}" for a, b in zip(l1, l1[1:]) if b > a * (1 + MONOTONE_JITTER)))
    return header, rows, violations


def write_report(stream, command: str, effective: dict | None, header, rows):
    stream.write(f"# locdens {__version__}\n")
    stream.write(f"# command: {command}\n")
    if effective is not None:
        stream.write("# config: " + json.dumps(effective, sort_keys=True, separators=(",", ":")) + "\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="locdens",
        description="Localization densities of one-particle scalar states: Newton-Wigner, energy density, POVM.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML scenario file (not used by selftest)")
    ap.add_argument("--out", help="output table path (default: stdout)")
    ap.add_argument("--resolution-scale", type=float, default=1.0,
                    help="multiply momentum nodes and spatial points by K")
    return ap


HANDLERS = {
    "density": cmd_density,
    "convexity": cmd_convexity,
    "tails": cmd_tails,
    "spread": cmd_spread,
    "compare": cmd_compare,
}


def _emit(args, command, effective, header, rows):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_report(fh, command, effective, header, rows)
    else:
        write_report(sys.stdout, command, effective, header, rows)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        checks = run_selftest()
        for c in checks:
            print(c.line())
        if args.out:
            rows = [[c.name, c.measured, c.tolerance, c.sense, c.passed] for c in checks]
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                write_report(fh, "selftest", None, ["check", "measured", "tolerance", "sense", "passed"], rows)
        failed = sum(not c.passed for c in checks)
        print(f"{len(checks) - failed}/{len(checks)} checks passed")
        return 0 if failed == 0 else 1
    if not args.config:
        print(f"locdens {args.command}: --config is required", file=sys.stderr)
        return 2
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        sc = load_scenario(text, args.resolution_scale)
        header, rows, violations = HANDLERS[args.command](sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LocdensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    _emit(args, args.command, sc.effective, header, rows)
    for v in violations:
        print(f"bound violated: {v}", file=sys.stderr)
    return 1 if violations else 0


if __name__ == "__main__":
    sys.exit(main())
