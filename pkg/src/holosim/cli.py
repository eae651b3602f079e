"""Batch front-end: scenario configs in, machine-readable gate documents out.

Scenarios are single JSON files; the subcommand picks the pipeline.  All
validation problems are reported together before any computation starts
(exit code 2); numerical failures during a run exit with code 3.  Output
is deterministic: no timestamps, keys sorted, complex numbers as [re, im]
pairs with matrices row-major.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from ._kernels import backend_name, use_backend
from .analysis import ErrorBudget, evaluate_budget, example_budget
from .evolution import (
    adaptive_profile,
    adiabatic_gate,
    calibrate_schedule,
    geometric_phase,
    landau_zener_scan,
    survey_loop,
)
from .gates import Encoding, compose, extract_logical, ideal_gate, phase_distance
from .holonomy import (
    TransportError,
    canonical_loop_phase_cz,
    canonical_loop_phase_z,
    dark_energy,
    loop_holonomy,
    rotation_angle_x,
    standard_loop,
)
from .junction import JunctionParams
from .network import cz_layout, x_layout, z_layout

SCHEMA = "holo-sim/1"

_GATE_BLOCKS = {"gate-z": "z", "gate-x": "x", "gate-cz": "cz"}
_JUNCTION_KEYS = {
    "z": ("j1", "j2"),
    "x": ("j1", "j2", "j3"),
    "cz": ("j1", "j2", "j1p", "j2p"),
}
_LOOP_KINDS = {"z": "Z_RECT", "x": "X_PATH", "cz": "CZ_RECT"}
_DEFAULT_CORNERS = {
    "z": (math.pi / 3, math.pi / 3),
    "cz": (math.pi / 3, math.pi / 3),
}
_KNOWN_KEYS = {
    "units",
    "block",
    "junctions",
    "h",
    "e_c",
    "loop",
    "etas",
    "eta_fractions",
    "tolerance",
    "dynamics",
    "echo",
    "backend",
    "budget",
    "sweep",
    "reference_value",
}
_BUDGET_FIELDS = (
    "gap",
    "rate",
    "operation_time",
    "level_splitting",
    "pair_gap",
    "charging_energy",
    "temperature",
    "qp_prefactor",
)


class _Errors(list):
    def add(self, message: str) -> None:
        self.append(message)

    def number(self, value, key: str, positive: bool = False):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.add(f"{key} must be a number, got {value!r}")
            return None
        if positive and not value > 0:
            self.add(f"{key} must be positive, got {value}")
            return None
        return float(value)


def _complex_pairs(matrix: np.ndarray) -> list:
    m = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _junction(raw, key: str, errors: _Errors) -> JunctionParams | None:
    if not isinstance(raw, dict):
        errors.add(f"junctions.{key} must be an object with e_j, gamma, phi")
        return None
    unknown = set(raw) - {"e_j", "gamma", "phi"}
    if unknown:
        errors.add(f"junctions.{key} has unknown fields {sorted(unknown)}")
    e_j = errors.number(raw.get("e_j", 1.0), f"junctions.{key}.e_j")
    gamma = errors.number(raw.get("gamma", 1.0), f"junctions.{key}.gamma")
    phi = errors.number(raw.get("phi", 0.0), f"junctions.{key}.phi")
    if None in (e_j, gamma, phi):
        return None
    try:
        return JunctionParams(e_j=e_j, gamma=gamma, phi=phi)
    except ValueError as exc:
        errors.add(f"junctions.{key}: {exc}")
        return None


def _parse_scenario(config: dict, command: str, errors: _Errors) -> dict:
    """Resolve a gate or scan scenario into layout, loop and run settings."""
    unknown = set(config) - _KNOWN_KEYS
    if unknown:
        errors.add(f"unknown config keys {sorted(unknown)}")
    for key in ("budget", "sweep", "reference_value"):
        if key in config:
            errors.add(f"{key} only applies to the fidelity command")
    block = config.get("block", _GATE_BLOCKS.get(command))
    if block not in _JUNCTION_KEYS:
        errors.add(f"block must be one of z, x, cz, got {block!r}")
        return {}
    if command in _GATE_BLOCKS and block != _GATE_BLOCKS[command]:
        errors.add(f"{command} expects block {_GATE_BLOCKS[command]!r}, got {block!r}")

    raw_junctions = config.get("junctions", {})
    if not isinstance(raw_junctions, dict):
        errors.add("junctions must be an object")
        raw_junctions = {}
    keys = _JUNCTION_KEYS[block]
    missing = [k for k in keys if k not in raw_junctions]
    extra = set(raw_junctions) - set(keys)
    if missing:
        errors.add(f"block {block!r} needs junctions {list(keys)}; missing {missing}")
    if extra:
        errors.add(f"block {block!r} does not use junctions {sorted(extra)}")
    junctions = {
        k: _junction(raw_junctions[k], k, errors) for k in keys if k in raw_junctions
    }

    h = errors.number(config.get("h", 0.0), "h")
    e_c = None
    if block == "cz":
        e_c = errors.number(config.get("e_c", 4.0), "e_c", positive=True)
    elif "e_c" in config:
        errors.add("e_c only applies to the cz block")

    raw_loop = config.get("loop", {})
    if not isinstance(raw_loop, dict):
        errors.add("loop must be an object")
        raw_loop = {}
    loop_unknown = set(raw_loop) - {"kind", "corners", "samples"}
    if loop_unknown:
        errors.add(f"loop has unknown fields {sorted(loop_unknown)}")
    kind = raw_loop.get("kind", _LOOP_KINDS[block])
    if kind != _LOOP_KINDS[block]:
        errors.add(f"block {block!r} uses loop kind {_LOOP_KINDS[block]!r}, got {kind!r}")
    corners = raw_loop.get("corners")
    if corners is None and block in _DEFAULT_CORNERS:
        corners = list(_DEFAULT_CORNERS[block])
    if block == "x":
        j3 = junctions.get("j3")
        if corners is None:
            errors.add("loop.corners is required for the x block (at least [phi_star])")
            corners = []
        if len(corners) == 1 and j3 is not None:
            corners = [corners[0], j3.phi]
        elif len(corners) == 2 and j3 is not None:
            if abs(corners[1] - j3.phi) > 1e-12:
                errors.add(
                    "loop.corners[1] must equal junctions.j3.phi "
                    f"({corners[1]} != {j3.phi})"
                )
    corner_values = []
    for i, c in enumerate(corners or []):
        v = errors.number(c, f"loop.corners[{i}]")
        if v is not None:
            corner_values.append(v)
    samples = raw_loop.get("samples", 2000)
    if not isinstance(samples, int) or samples < 16:
        errors.add(f"loop.samples must be an integer >= 16, got {samples!r}")
        samples = 16

    tolerance = errors.number(config.get("tolerance", 3e-5), "tolerance", positive=True)
    dynamics = config.get("dynamics", True)
    if not isinstance(dynamics, bool):
        errors.add("dynamics must be true or false")
        dynamics = True
    echo = config.get("echo", False)
    if not isinstance(echo, bool):
        errors.add("echo must be true or false")
        echo = False

    etas = config.get("etas")
    fractions = config.get("eta_fractions")
    if etas is not None and fractions is not None:
        errors.add("give either etas or eta_fractions, not both")
    for key, values in (("etas", etas), ("eta_fractions", fractions)):
        if values is None:
            continue
        if not isinstance(values, list) or not values:
            errors.add(f"{key} must be a non-empty list")
            continue
        cleaned = [errors.number(v, f"{key}[{i}]", positive=True) for i, v in enumerate(values)]
        if None not in cleaned and any(b > a for a, b in zip(cleaned, cleaned[1:])):
            errors.add(f"{key} must be sorted fastest first (descending)")

    backend = config.get("backend")
    if backend not in (None, "numba", "numpy"):
        errors.add(f"backend must be 'numba' or 'numpy', got {backend!r}")
        backend = None

    if errors or None in junctions.values():
        return {}
    factory = {"z": z_layout, "x": x_layout, "cz": cz_layout}[block]
    try:
        layout = factory(*(junctions[k] for k in keys))
    except ValueError as exc:
        errors.add(f"junctions: {exc}")
        return {}
    try:
        loop = standard_loop(kind, tuple(corner_values), samples=samples, h=h, e_c=e_c)
    except ValueError as exc:
        errors.add(f"loop: {exc}")
        return {}
    return {
        "block": block,
        "layout": layout,
        "junctions": junctions,
        "loop": loop,
        "h": h,
        "e_c": e_c,
        "etas": etas,
        "eta_fractions": fractions,
        "tolerance": tolerance,
        "dynamics": dynamics,
        "echo": echo,
        "backend": backend,
    }


def _conventions(block: str) -> dict:
    bias = (
        "h times the double-occupancy imbalance of the two chains"
        if block == "cz"
        else "-h/2 on the empty state of box 0, +h/2 on its transferred pair"
    )
    return {
        "basis": "pair occupancies per box, most significant box first",
        "pauli_z": "+1 on the empty box, -1 on the transferred pair",
        "bias": bias,
        "hbar": 1.0,
        "global_phase": "stripped so the dominant diagonal entry is real positive",
    }


def _closed_form(block: str, scenario: dict) -> dict:
    loop = scenario["loop"]
    j = scenario["junctions"]
    if block == "z":
        phi1, phi2 = loop.segments[1].start[0], loop.segments[1].end[1]
        angle = canonical_loop_phase_z(j["j2"].gamma, phi1, phi2)
        return {"angle": angle, "target": ideal_gate("z", angle)}
    if block == "x":
        phi_star = loop.segments[2].start[0]
        angle, frame_phase = rotation_angle_x(phi_star, j["j3"])
        target = compose(
            [ideal_gate("z", frame_phase), ideal_gate("x", angle),
             ideal_gate("z", -frame_phase)]
        )
        return {"angle": angle, "frame_phase": frame_phase, "target": target}
    phi1, phi2 = loop.segments[1].start[0], loop.segments[1].end[1]
    angle = canonical_loop_phase_cz(
        j["j1"], j["j1p"], j["j2"], j["j2p"], scenario["e_c"], phi1, phi2
    )
    return {"angle": angle, "target": ideal_gate("cz", angle)}


def _encoding(block: str, scenario: dict) -> Encoding:
    if block == "z":
        return Encoding.single_box()
    if block == "x":
        return Encoding.two_box(scenario["junctions"]["j3"])
    return Encoding.coupled_pair()


def _resolve_etas(scenario: dict, gap: float) -> list[float]:
    if scenario["etas"] is not None:
        return [float(v) for v in scenario["etas"]]
    fractions = scenario["eta_fractions"] or [1.0 / 30.0]
    return [float(f) * gap for f in fractions]


def _run_gate(command: str, config: dict, scenario: dict) -> dict:
    block = scenario["block"]
    layout, loop = scenario["layout"], scenario["loop"]
    closed = _closed_form(block, scenario)
    encoding = _encoding(block, scenario)
    target = closed.pop("target")
    label = {"z": "U_Z", "x": "U_X", "cz": "U_CZ"}[block]

    energy = dark_energy(layout, loop.h)
    wilson = loop_holonomy(layout, loop, energy)
    wilson_logical = extract_logical(wilson, encoding, label)
    distances = {
        "wilson_vs_closed_form": phase_distance(wilson_logical, target),
    }
    document = {
        "schema": SCHEMA,
        "command": command,
        "scenario": config,
        "units": config.get("units", "energies in units of the reference junction"),
        "conventions": _conventions(block),
        "closed_form": {k: float(v) for k, v in closed.items()},
        "wilson": {
            "frame_unitary": _complex_pairs(wilson.unitary),
            "logical_gate": _complex_pairs(wilson_logical.matrix),
            "subspace_dim": wilson.subspace_dim,
            "discretization_error_estimate": wilson.discretization_error_estimate,
            "window_counts": [int(c) for c in wilson.metadata["window_counts"]],
            "min_outside_gap": wilson.metadata["min_outside_gap"],
        },
        "ideal_gate": _complex_pairs(target.matrix),
        "dynamic": [],
        "distances": distances,
        "metadata": {
            "backend": backend_name(),
            "seeds": None,
            "sample_counts": {"loop_samples": loop.sample_count},
        },
    }
    if not scenario["dynamics"]:
        return document
    profile = adaptive_profile(layout, loop)
    diagnostics = survey_loop(layout, loop, profile=profile)
    for eta in _resolve_etas(scenario, diagnostics.gap):
        schedule = calibrate_schedule(
            layout, loop, eta=eta, tolerance=scenario["tolerance"], profile=profile
        )
        estimate = adiabatic_gate(layout, loop, schedule)
        logical = extract_logical(estimate, encoding, label)
        entry = {
            "eta": eta,
            "total_time": schedule.total_time,
            "time_steps": schedule.time_steps,
            "gap": schedule.gap,
            "leakage": estimate.leakage,
            "norm_drift": estimate.norm_drift,
            "logical_gate": _complex_pairs(logical.matrix),
            "distance_to_wilson": phase_distance(logical, wilson_logical),
            "distance_to_closed_form": phase_distance(logical, target),
        }
        if scenario["echo"]:
            entry["echo_phases"] = [
                geometric_phase(layout, loop, schedule, column=col)
                for col in range(estimate.subspace_dim)
            ]
        document["dynamic"].append(entry)
    return document


def _run_lz_scan(config: dict, scenario: dict) -> dict:
    layout, loop = scenario["layout"], scenario["loop"]
    profile = adaptive_profile(layout, loop)
    etas = None
    if scenario["etas"] is not None:
        etas = [float(v) for v in scenario["etas"]]
    elif scenario["eta_fractions"] is not None:
        gap = survey_loop(layout, loop, profile=profile).gap
        etas = [float(f) * gap for f in scenario["eta_fractions"]]
    scan = landau_zener_scan(
        layout, loop, etas=etas, tolerance=scenario["tolerance"], profile=profile
    )
    prediction = scan.slope / scan.etas + scan.intercept
    rows = [
        {
            "eta": float(scan.etas[i]),
            "leakage": float(scan.leakages[i]),
            "ln_leakage": (
                math.log(scan.leakages[i]) if scan.leakages[i] > 0 else None
            ),
            "in_fit": bool(scan.fitted[i]),
            "fit_ln_leakage": float(prediction[i]),
        }
        for i in range(len(scan.etas))
    ]
    return {
        "schema": SCHEMA,
        "command": "lz-scan",
        "scenario": config,
        "units": config.get("units", "energies in units of the reference junction"),
        "conventions": _conventions(scenario["block"]),
        "rows": rows,
        "fit": {
            "slope": scan.slope,
            "intercept": scan.intercept,
            "r_squared": scan.r_squared,
            "gap": scan.gap,
            "gap_estimate": scan.gap_estimate,
        },
        "metadata": {
            "backend": backend_name(),
            "seeds": None,
            "sample_counts": {"loop_samples": loop.sample_count},
        },
    }


def _parse_budget(config: dict, errors: _Errors):
    raw = config.get("budget", "example")
    sweep = config.get("sweep")
    unknown = set(config) - {"units", "budget", "sweep", "reference_value"}
    if unknown:
        errors.add(f"unknown config keys {sorted(unknown)}")
    if raw == "example":
        base = example_budget()
    elif isinstance(raw, dict):
        unknown = set(raw) - set(_BUDGET_FIELDS)
        if unknown:
            errors.add(f"budget has unknown fields {sorted(unknown)}")
        values = {}
        defaults = example_budget()
        for field in _BUDGET_FIELDS:
            value = raw.get(field, getattr(defaults, field))
            checked = errors.number(value, f"budget.{field}")
            values[field] = checked
        if errors:
            return None, None
        try:
            base = ErrorBudget(**values)
        except ValueError as exc:
            errors.add(f"budget: {exc}")
            return None, None
    else:
        errors.add("budget must be 'example' or an object of budget fields")
        return None, None
    if sweep is None:
        return base, None
    if not isinstance(sweep, dict) or set(sweep) != {"field", "values"}:
        errors.add("sweep must be an object with exactly 'field' and 'values'")
        return base, None
    field = sweep["field"]
    if field not in _BUDGET_FIELDS:
        errors.add(f"sweep.field must be one of {list(_BUDGET_FIELDS)}")
        return base, None
    if not isinstance(sweep["values"], list) or not sweep["values"]:
        errors.add("sweep.values must be a non-empty list")
        return base, None
    values = [errors.number(v, f"sweep.values[{i}]") for i, v in enumerate(sweep["values"])]
    if errors:
        return base, None
    return base, (field, values)


def _budget_row(budget: ErrorBudget) -> dict:
    report = evaluate_budget(budget)
    row = {field: getattr(budget, field) for field in _BUDGET_FIELDS}
    row.update(
        {
            "leakage": report.leakage,
            "phase_wobble": report.phase_wobble,
            "qp_rate": report.qp_rate,
            "qp_loss": report.qp_loss,
            "error_sum": report.leakage + report.qp_loss,
            "fidelity": report.fidelity,
            "window_shortest": report.window.shortest,
            "window_longest": (
                report.window.longest if math.isfinite(report.window.longest) else None
            ),
            "window_open": report.window.open,
            "fast_drive": report.fast_drive,
        }
    )
    return row


def _run_fidelity(config: dict, errors: _Errors) -> dict | None:
    base, sweep = _parse_budget(config, errors)
    reference = config.get("reference_value")
    if reference is not None:
        reference = errors.number(reference, "reference_value")
    if errors:
        return None
    if sweep is None:
        rows = [_budget_row(base)]
    else:
        field, values = sweep
        rows = []
        for value in values:
            kwargs = {f: getattr(base, f) for f in _BUDGET_FIELDS}
            kwargs[field] = value
            rows.append(_budget_row(ErrorBudget(**kwargs)))
    document = {
        "schema": SCHEMA,
        "command": "fidelity",
        "scenario": config,
        "units": config.get("units", "energies in units of the reference junction"),
        "rows": rows,
        "metadata": {"backend": backend_name(), "seeds": None},
    }
    if reference is not None:
        document["reference_value"] = reference
    return document


def _run_loop_dump(config: dict, scenario: dict) -> dict:
    loop = scenario["loop"]
    fluxes = loop.sample_fluxes()
    n = fluxes.shape[0] - 1
    return {
        "schema": SCHEMA,
        "command": "loop-dump",
        "scenario": config,
        "units": "flux angles in radians",
        "labels": list(loop.labels),
        "fractions": [i / n for i in range(n + 1)],
        "fluxes": [[float(v) for v in row] for row in fluxes],
        "metadata": {
            "backend": backend_name(),
            "seeds": None,
            "sample_counts": {"loop_samples": loop.sample_count},
        },
    }


def _csv_text(document: dict) -> str:
    """Tabular projection of a result document."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    command = document["command"]
    if command == "lz-scan":
        columns = ["eta", "leakage", "ln_leakage", "in_fit", "fit_ln_leakage"]
        writer.writerow(columns)
        for row in document["rows"]:
            writer.writerow([row[c] for c in columns])
    elif command == "fidelity":
        columns = list(document["rows"][0])
        writer.writerow(columns)
        for row in document["rows"]:
            writer.writerow([row[c] for c in columns])
    elif command == "loop-dump":
        writer.writerow(["fraction", *document["labels"]])
        for fraction, row in zip(document["fractions"], document["fluxes"]):
            writer.writerow([fraction, *row])
    else:
        writer.writerow(["section", "key", "value"])
        for key, value in document["closed_form"].items():
            writer.writerow(["closed_form", key, value])
        writer.writerow(
            ["wilson", "discretization_error_estimate",
             document["wilson"]["discretization_error_estimate"]]
        )
        for key, value in document["distances"].items():
            writer.writerow(["distances", key, value])
        for entry in document["dynamic"]:
            for key in (
                "eta", "leakage", "distance_to_wilson", "distance_to_closed_form"
            ):
                writer.writerow([f"dynamic[eta={entry['eta']:.6g}]", key, entry[key]])
    return buffer.getvalue()


def _emit(document: dict, out: str | None, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    else:
        text = _csv_text(document)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as handle:
            handle.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="holosim",
        description="Holonomic gate pipelines for switchable junction blocks.",
    )
    parser.add_argument(
        "command",
        choices=["gate-z", "gate-x", "gate-cz", "lz-scan", "fidelity", "loop-dump"],
    )
    parser.add_argument("config", help="path to a JSON scenario file")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return 2

    errors = _Errors()
    if args.command == "fidelity":
        document = _run_fidelity(config, errors)
        if errors:
            for message in errors:
                print(f"error: {message}", file=sys.stderr)
            return 2
        _emit(document, args.out, args.format)
        return 0

    scenario = _parse_scenario(config, args.command, errors)
    if errors:
        for message in errors:
            print(f"error: {message}", file=sys.stderr)
        return 2

    if scenario["backend"]:
        use_backend(scenario["backend"])
    try:
        if args.command in _GATE_BLOCKS:
            document = _run_gate(args.command, config, scenario)
        elif args.command == "lz-scan":
            document = _run_lz_scan(config, scenario)
        else:
            document = _run_loop_dump(config, scenario)
    except (
        TransportError,
        RuntimeError,
        FloatingPointError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    finally:
        if scenario["backend"]:
            use_backend(None)
    _emit(document, args.out, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
