"""Batch front door: solve, compare, variational, sweep, perturb.

Exit codes are a contract for CI: 0 success, 2 configuration problem,
3 cross-validation gate violation, 4 solver non-convergence.  Full-fidelity
results go to JSON, analyst-facing tables to CSV; numeric fields use
shortest round-trip float formatting so re-reading a result reproduces it
bitwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, oracle, sambe, variational
from .model import (
    FourierHamiltonian,
    ModelError,
    builtin_model,
    load_model,
)
from .oracle import PropagationConfig, PropagationError
from .sambe import SolverError, TruncationError, wrap_distance
from .variational import VariationalConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_NONCONVERGENCE = 4


class GateError(RuntimeError):
    def __init__(self, message: str, rows: list[dict]):
        super().__init__(message)
        self.rows = rows


def _parse_param_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        try:
            return [float(part) for part in text.split(",")]
        except ValueError:
            pass
    return text


def _parse_params(pairs: list[str]) -> dict:
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise ModelError(f"--param expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        params[key] = _parse_param_value(value)
    return params


def _resolve_model(args) -> FourierHamiltonian:
    if bool(args.model) == bool(args.builtin):
        raise ModelError("give exactly one of --model or --builtin")
    if args.model:
        path = Path(args.model)
        if not path.exists():
            raise ModelError(f"model file not found: {path}")
        return load_model(str(path))
    return builtin_model(args.builtin, _parse_params(args.param))


def _truncation_arg(text: str):
    return text if text == "auto" else int(text)


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows: list[list]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
            fh.write("\n")


def _spectrum_rows(spectrum: sambe.Spectrum) -> list[list]:
    rows = []
    for i, t in enumerate(spectrum):
        rows.append(
            [i, t.quasi_energy, t.avg_energy, t.residual, t.mode.centroid()]
        )
    return rows


def cmd_solve(args) -> int:
    h = _resolve_model(args)
    spectrum = sambe.solve_spectrum(h, args.harmonics, args.tol_deg, timestamp=True)
    out = Path(args.out)
    _write_json(out / "spectrum.json", spectrum.to_json_dict())
    _write_csv(
        out / "spectrum.csv",
        ["state", "eps", "ebar", "residual", "centroid"],
        _spectrum_rows(spectrum),
    )
    print(f"solved {len(spectrum)} states at M={spectrum.metadata['truncation']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    h = _resolve_model(args)
    spec_s = sambe.solve_spectrum(h, args.harmonics, args.tol_deg)
    config = PropagationConfig(steps_per_period=args.steps)
    spec_o = oracle.oracle_spectrum(
        h, spec_s.metadata["truncation"], config, args.tol_deg
    )
    overlaps = analysis.overlap_matrix(spec_s, spec_o)
    from scipy.optimize import linear_sum_assignment

    rows_idx, cols_idx = linear_sum_assignment(1.0 - overlaps)
    rows = []
    worst = 0.0
    for i, j in zip(rows_idx, cols_idx):
        deps = float(
            wrap_distance(spec_s[i].quasi_energy, spec_o[j].quasi_energy, h.omega)
        )
        debar = float(abs(spec_s[i].avg_energy - spec_o[j].avg_energy))
        rows.append(
            [int(i), deps, debar, float(overlaps[i, j])]
        )
        worst = max(worst, deps, debar)
    out = Path(args.out)
    _write_csv(out / "compare.csv", ["state", "delta_eps", "delta_ebar", "overlap"], rows)
    offending = [
        {"state": r[0], "delta_eps": r[1], "delta_ebar": r[2], "overlap": r[3]}
        for r in rows
        if r[1] > args.gate or r[2] > args.gate
    ]
    if offending:
        raise GateError(
            f"cross-method disagreement up to {worst:.3e} exceeds gate {args.gate:.1e}",
            offending,
        )
    print(f"compare ok: worst delta {worst:.3e} within gate {args.gate:.1e}")
    return EXIT_OK


def cmd_variational(args) -> int:
    h = _resolve_model(args)
    if args.harmonics == "auto":
        truncation = sambe.certify_truncation(h)
    else:
        truncation = int(args.harmonics)
    config = VariationalConfig(
        max_iterations=args.max_iters, restarts=args.restarts, seed=args.seed
    )
    result = variational.minimize_ground(h, truncation, config)
    out = Path(args.out)
    _write_json(out / "variational.json", result.to_json_dict())
    _write_csv(
        out / "variational.csv",
        ["state", "eps", "ebar", "residual", "centroid"],
        [[0, result.quasi_energy, result.avg_energy, result.residual,
          result.mode.centroid()]],
    )
    if not result.converged:
        print(
            json.dumps(
                {
                    "kind": "convergence",
                    "message": "variational solver did not converge",
                    "residual": result.residual,
                }
            )
        )
        return EXIT_NONCONVERGENCE
    print(f"variational ground: eps={result.quasi_energy!r} ebar={result.avg_energy!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.builtin:
        raise ModelError("sweep needs --builtin with --param defaults")
    params = _parse_params(args.param)
    if args.sweep_count < 1:
        raise ModelError("--sweep-count must be >= 1")
    if args.sweep_count == 1:
        values = np.array([args.sweep_start])
    else:
        values = np.linspace(args.sweep_start, args.sweep_stop, args.sweep_count)
    records = analysis.sweep_values(
        args.builtin, params, args.sweep_param, values, args.harmonics, args.tol_deg
    )
    rows: list[list] = []
    errors = []
    for record in records:
        if "error" in record:
            errors.append(record)
            continue
        for state, (eps, ebar) in enumerate(zip(record["eps"], record["ebar"])):
            rows.append([record["value"], state, eps, ebar])
    out = Path(args.out)
    _write_csv(out / "sweep.csv", ["lambda", "state", "eps", "ebar"], rows)
    if errors:
        _write_json(out / "sweep_errors.json", {"errors": errors})
    print(f"sweep wrote {len(rows)} rows ({len(errors)} failed points)")
    return EXIT_OK


def cmd_perturb(args) -> int:
    if args.builtin or args.model:
        h = _resolve_model(args)
        if not args.pert_model:
            raise ModelError("perturb needs --pert-model when a model is given")
        v = load_model(args.pert_model)
        strength = args.strength if args.strength is not None else 1e-6 * h.omega
    else:
        h, v, strength = analysis.degeneracy_contrast_fixture()
        if args.strength is not None:
            strength = args.strength
    report = analysis.perturb_and_track(h, v, strength, args.harmonics, args.tol_deg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tracking.csv").write_text(report.to_csv(), encoding="utf-8")
    print(
        f"perturb: min label overlap {report.overlap_label.min():.6f}, "
        f"min q-order overlap {report.overlap_qorder.min():.6f}"
    )
    return EXIT_OK


def _add_model_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--model", help="path to a model JSON file")
    parser.add_argument("--builtin", help="built-in model name")
    parser.add_argument(
        "--param", action="append", default=[], metavar="K=V",
        help="builtin parameter override (repeatable)"
    )
    parser.add_argument(
        "--harmonics", type=_truncation_arg, default="auto", metavar="M|auto"
    )
    parser.add_argument("--tol-deg", type=float, default=None)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floqtriplet",
        description="Floquet eigentriplet solver: quasi-energy plus average energy",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="diagonalize and resolve a spectrum")
    _add_model_arguments(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_compare = sub.add_parser("compare", help="cross-validate against propagation")
    _add_model_arguments(p_compare)
    p_compare.add_argument("--gate", type=float, default=1e-6)
    p_compare.add_argument("--steps", type=int, default=4096)
    p_compare.set_defaults(func=cmd_compare)

    p_var = sub.add_parser("variational", help="variational ground state")
    _add_model_arguments(p_var)
    p_var.add_argument("--max-iters", type=int, default=5000)
    p_var.add_argument("--restarts", type=int, default=8)
    p_var.set_defaults(func=cmd_variational)

    p_sweep = sub.add_parser("sweep", help="parameter sweep with label continuity")
    _add_model_arguments(p_sweep)
    p_sweep.add_argument("--sweep-param", required=True)
    p_sweep.add_argument("--sweep-start", type=float, required=True)
    p_sweep.add_argument("--sweep-stop", type=float, required=True)
    p_sweep.add_argument("--sweep-count", type=int, required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_pert = sub.add_parser("perturb", help="perturbation tracking experiment")
    _add_model_arguments(p_pert)
    p_pert.add_argument("--pert-model", help="path to the perturbation model JSON")
    p_pert.add_argument("--strength", type=float, default=None)
    p_pert.set_defaults(func=cmd_perturb)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ModelError, ValueError) as exc:
        print(json.dumps({"kind": "config", "message": str(exc)}))
        return EXIT_CONFIG
    except GateError as exc:
        print(json.dumps({"kind": "gate", "message": str(exc), "rows": exc.rows}))
        return EXIT_GATE
    except (TruncationError, SolverError, PropagationError) as exc:
        print(json.dumps({"kind": "convergence", "message": str(exc)}))
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
