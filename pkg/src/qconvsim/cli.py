"""Command-line entry point.

Exit codes: 0 ok, 1 usage, 2 schema, 3 runtime.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from . import io
from .devices import convert, prepare_time_bin, windowed_qubit
from .experiments import (
    CARDINAL_INPUTS,
    bell_check,
    fit_visibility,
    run_bbm92,
    run_fringe_scan,
    run_single_qubit_conversion,
)
from .statekit import fidelity
from .tomography import mle_reconstruct

EXIT_OK, EXIT_USAGE, EXIT_SCHEMA, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qconvsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("path")

    r = sub.add_parser("run", help="run an experiment on a scenario")
    r.add_argument("experiment", choices=["tomo", "fringe", "qkd", "convert"])
    r.add_argument("scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--fringe-csv")
    r.add_argument("--pulses", type=int, help="QKD pulses, or pulses per fringe point")
    r.add_argument("--scan", choices=["alice_phase", "source_theta"])
    r.add_argument("--phi-b", type=float, help="Bob's analysis phase for the fringe scan (rad)")
    r.add_argument("--repeats", type=int, help="tomography repeats to average over")
    r.add_argument("--quiet", action="store_true")

    t = sub.add_parser("tomo-standalone", help="linear + MLE tomography on a counts file")
    t.add_argument("counts")
    t.add_argument("--out")
    t.add_argument("--quiet", action="store_true")
    return p


def _emit(report: dict, out: str | None, quiet: bool) -> None:
    text = io.dumps(report)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if not quiet:
        sys.stdout.write(text)


def _tomo(sc, args) -> dict:
    repeats = args.repeats or sc.tomography.repeats
    per_state: dict[str, list[float]] = {k: [] for k in CARDINAL_INPUTS}
    first = None
    for rep in range(repeats):
        results = run_single_qubit_conversion(sc, repeat=rep)
        first = first or results
        for label, res in results:
            per_state[label].append(res.fidelity_vs_target)
    means = {k: float(np.mean(v)) for k, v in per_state.items()}
    return {
        "shots_per_basis": sc.tomography.shots_per_basis,
        "repeats": repeats,
        "states": {
            label: {
                "fidelity_mean": means[label],
                "fidelity_min": float(np.min(per_state[label])),
                "rho_rec": io.matrix_to_json(res.rho_rec),
            }
            for label, res in first
        },
        "average_fidelity": float(np.mean(list(means.values()))),
    }


def _fringe(sc, args):
    ds = run_fringe_scan(sc, scan=args.scan, phi_b=args.phi_b)
    fit = fit_visibility(ds)
    results = {
        "scan": ds.scan,
        "fixed": ds.fixed,
        "points": [{"scan_value_rad": x, "coincidences": c, "stderr": e} for x, c, e in ds.rows()],
        "fit": {
            "amplitude": fit.amplitude,
            "visibility": fit.visibility,
            "visibility_stderr": fit.visibility_stderr,
            "phase_offset_rad": fit.phase_offset,
            "residual": fit.residual,
        },
        "bell_violation_possible": bell_check(fit),
    }
    return results, ds


def _qkd(sc, args) -> dict:
    rep = run_bbm92(sc)
    return {
        "qber": rep.qber,
        "raw_key_rate": rep.raw_key_rate,
        "sifted_bits": rep.sifted,
        "error_bits": rep.errors,
        "elapsed_s": rep.elapsed_s,
        "key_bases": rep.key_bases,
        "car": rep.car,
        "per_basis": {b: {"sifted": s.sifted, "errors": s.errors, "qber": s.qber} for b, s in rep.per_basis.items()},
    }


def _convert(sc, args) -> dict:
    det, m = sc.detector_alice, sc.converter_alice
    out = {}
    for label, (r, phi) in CARDINAL_INPUTS.items():
        tb = prepare_time_bin(r, phi)
        slots = convert(tb, m, sc.channel_alice.arrival_sigma_ps)
        rho = windowed_qubit(slots, det.window_ps, det.jitter_fwhm_ps, normalized=True)
        out[label] = {
            "slot_populations": {str(k): v for k, v in slots.slot_populations().items()},
            "windowed_fidelity": fidelity(rho, tb),
        }
    return {"states": out}


def _run(args) -> int:
    try:
        sc = io.load_scenario(args.scenario)
    except io.SchemaError as exc:
        _emit(io.make_report(args.experiment, None, {}, 0.0, "schema_error", exc.errors), args.out, args.quiet)
        return EXIT_SCHEMA
    except (OSError, ValueError) as exc:
        _emit(io.make_report(args.experiment, None, {}, 0.0, "error", str(exc)), args.out, args.quiet)
        return EXIT_SCHEMA
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    if args.pulses is not None:
        sc = replace(sc, pulses=args.pulses, fringe=replace(sc.fringe, pulses_per_point=args.pulses))
    start = time.perf_counter()
    ds = None
    try:
        if args.experiment == "tomo":
            results = _tomo(sc, args)
        elif args.experiment == "fringe":
            results, ds = _fringe(sc, args)
        elif args.experiment == "qkd":
            results = _qkd(sc, args)
        else:
            results = _convert(sc, args)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        report = io.make_report(args.experiment, sc, {}, time.perf_counter() - start, "error", f"{type(exc).__name__}: {exc}")
        _emit(report, args.out, args.quiet)
        return EXIT_RUNTIME
    _emit(io.make_report(args.experiment, sc, results, time.perf_counter() - start), args.out, args.quiet)
    if args.fringe_csv and ds is not None:
        with open(args.fringe_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(io.fringe_csv(ds))
    return EXIT_OK


def _tomo_standalone(args) -> int:
    start = time.perf_counter()
    try:
        counts, target = io.load_counts(args.counts)
    except io.SchemaError as exc:
        _emit(io.make_report("tomo-standalone", None, {}, 0.0, "schema_error", exc.errors), args.out, args.quiet)
        return EXIT_SCHEMA
    except (OSError, ValueError) as exc:
        _emit(io.make_report("tomo-standalone", None, {}, 0.0, "error", str(exc)), args.out, args.quiet)
        return EXIT_SCHEMA
    try:
        res = mle_reconstruct(counts, target=target)
    except Exception as exc:  # noqa: BLE001
        _emit(io.make_report("tomo-standalone", None, {}, time.perf_counter() - start, "error", str(exc)), args.out, args.quiet)
        return EXIT_RUNTIME
    results = {
        "linear": {"rho": io.matrix_to_json(res.rho_linear), "physical": res.linear_physical},
        "mle": {"rho": io.matrix_to_json(res.rho_rec), "likelihood": res.likelihood, "evaluations": res.iterations},
        "fidelity": res.fidelity_vs_target,
    }
    _emit(io.make_report("tomo-standalone", None, results, time.perf_counter() - start), args.out, args.quiet)
    return EXIT_OK


def _validate(args) -> int:
    try:
        doc = io.read_json(args.path)
    except (OSError, ValueError) as exc:
        print(f"cannot read {args.path}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    errors = io.validate_scenario_dict(doc)
    for e in errors:
        print(e)
    if not errors:
        print("ok")
    return EXIT_SCHEMA if errors else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _validate(args)
    if args.command == "run":
        return _run(args)
    return _tomo_standalone(args)


if __name__ == "__main__":
    sys.exit(main())
