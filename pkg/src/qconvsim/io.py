"""Scenario files, counts files and report documents (JSON), plus fringe CSV."""

from __future__ import annotations

import hashlib
import io
import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .experiments.scenario import Scenario, scenario_from_dict, scenario_to_dict
from .tomography import BASES, LABELS, CountSet

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}
_ER = {"type": ["number", "null"], "minimum": 0}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_CONVERTER = _obj(
    {
        "eos": _obj(
            {
                "er_through_db": _ER,
                "er_cross_db": _ER,
                "drive": _obj(
                    {"v0_v": _NUM, "v_pi_v": _POS, "edge_position_ps": _NONNEG, "edge_width_ps": _NONNEG}
                ),
            }
        ),
        "delay_dt_ps": _POS,
        "compensation_phase_rad": _NUM,
        "path_phase_rad": _NUM,
        "excess_loss_long_db": _NONNEG,
        "excess_loss_short_db": _NONNEG,
    }
)
_CHANNEL = _obj({"length_km": _NONNEG, "atten_db_per_km": _NONNEG, "pol_penalty_db": _NONNEG, "arrival_sigma_ps": _NONNEG})
_DETECTOR = _obj(
    {
        "efficiency": {"type": "number", "minimum": 0, "maximum": 1},
        "dark_rate_hz": _NONNEG,
        "jitter_fwhm_ps": _NONNEG,
        "window_ps": _POS,
    }
)

SCENARIO_SCHEMA = _obj(
    {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "pulses": {"type": "integer", "minimum": 1},
        "source": _obj(
            {"mean_pairs_per_pulse": _NONNEG, "rep_rate_hz": _POS, "theta_rad": _NUM},
            required=["mean_pairs_per_pulse"],
        ),
        "converter_alice": _CONVERTER,
        "converter_bob": _CONVERTER,
        "channel_alice": _CHANNEL,
        "channel_bob": _CHANNEL,
        "detectors": _obj({"alice": _DETECTOR, "bob": _DETECTOR}),
        "phase_alice_rad": _NUM,
        "phase_bob_rad": _NUM,
        "interference_er_alice_db": _ER,
        "interference_er_bob_db": _ER,
        "insertion_loss_alice_db": _NONNEG,
        "insertion_loss_bob_db": _NONNEG,
        "tomography": _obj(
            {
                "shots_per_basis": {"type": "integer", "minimum": 1},
                "repeats": {"type": "integer", "minimum": 1},
                "noise": {"type": "boolean"},
            }
        ),
        "fringe": _obj(
            {
                "points": {"type": "integer", "minimum": 8},
                "pulses_per_point": {"type": "integer", "minimum": 1},
                "scan": {"enum": ["alice_phase", "source_theta"]},
                "kappa_rad_per_mw": _POS,
            }
        ),
        "qkd": _obj(
            {"key_bases": {"enum": ["both", "Z", "X"]}, "flip_z": {"type": "boolean"}, "flip_x": {"type": "boolean"}}
        ),
    },
    required=["seed", "pulses", "source"],
)

COUNTS_SCHEMA = _obj(
    {
        "counts": {
            "type": "object",
            "properties": {k: {"type": "integer", "minimum": 0} for k in LABELS},
            "additionalProperties": False,
        },
        "totals": {
            "type": "object",
            "properties": {b: {"type": "integer", "minimum": 0} for b in BASES},
            "additionalProperties": False,
        },
        "target": {
            "type": "array",
            "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            "minItems": 2,
            "maxItems": 2,
        },
    },
    required=["counts"],
)


class SchemaError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _path(err) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def schema_errors(doc, schema) -> list[str]:
    validator = jsonschema.Draft202012Validator(schema)
    errs = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [f"{_path(e)}: {e.message}" for e in errs]


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def validate_scenario_dict(doc) -> list[str]:
    """All violations (schema first, then model invariants such as edge geometry)."""
    errors = schema_errors(doc, SCENARIO_SCHEMA)
    if errors:
        return errors
    try:
        scenario_from_dict(doc)
    except (TypeError, ValueError) as exc:
        return [f"<model>: {exc}"]
    return []


def load_scenario(path) -> Scenario:
    doc = read_json(path)
    errors = validate_scenario_dict(doc)
    if errors:
        raise SchemaError(errors)
    return scenario_from_dict(doc)


def shipped_scenario_path(name: str = "calibrated") -> Path:
    """Path of a scenario shipped with the package: ``calibrated`` or ``calibrated_fiber``."""
    return Path(str(resources.files("qconvsim") / "scenarios" / f"{name}.json"))


def load_shipped(name: str = "calibrated") -> Scenario:
    return load_scenario(shipped_scenario_path(name))


def scenario_hash(sc: Scenario) -> str:
    canon = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load_counts(path) -> tuple[CountSet, np.ndarray | None]:
    doc = read_json(path)
    errors = schema_errors(doc, COUNTS_SCHEMA)
    if errors:
        raise SchemaError(errors)
    counts = CountSet(doc["counts"], doc.get("totals"))
    target = doc.get("target")
    if target is not None:
        target = np.array([complex(re, im) for re, im in target])
    return counts, target


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def make_report(kind: str, sc: Scenario | None, results: dict, wall_clock_s: float, status="ok", diagnostic=None) -> dict:
    return {
        "tool_version": __version__,
        "experiment": kind,
        "scenario_hash": None if sc is None else scenario_hash(sc),
        "seed": None if sc is None else sc.seed,
        "status": status,
        "diagnostic": diagnostic,
        "results": results,
        "wall_clock_s": wall_clock_s,
    }


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True, default=_plain) + "\n"


def fringe_csv(dataset) -> str:
    """``scan_value_rad,coincidences,stderr`` rows; ``repr`` floats keep it locale independent."""
    buf = io.StringIO()
    buf.write("scan_value_rad,coincidences,stderr\n")
    for x, c, e in dataset.rows():
        buf.write(f"{x!r},{c},{e!r}\n")
    return buf.getvalue()
