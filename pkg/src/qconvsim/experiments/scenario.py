"""Experiment configuration and its dict/JSON form (unit-suffixed keys)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace

import numpy as np

from ..devices import ConverterModel, DriveWaveform, EosModel
from ..stochastics import N_OUTPUTS, Detector, FiberChannel, PairSource, survival


def visibility_from_interference_er(er_db: float) -> float:
    """Coherence factor left on a path qubit by an analysis UMZI with interference ER ``er_db``.

    The ER is taken to come from equal splitting errors in the two couplers
    of the calibration interferometer, ``ER = 1 / (2p - 1)^2``; only the
    final coupler acts on the converted qubit, which leaves a visibility of
    ``2 sqrt(p (1-p)) = sqrt(1 - 1/ER)``.
    """
    if er_db < 0:
        raise ValueError("interference ER must be nonnegative")
    if np.isinf(er_db):
        return 1.0
    return float(np.sqrt(max(0.0, 1.0 - 10.0 ** (-er_db / 10.0))))


def circuit_transmission(port_loss_db: float, n_outputs: int = N_OUTPUTS) -> float:
    """Total transmission of a receiver whose per-port insertion loss includes the 1-to-n split."""
    return min(1.0, n_outputs * survival(port_loss_db))


IDEAL_PORT_LOSS_DB = float(10 * np.log10(N_OUTPUTS))


@dataclass(frozen=True)
class TomographyPlan:
    shots_per_basis: int = 100_000
    repeats: int = 1
    noise: bool = True


@dataclass(frozen=True)
class FringePlan:
    points: int = 16
    pulses_per_point: int = 10**10
    scan: str = "alice_phase"
    kappa_rad_per_mw: float = 0.1

    def __post_init__(self):
        if self.scan not in ("alice_phase", "source_theta"):
            raise ValueError(f"unknown scan variable {self.scan!r}")
        if self.points < 8:
            raise ValueError("a fringe scan needs at least 8 points")


@dataclass(frozen=True)
class QkdPlan:
    key_bases: str = "both"
    flip_z: bool = False
    flip_x: bool = False

    def __post_init__(self):
        if self.key_bases not in ("both", "Z", "X"):
            raise ValueError(f"key_bases must be 'both', 'Z' or 'X', got {self.key_bases!r}")


@dataclass(frozen=True)
class Scenario:
    source: PairSource
    converter_alice: ConverterModel = field(default_factory=ConverterModel)
    converter_bob: ConverterModel = field(default_factory=ConverterModel)
    channel_alice: FiberChannel = field(default_factory=FiberChannel)
    channel_bob: FiberChannel = field(default_factory=FiberChannel)
    detector_alice: Detector = field(default_factory=Detector)
    detector_bob: Detector = field(default_factory=Detector)
    phase_alice: float = 0.0
    phase_bob: float = 0.0
    interference_er_alice_db: float = np.inf
    interference_er_bob_db: float = np.inf
    insertion_loss_alice_db: float = IDEAL_PORT_LOSS_DB
    insertion_loss_bob_db: float = IDEAL_PORT_LOSS_DB
    pulses: int = 10**9
    seed: int = 0
    name: str = "unnamed"
    tomography: TomographyPlan = field(default_factory=TomographyPlan)
    fringe: FringePlan = field(default_factory=FringePlan)
    qkd: QkdPlan = field(default_factory=QkdPlan)

    def __post_init__(self):
        if self.pulses <= 0:
            raise ValueError("pulses must be positive")

    @property
    def detectors(self) -> tuple[Detector, Detector]:
        return self.detector_alice, self.detector_bob

    @property
    def interference_visibility_alice(self) -> float:
        return visibility_from_interference_er(self.interference_er_alice_db)

    @property
    def interference_visibility_bob(self) -> float:
        return visibility_from_interference_er(self.interference_er_bob_db)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @classmethod
    def ideal(cls, mu: float = 1e-3, **changes) -> "Scenario":
        """Perfect switches and interferometers, lossless receivers, noiseless detectors."""
        return cls(source=PairSource(mu), name="ideal", **changes)


# --- dict form -------------------------------------------------------------

_SOURCE_KEYS = {"mean_pairs_per_pulse": "mean_pairs_per_pulse", "rep_rate_hz": "rep_rate_hz", "theta_rad": "theta"}
_DRIVE_KEYS = {"v0_v": "v0", "v_pi_v": "v_pi", "edge_position_ps": "edge_position_ps", "edge_width_ps": "edge_width_ps"}
_CONVERTER_KEYS = {
    "delay_dt_ps": "delay_dt_ps",
    "compensation_phase_rad": "compensation_phase",
    "path_phase_rad": "path_phase",
    "excess_loss_long_db": "excess_loss_long_db",
    "excess_loss_short_db": "excess_loss_short_db",
}
_CHANNEL_KEYS = {
    "length_km": "length_km",
    "atten_db_per_km": "atten_db_per_km",
    "pol_penalty_db": "pol_penalty_db",
    "arrival_sigma_ps": "arrival_sigma_ps",
}
_DETECTOR_KEYS = {
    "efficiency": "efficiency",
    "dark_rate_hz": "dark_rate_hz",
    "jitter_fwhm_ps": "jitter_fwhm_ps",
    "window_ps": "window_ps",
}
_TOP_KEYS = {
    "phase_alice_rad": "phase_alice",
    "phase_bob_rad": "phase_bob",
    "interference_er_alice_db": "interference_er_alice_db",
    "interference_er_bob_db": "interference_er_bob_db",
    "insertion_loss_alice_db": "insertion_loss_alice_db",
    "insertion_loss_bob_db": "insertion_loss_bob_db",
    "pulses": "pulses",
    "seed": "seed",
    "name": "name",
}


def _pick(d: dict, keys: dict) -> dict:
    return {attr: d[k] for k, attr in keys.items() if k in d}


def _unpick(obj, keys: dict) -> dict:
    return {k: _jsonable(getattr(obj, attr)) for k, attr in keys.items()}


def _jsonable(x):
    if isinstance(x, (float, np.floating)):
        return float(x) if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _converter(d: dict) -> ConverterModel:
    eos = d.get("eos", {})
    drive = DriveWaveform(**_pick(eos.get("drive", {}), _DRIVE_KEYS))
    er = {k: (np.inf if eos.get(k) is None else eos[k]) for k in ("er_through_db", "er_cross_db") if k in eos}
    return ConverterModel(eos=EosModel(drive=drive, **er), **_pick(d, _CONVERTER_KEYS))


def _converter_dict(c: ConverterModel) -> dict:
    return {
        "eos": {
            "er_through_db": _jsonable(c.eos.er_through_db),
            "er_cross_db": _jsonable(c.eos.er_cross_db),
            "drive": _unpick(c.eos.drive, _DRIVE_KEYS),
        },
        **_unpick(c, _CONVERTER_KEYS),
    }


def scenario_from_dict(d: dict) -> Scenario:
    """Build a :class:`Scenario` from its (already schema-validated) dict form.

    A ``null`` extinction ratio means infinite.
    """
    top = _pick(d, _TOP_KEYS)
    for k in ("interference_er_alice_db", "interference_er_bob_db"):
        if k in top and top[k] is None:
            top[k] = np.inf
    dets = d.get("detectors", {})
    return Scenario(
        source=PairSource(**_pick(d["source"], _SOURCE_KEYS)),
        converter_alice=_converter(d.get("converter_alice", {})),
        converter_bob=_converter(d.get("converter_bob", {})),
        channel_alice=FiberChannel(**_pick(d.get("channel_alice", {}), _CHANNEL_KEYS)),
        channel_bob=FiberChannel(**_pick(d.get("channel_bob", {}), _CHANNEL_KEYS)),
        detector_alice=Detector(**_pick(dets.get("alice", {}), _DETECTOR_KEYS)),
        detector_bob=Detector(**_pick(dets.get("bob", {}), _DETECTOR_KEYS)),
        tomography=TomographyPlan(**d.get("tomography", {})),
        fringe=FringePlan(**d.get("fringe", {})),
        qkd=QkdPlan(**d.get("qkd", {})),
        **top,
    )


def scenario_to_dict(s: Scenario) -> dict:
    return {
        **_unpick(s, _TOP_KEYS),
        "source": _unpick(s.source, _SOURCE_KEYS),
        "converter_alice": _converter_dict(s.converter_alice),
        "converter_bob": _converter_dict(s.converter_bob),
        "channel_alice": _unpick(s.channel_alice, _CHANNEL_KEYS),
        "channel_bob": _unpick(s.channel_bob, _CHANNEL_KEYS),
        "detectors": {
            "alice": _unpick(s.detector_alice, _DETECTOR_KEYS),
            "bob": _unpick(s.detector_bob, _DETECTOR_KEYS),
        },
        "tomography": dataclasses.asdict(s.tomography),
        "fringe": dataclasses.asdict(s.fringe),
        "qkd": dataclasses.asdict(s.qkd),
    }
