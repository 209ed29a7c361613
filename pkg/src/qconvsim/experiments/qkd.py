"""BBM92 with passive basis choice on both receivers."""

from __future__ import annotations

from dataclasses import dataclass

from ..stochastics import Tally
from .fringes import FringeFit
from .scenario import Scenario
from .twophoton import simulate

#: Receiver outputs per basis, in bit order (bit 0, bit 1).
BASIS_OUTPUTS = {"Z": (0, 3), "X": (1, 2)}
_QKD_KEY = 5


class NoKeyError(RuntimeError):
    pass


@dataclass(frozen=True)
class BasisStats:
    sifted: int
    errors: int

    @property
    def qber(self) -> float:
        return self.errors / self.sifted if self.sifted else float("nan")


@dataclass(frozen=True)
class QkdReport:
    sifted: int
    errors: int
    elapsed_s: float
    per_basis: dict
    car: float
    key_bases: str = "both"

    @property
    def qber(self) -> float:
        return self.errors / self.sifted

    @property
    def raw_key_rate(self) -> float:
        """Sifted bits per second."""
        return self.sifted / self.elapsed_s

    @property
    def qber_x(self) -> float:
        return self.per_basis["X"].qber

    @property
    def qber_z(self) -> float:
        return self.per_basis["Z"].qber


def sift(tally: Tally, flip_z: bool = False, flip_x: bool = False) -> dict[str, BasisStats]:
    """Matched-basis coincidences and bit errors per basis.

    A flip flag inverts Bob's bit in that basis, for anti-correlated setups.
    """
    out = {}
    c = tally.coincidences
    for basis, flip in (("Z", flip_z), ("X", flip_x)):
        o0, o1 = BASIS_OUTPUTS[basis]
        same = c[o0, o0] + c[o1, o1]
        diff = c[o0, o1] + c[o1, o0]
        sifted = int(same + diff)
        out[basis] = BasisStats(sifted, int(same if flip else diff))
    return out


def run_bbm92(sc: Scenario, pulses: int | None = None) -> QkdReport:
    pulses = sc.pulses if pulses is None else int(pulses)
    tally = simulate(sc, pulses, (_QKD_KEY,))
    stats = sift(tally, sc.qkd.flip_z, sc.qkd.flip_x)
    used = ("Z", "X") if sc.qkd.key_bases == "both" else (sc.qkd.key_bases,)
    sifted = sum(stats[b].sifted for b in used)
    errors = sum(stats[b].errors for b in used)
    if sifted == 0:
        raise NoKeyError("no key: zero sifted bits")
    return QkdReport(sifted, errors, pulses / sc.source.rep_rate_hz, stats, tally.car, sc.qkd.key_bases)


def qber_visibility_consistency(report: QkdReport, fit: FringeFit) -> float:
    """``|QBER_X - (1 - V) / 2|``: the X error rate a fringe of visibility V predicts."""
    return float(abs(report.qber_x - (1.0 - fit.visibility) / 2.0))


def expected_qber_from_visibility(v: float) -> float:
    return float((1.0 - v) / 2.0)

