"""Transfer-matrix models of the on-chip components and the time-bin/path converter.

Conventions
-----------
* Beam splitters carry ``i`` on the cross terms.
* A TO-MZI is two 50:50 couplers around an internal phase on the upper arm.
* In the converter the EOS sends the early bin ``t0`` into the long arm, which
  becomes path ``|0>``, and the late bin ``t1`` into the short arm, path ``|1>``.
* Photons that the EOS routes into the wrong arm leave the MODL one ``dt``
  early (``t0`` through the short arm, ending on path 1) or one ``dt`` late
  (``t1`` through the long arm, ending on path 0).  They are kept as
  incoherent populations in separate time slots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .statekit import density_of, is_unitary

#: FWHM / sigma for a Gaussian.
FWHM_TO_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))

SLOTS = (-1, 0, 1)
EARLY, ALIGNED, LATE = SLOTS


def _check_fraction(r: float, name: str = "r") -> None:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {r}")


def db_to_transmission(loss_db: float) -> float:
    if loss_db < 0:
        raise ValueError(f"loss must be nonnegative, got {loss_db} dB")
    return 10.0 ** (-loss_db / 10.0)


def bs_transfer(r: float) -> np.ndarray:
    """Lossless coupler with cross power fraction ``r``."""
    _check_fraction(r)
    t, x = np.sqrt(1.0 - r), np.sqrt(r)
    return np.array([[t, 1j * x], [1j * x, t]], dtype=complex)


def phase_transfer(phi_upper: float = 0.0, phi_lower: float = 0.0) -> np.ndarray:
    return np.diag([np.exp(1j * phi_upper), np.exp(1j * phi_lower)])


def lossy(transfer: np.ndarray, loss_db: float) -> np.ndarray:
    """Scale a lossless transfer by the amplitude transmissivity of ``loss_db``."""
    return np.sqrt(db_to_transmission(loss_db)) * np.asarray(transfer, dtype=complex)


@dataclass(frozen=True)
class MziSetting:
    cross_fraction: float

    def __post_init__(self):
        _check_fraction(self.cross_fraction, "cross_fraction")

    @property
    def internal_phase(self) -> float:
        # cross power of BS(1/2) D(phase) BS(1/2) is cos^2(phase / 2)
        # atan2 form stays accurate near r = 1, where arccos(sqrt(r)) is ill-conditioned
        r = self.cross_fraction
        return float(2.0 * np.arctan2(np.sqrt(1.0 - r), np.sqrt(r)))

    @classmethod
    def through(cls) -> "MziSetting":
        return cls(0.0)

    @classmethod
    def balanced(cls) -> "MziSetting":
        return cls(0.5)


def mzi_transfer(s: MziSetting) -> np.ndarray:
    half = bs_transfer(0.5)
    return half @ phase_transfer(s.internal_phase, 0.0) @ half


@dataclass(frozen=True)
class TopsSetting:
    """Thermo-optic phase shifter.  ``kappa`` maps heater power (mW) to phase linearly."""

    phase: float = 0.0
    heater_power_mw: float | None = None

    @classmethod
    def from_power(cls, heater_power_mw: float, kappa_rad_per_mw: float) -> "TopsSetting":
        return cls(phase=kappa_rad_per_mw * heater_power_mw, heater_power_mw=heater_power_mw)

    @property
    def reduced_phase(self) -> float:
        return float(np.mod(self.phase, 2 * np.pi))


def prepare_time_bin(r: float, phi: float) -> np.ndarray:
    """Time-bin qubit ``sqrt(1-r)|t0> + e^{i phi} sqrt(r)|t1>`` from the preparation circuit.

    The TO-MZI cross port feeds the long MODL arm (the late bin); the MODL
    TOPS adds ``phi`` to that arm.  The MZI's common phase is removed.
    """
    s = MziSetting(r)
    out = mzi_transfer(s) @ np.array([1.0, 0.0], dtype=complex)
    common = 1j * np.exp(0.5j * s.internal_phase)
    return np.array([out[0], out[1] * np.exp(1j * phi)]) / common


def eos_crosstalk(er_db: float) -> float:
    """Power fraction sent to the wrong port by a switch with extinction ratio ``er_db``."""
    if er_db < 0:
        raise ValueError(f"extinction ratio must be nonnegative, got {er_db} dB")
    if np.isinf(er_db):
        return 0.0
    return float(1.0 / (1.0 + 10.0 ** (er_db / 10.0)))


@dataclass(frozen=True)
class DriveWaveform:
    """Square-wave EOS drive.  Only the edge geometry affects routing."""

    v0: float = 0.0
    v_pi: float = 3.0
    edge_position_ps: float = 50.0
    edge_width_ps: float = 20.0

    def __post_init__(self):
        if self.v_pi <= 0:
            raise ValueError("v_pi must be positive")
        if self.edge_width_ps < 0:
            raise ValueError("edge_width_ps must be nonnegative")

    def voltage(self, t_ps):
        """Drive voltage at ``t_ps`` (relative to the ``t0`` bin centre), linear edge."""
        t = np.asarray(t_ps, dtype=float)
        if self.edge_width_ps == 0:
            frac = (t >= self.edge_position_ps).astype(float)
        else:
            frac = np.clip((t - self.edge_position_ps) / self.edge_width_ps + 0.5, 0.0, 1.0)
        return self.v0 + self.v_pi * frac


@dataclass(frozen=True)
class EosModel:
    er_through_db: float = np.inf
    er_cross_db: float = np.inf
    drive: DriveWaveform = field(default_factory=DriveWaveform)

    def __post_init__(self):
        if self.er_through_db < 0 or self.er_cross_db < 0:
            raise ValueError("extinction ratios must be nonnegative")

    @property
    def crosstalk_through(self) -> float:
        return eos_crosstalk(self.er_through_db)

    @property
    def crosstalk_cross(self) -> float:
        return eos_crosstalk(self.er_cross_db)


@dataclass(frozen=True)
class ConverterModel:
    """Time-bin to path converter: EOS followed by matched delay lines.

    ``path_phase`` is the uncompensated phase of the short arm relative to
    the long arm; the TOPS subtracts ``compensation_phase``.
    """

    eos: EosModel = field(default_factory=EosModel)
    delay_dt_ps: float = 100.0
    compensation_phase: float = 0.0
    path_phase: float = 0.0
    excess_loss_long_db: float = 0.0
    excess_loss_short_db: float = 0.0

    def __post_init__(self):
        if self.delay_dt_ps <= 0:
            raise ValueError("delay_dt_ps must be positive")
        if self.excess_loss_long_db < 0 or self.excess_loss_short_db < 0:
            raise ValueError("excess losses must be nonnegative")
        d = self.eos.drive
        if not d.edge_width_ps < self.delay_dt_ps:
            raise ValueError("switching edge must be shorter than the bin separation")
        if not 0.0 <= d.edge_position_ps <= self.delay_dt_ps:
            raise ValueError("switching edge must sit between the two bins")

    @property
    def residual_phase(self) -> float:
        return self.path_phase - self.compensation_phase

    def edge_margins_ps(self) -> tuple[float, float]:
        """Distance from each bin centre to the nearest end of the switching edge."""
        d = self.eos.drive
        half = 0.5 * d.edge_width_ps
        return (d.edge_position_ps - half, self.delay_dt_ps - d.edge_position_ps - half)

    def routing_errors(self, arrival_sigma_ps: float = 0.0) -> tuple[float, float]:
        """Wrong-arm probabilities for ``t0`` and ``t1``: finite ER plus timing misroutes."""
        from .stochastics import misroute_prob

        m0, m1 = (misroute_prob(arrival_sigma_ps, max(off, 0.0)) for off in self.edge_margins_ps())
        ct, cx = self.eos.crosstalk_through, self.eos.crosstalk_cross
        return ct * (1 - m0) + (1 - ct) * m0, cx * (1 - m1) + (1 - cx) * m1


def converter_kraus(m: ConverterModel, arrival_sigma_ps: float = 0.0) -> dict[int, np.ndarray]:
    """Slot-resolved operators mapping time-bin amplitudes to path amplitudes.

    Returns ``{slot: K}`` with ``K`` acting on ``(t0, t1)`` and producing
    ``(path 0, path 1)``.  ``sum K^dagger K`` falls short of the identity by
    the excess losses only.
    """
    e0, e1 = m.routing_errors(arrival_sigma_ps)
    a_long = np.sqrt(db_to_transmission(m.excess_loss_long_db))
    a_short = np.sqrt(db_to_transmission(m.excess_loss_short_db))
    aligned = np.diag([np.sqrt(1 - e0) * a_long, np.sqrt(1 - e1) * a_short * np.exp(1j * m.residual_phase)])
    early = np.zeros((2, 2), dtype=complex)
    early[1, 0] = np.sqrt(e0) * a_short
    late = np.zeros((2, 2), dtype=complex)
    late[0, 1] = np.sqrt(e1) * a_long
    return {EARLY: early, ALIGNED: aligned.astype(complex), LATE: late}


@dataclass(frozen=True)
class SlotState:
    """Subnormalized qubit state split over the early/aligned/late output slots.

    ``blocks[k]`` is the 2x2 block for ``SLOTS[k]``; there is never coherence
    between slots.  The trace deficit is photon loss.
    """

    blocks: np.ndarray
    delay_dt_ps: float

    def block(self, slot: int) -> np.ndarray:
        return self.blocks[SLOTS.index(slot)]

    @property
    def aligned(self) -> np.ndarray:
        return self.block(ALIGNED)

    @property
    def matrix(self) -> np.ndarray:
        """6x6 matrix over ``qubit (x) slot`` (index ``3 * qubit + slot_index``)."""
        out = np.zeros((2, 3, 2, 3), dtype=complex)
        for k in range(3):
            out[:, k, :, k] = self.blocks[k]
        return out.reshape(6, 6)

    @property
    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks))

    def slot_populations(self) -> dict[int, float]:
        return {s: float(np.trace(b).real) for s, b in zip(SLOTS, self.blocks)}


def _as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return density_of(state) if state.ndim == 1 else state


def convert(tb, m: ConverterModel, arrival_sigma_ps: float = 0.0) -> SlotState:
    """Send a time-bin qubit (vector or density matrix) through the converter."""
    rho = _as_density(tb)
    ks = converter_kraus(m, arrival_sigma_ps)
    blocks = np.stack([ks[s] @ rho @ ks[s].conj().T for s in SLOTS])
    return SlotState(blocks, m.delay_dt_ps)


def reverse_convert(path_state, m: ConverterModel) -> SlotState:
    """Run the converter backwards: path qubit in, time-bin qubit out.

    Light retraces the delay lines, so path 0 (long arm) meets the switch in
    the ``t0`` slot and path 1 in ``t1``.  Photons the EOS misroutes leave by
    the unused switch port and are lost, so the early/late slots stay empty.
    """
    rho = _as_density(path_state)
    e0, e1 = m.routing_errors()
    a_long = np.sqrt(db_to_transmission(m.excess_loss_long_db))
    a_short = np.sqrt(db_to_transmission(m.excess_loss_short_db))
    k = np.diag([np.sqrt(1 - e0) * a_long, np.sqrt(1 - e1) * a_short * np.exp(1j * m.residual_phase)])
    blocks = np.zeros((3, 2, 2), dtype=complex)
    blocks[SLOTS.index(ALIGNED)] = k @ rho @ k.conj().T
    return SlotState(blocks, m.delay_dt_ps)


def slot_acceptance(offset_ps: float, window_ps: float, jitter_fwhm_ps: float) -> float:
    """Probability that a photon displaced by ``offset_ps`` lands inside ``+/- window_ps``."""
    sigma = jitter_fwhm_ps / FWHM_TO_SIGMA
    if sigma == 0:
        return float(abs(offset_ps) <= window_ps)
    return float(ndtr((window_ps - offset_ps) / sigma) - ndtr((-window_ps - offset_ps) / sigma))


def windowed_qubit(s: SlotState, window_ps: float, jitter_fwhm_ps: float, normalized: bool = False) -> np.ndarray:
    """Path-qubit density matrix seen by a detector that cannot resolve the slots.

    Leaked photons inside the window add their (diagonal) populations to the
    aligned block with weight ``slot_acceptance(dt, window, jitter)``.
    """
    if window_ps <= 0:
        raise ValueError("window_ps must be positive")
    w = slot_acceptance(s.delay_dt_ps, window_ps, jitter_fwhm_ps)
    leak = s.block(EARLY) + s.block(LATE)
    rho = s.aligned + w * np.diag(np.diag(leak).real)
    if normalized:
        tr = np.trace(rho).real
        if tr <= 0:
            raise ValueError("no photons inside the detection window")
        rho = rho / tr
    return rho


def is_lossless(transfer, atol: float = 1e-9) -> bool:
    return is_unitary(transfer, atol)
