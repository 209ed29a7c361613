"""Single-qubit conversion followed by path tomography."""

from __future__ import annotations

import numpy as np

from ..devices import convert, prepare_time_bin, windowed_qubit
from ..statekit import fidelity
from ..stochastics import substream
from ..tomography import MleConfig, TomoResult, mle_reconstruct, run_tomography
from .scenario import Scenario

#: Preparation-circuit settings (cross fraction, MODL phase) of the six cardinal time-bin states.
CARDINAL_INPUTS = {
    "0": (0.0, 0.0),
    "1": (1.0, 0.0),
    "+": (0.5, 0.0),
    "-": (0.5, np.pi),
    "+i": (0.5, np.pi / 2),
    "-i": (0.5, -np.pi / 2),
}
_TOMO_KEY = 1


def converted_qubit(sc: Scenario, r: float, phi: float) -> np.ndarray:
    """Normalized path state the tomography analyzer sees for a prepared time-bin qubit."""
    tb = prepare_time_bin(r, phi)
    slots = convert(tb, sc.converter_alice, sc.channel_alice.arrival_sigma_ps)
    det = sc.detector_alice
    return windowed_qubit(slots, det.window_ps, det.jitter_fwhm_ps, normalized=True)


def device_fidelities(sc: Scenario, inputs: dict | None = None) -> dict[str, float]:
    """Fidelity of the converted state with the ideal path target, before any sampling."""
    inputs = CARDINAL_INPUTS if inputs is None else inputs
    return {k: fidelity(converted_qubit(sc, r, phi), prepare_time_bin(r, phi)) for k, (r, phi) in inputs.items()}


def run_single_qubit_conversion(
    sc: Scenario,
    inputs: dict | None = None,
    shots: int | None = None,
    noise: bool | None = None,
    repeat: int = 0,
    mle: MleConfig | None = None,
) -> list[tuple[str, TomoResult]]:
    """prepare -> convert -> detect -> sample counts -> MLE -> fidelity, per input state.

    ``repeat`` selects an independent random substream so seed averages can
    be formed without touching the scenario seed.
    """
    inputs = CARDINAL_INPUTS if inputs is None else inputs
    shots = sc.tomography.shots_per_basis if shots is None else shots
    noise = sc.tomography.noise if noise is None else noise
    out = []
    for i, (label, (r, phi)) in enumerate(inputs.items()):
        rng = substream(sc.seed, _TOMO_KEY, repeat, i)
        rho = converted_qubit(sc, r, phi)
        counts = run_tomography(rho, shots, noise, rng)
        out.append((label, mle_reconstruct(counts, mle, target=prepare_time_bin(r, phi))))
    return out


def average_fidelity(results) -> float:
    return float(np.mean([res.fidelity_vs_target for _, res in results]))
