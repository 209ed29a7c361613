"""Pulse-clocked simulation of an entangled pair analysed by two receivers.

Each receiver is the converter followed by the passive basis choice and the
Z/X analysers (outputs 0 and 3 read the paths, outputs 1 and 2 sit behind the
interfering coupler).  For one pair, the joint probability of every
``(Alice outcome, Bob outcome)`` combination is computed exactly from the
source state; Monte Carlo then only samples pair numbers, outcomes, time
tags and dark counts.

Outcome index per party: ``3 * detector + slot_index`` for the 12 click
outcomes, ``12`` for no click.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..devices import SLOTS, converter_kraus
from ..statekit import KET_0, KET_1, normalize, tensor
from ..stochastics import (
    N_OUTPUTS,
    ClickStream,
    Detector,
    Tally,
    bernoulli_indices,
    coincide,
    draw_pairs_given_any,
    parallel_map,
    substream,
)
from .scenario import Scenario, circuit_transmission

N_OUTCOMES = N_OUTPUTS * len(SLOTS) + 1
NO_CLICK = N_OUTCOMES - 1
#: pulses handled per random substream; fixed so results do not depend on threads
BATCH_PULSES = 500_000_000


def source_state(theta: float) -> np.ndarray:
    """``(|t0 t0> + e^{2i theta} |t1 t1>) / sqrt(2)`` over signal (x) idler."""
    return normalize(tensor(KET_0, KET_0) + np.exp(2j * theta) * tensor(KET_1, KET_1))


def output_povm(phase: float, visibility: float) -> np.ndarray:
    """Path-space POVM of the four receiver outputs (shape ``(4, 2, 2)``).

    Outputs 1/2 project onto ``(|0> +/- e^{-i phase}|1>)/sqrt(2)``; the
    interferometer imperfection scales their coherent part by ``visibility``.
    """
    half = 0.5
    x_plus = np.array([1, np.exp(-1j * phase)]) / np.sqrt(2)
    x_minus = np.array([1, -np.exp(-1j * phase)]) / np.sqrt(2)
    mask = np.array([[1, visibility], [visibility, 1]])
    return half * np.stack(
        [
            np.diag([1.0, 0.0]).astype(complex),
            mask * np.outer(x_plus, x_plus.conj()),
            mask * np.outer(x_minus, x_minus.conj()),
            np.diag([0.0, 1.0]).astype(complex),
        ]
    )


@dataclass(frozen=True)
class Receiver:
    kraus: dict
    phase: float
    visibility: float
    transmission: float
    detector: Detector
    delay_dt_ps: float

    def povm(self) -> np.ndarray:
        """Time-bin-space POVM over the ``N_OUTCOMES`` outcomes."""
        pi = output_povm(self.phase, self.visibility)
        elems = np.zeros((N_OUTCOMES, 2, 2), dtype=complex)
        for d in range(N_OUTPUTS):
            for k, s in enumerate(SLOTS):
                K = self.kraus[s]
                elems[3 * d + k] = self.transmission * K.conj().T @ pi[d] @ K
        elems[NO_CLICK] = np.eye(2) - elems[:NO_CLICK].sum(axis=0)
        return elems


def receivers(sc: Scenario, phase_alice: float | None = None, phase_bob: float | None = None):
    pa = sc.phase_alice if phase_alice is None else phase_alice
    pb = sc.phase_bob if phase_bob is None else phase_bob
    alice = Receiver(
        converter_kraus(sc.converter_alice, sc.channel_alice.arrival_sigma_ps),
        pa,
        sc.interference_visibility_alice,
        circuit_transmission(sc.insertion_loss_alice_db)
        * 10 ** (-sc.channel_alice.loss_db / 10)
        * sc.detector_alice.efficiency,
        sc.detector_alice,
        sc.converter_alice.delay_dt_ps,
    )
    bob = Receiver(
        converter_kraus(sc.converter_bob, sc.channel_bob.arrival_sigma_ps),
        pb,
        sc.interference_visibility_bob,
        circuit_transmission(sc.insertion_loss_bob_db) * 10 ** (-sc.channel_bob.loss_db / 10) * sc.detector_bob.efficiency,
        sc.detector_bob,
        sc.converter_bob.delay_dt_ps,
    )
    return alice, bob


def joint_outcome_table(alice: Receiver, bob: Receiver, theta: float) -> np.ndarray:
    """``P[a, b]`` for one pair; rows Alice outcomes, columns Bob outcomes."""
    psi = source_state(theta)
    rho = np.outer(psi, psi.conj()).reshape(2, 2, 2, 2)
    p = np.einsum("xij,ykl,jlik->xy", alice.povm(), bob.povm(), rho).real
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _party_clicks(outcomes, owners, rx: Receiver, offset: int, n: int, rng):
    hit = outcomes != NO_CLICK
    o = outcomes[hit]
    det = o // 3
    slot = np.asarray(SLOTS)[o % 3]
    sigma = rx.detector.sigma_ps
    tags = slot * rx.delay_dt_ps + (rng.normal(0.0, sigma, o.size) if sigma > 0 else 0.0)
    pulses, dets, all_tags = [owners[hit]], [det], [np.asarray(tags, dtype=float)]
    for d in range(N_OUTPUTS):
        idx = bernoulli_indices(rx.detector.dark_prob, n, rng) + offset
        pulses.append(idx)
        dets.append(np.full(idx.size, d))
        all_tags.append(rng.uniform(-rx.detector.window_ps, rx.detector.window_ps, idx.size))
    return ClickStream.resolve(np.concatenate(pulses), np.concatenate(dets), np.concatenate(all_tags), rng)


def simulate_batch(table: np.ndarray, alice: Receiver, bob: Receiver, mu: float, n: int, offset: int, rng) -> Tally:
    """Run ``n`` pulses starting at global pulse index ``offset``."""
    pair_pulses = bernoulli_indices(-np.expm1(-mu), n, rng) + offset if mu > 0 else np.zeros(0, np.int64)
    k = draw_pairs_given_any(mu, rng, pair_pulses.size) if pair_pulses.size else np.zeros(0, np.int64)
    owners = np.repeat(pair_pulses, k)
    flat = rng.choice(table.size, size=owners.size, p=table.ravel())
    a_out, b_out = np.divmod(flat, N_OUTCOMES)
    a = _party_clicks(a_out, owners, alice, offset, n, rng)
    b = _party_clicks(b_out, owners, bob, offset, n, rng)
    window = max(alice.detector.window_ps, bob.detector.window_ps)
    return coincide(a, b, window, n)


def simulate(sc: Scenario, pulses: int, key: tuple[int, ...], phase_alice=None, phase_bob=None, theta=None, parallel: bool = True) -> Tally:
    """Tally for ``pulses`` pulses, deterministic in ``(sc.seed, key)``.

    Batches run through :func:`parallel_map`; each batch owns substream
    ``(seed, *key, batch)``, so the thread count never changes the result.
    """
    alice, bob = receivers(sc, phase_alice, phase_bob)
    th = sc.source.theta if theta is None else theta
    table = joint_outcome_table(alice, bob, th)
    mu = sc.source.mean_pairs_per_pulse
    starts = list(range(0, int(pulses), BATCH_PULSES))

    def run(i):
        start = starts[i]
        n = min(BATCH_PULSES, int(pulses) - start)
        return simulate_batch(table, alice, bob, mu, n, start, substream(sc.seed, *key, i))

    total = Tally.empty()
    mapper = parallel_map if parallel else lambda f, xs: [f(x) for x in xs]
    for t in mapper(run, range(len(starts))):
        total = total + t
    return total
