"""Monte Carlo layer: pair generation, loss, timing, detection and coincidences.

All sampling takes an explicit ``numpy.random.Generator``.  Independent work
units (fringe points, pulse batches) draw from substreams derived from
``(seed, key...)`` with :func:`substream`, so results do not depend on how the
units are scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .devices import FWHM_TO_SIGMA

N_OUTPUTS = 4


@dataclass(frozen=True)
class PairSource:
    mean_pairs_per_pulse: float
    rep_rate_hz: float = 100e6
    theta: float = 0.0

    def __post_init__(self):
        if self.mean_pairs_per_pulse < 0:
            raise ValueError("mean_pairs_per_pulse must be nonnegative")
        if self.rep_rate_hz <= 0:
            raise ValueError("rep_rate_hz must be positive")

    @property
    def pair_rate_hz(self) -> float:
        return self.mean_pairs_per_pulse * self.rep_rate_hz


@dataclass(frozen=True)
class FiberChannel:
    length_km: float = 0.0
    atten_db_per_km: float = 0.2
    pol_penalty_db: float = 0.0
    arrival_sigma_ps: float = 0.0

    def __post_init__(self):
        for name in ("length_km", "atten_db_per_km", "pol_penalty_db", "arrival_sigma_ps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def loss_db(self) -> float:
        return self.length_km * self.atten_db_per_km + self.pol_penalty_db


@dataclass(frozen=True)
class Detector:
    """SNSPD channel.  ``window_ps`` is the half-width of the coincidence window."""

    efficiency: float = 1.0
    dark_rate_hz: float = 0.0
    jitter_fwhm_ps: float = 0.0
    window_ps: float = 200.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be in [0, 1]")
        if self.dark_rate_hz < 0 or self.jitter_fwhm_ps < 0:
            raise ValueError("dark rate and jitter must be nonnegative")
        if self.window_ps <= 0:
            raise ValueError("window_ps must be positive")

    @property
    def sigma_ps(self) -> float:
        return self.jitter_fwhm_ps / FWHM_TO_SIGMA

    @property
    def dark_prob(self) -> float:
        """Dark-count probability per pulse inside the ``2 * window_ps`` gate."""
        return float(-np.expm1(-self.dark_rate_hz * 2.0 * self.window_ps * 1e-12))


def substream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def thread_count() -> int:
    env = os.environ.get("QCONVSIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items) -> list:
    """Ordered map over ``items``; parallel up to ``QCONVSIM_THREADS`` workers."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def draw_pairs(mu: float, rng: np.random.Generator, size=None):
    """Number of photon pairs in a pulse, Poisson with mean ``mu``."""
    if mu < 0:
        raise ValueError(f"mean pair number must be nonnegative, got {mu}")
    return rng.poisson(mu, size=size)


def draw_pairs_given_any(mu: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Zero-truncated Poisson: pair number in pulses known to hold at least one pair."""
    if mu <= 0:
        raise ValueError("need mu > 0 when at least one pair is required")
    k = np.arange(1, 64)
    log_p = k * np.log(mu) - mu - np.cumsum(np.log(k))
    p = np.exp(log_p)
    p /= p.sum()
    return rng.choice(k, size=size, p=p)


def survival(loss_db: float) -> float:
    if loss_db < 0:
        raise ValueError(f"loss must be nonnegative, got {loss_db} dB")
    return 10.0 ** (-loss_db / 10.0)


def misroute_prob(arrival_sigma_ps: float, edge_offset_ps: float) -> float:
    """Probability that Gaussian timing noise pushes a photon past the switching edge."""
    if arrival_sigma_ps < 0 or edge_offset_ps < 0:
        raise ValueError("sigma and offset must be nonnegative")
    if arrival_sigma_ps == 0:
        return 0.5 if edge_offset_ps == 0 else 0.0
    with np.errstate(over="ignore"):
        z = np.float64(edge_offset_ps) / (np.float64(arrival_sigma_ps) * np.sqrt(2.0))
    return float(0.5 * erfc(z))


def detect(arrival_prob, d: Detector, rng: np.random.Generator, true_time_ps=0.0, size=None):
    """Sample clicks and time tags.

    A click happens with probability ``1 - (1 - eta p)(1 - p_dark)``.  Photon
    clicks are tagged ``true_time + N(0, sigma)``; pure dark clicks get a tag
    uniform in the window.

    Returns
    -------
    clicked : bool array
    tags : float array (NaN where no click)
    """
    if np.any(np.asarray(arrival_prob) < 0) or np.any(np.asarray(arrival_prob) > 1):
        raise ValueError("arrival_prob must be in [0, 1]")
    shape = np.broadcast(np.asarray(arrival_prob), np.asarray(true_time_ps)).shape if size is None else size
    photon = rng.random(shape) < d.efficiency * np.asarray(arrival_prob)
    dark = rng.random(shape) < d.dark_prob
    jitter = rng.normal(0.0, d.sigma_ps, shape) if d.sigma_ps > 0 else np.zeros(shape)
    uniform = rng.uniform(-d.window_ps, d.window_ps, shape)
    tags = np.where(photon, np.asarray(true_time_ps) + jitter, np.where(dark, uniform, np.nan))
    return photon | dark, tags


def bernoulli_indices(p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices in ``[0, n)`` of successes of ``n`` Bernoulli(p) trials (geometric gaps)."""
    if p <= 0 or n <= 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    chunks = []
    last = -1
    block = max(1024, int(1.2 * n * p) + 64)
    while True:
        gaps = rng.geometric(p, size=block)
        idx = last + np.cumsum(gaps, dtype=np.int64)
        if idx[-1] >= n:
            chunks.append(idx[idx < n])
            break
        chunks.append(idx)
        last = int(idx[-1])
    return np.concatenate(chunks)


@dataclass(frozen=True)
class ClickStream:
    """At most one click per pulse for one party: pulse index, detector, time tag."""

    pulse: np.ndarray
    detector: np.ndarray
    tag_ps: np.ndarray

    @classmethod
    def resolve(cls, pulse, detector, tag_ps, rng: np.random.Generator) -> "ClickStream":
        """Keep one click per pulse, chosen uniformly when several detectors fired."""
        pulse = np.asarray(pulse, dtype=np.int64)
        order = np.lexsort((rng.random(pulse.size), pulse))
        pulse, detector, tag_ps = pulse[order], np.asarray(detector)[order], np.asarray(tag_ps)[order]
        _, first = np.unique(pulse, return_index=True)
        return cls(pulse[first], detector[first].astype(np.int8), tag_ps[first].astype(float))

    def singles(self, n_detectors: int = N_OUTPUTS) -> np.ndarray:
        return np.bincount(self.detector, minlength=n_detectors).astype(np.int64)


@dataclass
class Tally:
    singles_a: np.ndarray
    singles_b: np.ndarray
    coincidences: np.ndarray
    accidentals: np.ndarray
    pulses: int

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(
            self.singles_a + other.singles_a,
            self.singles_b + other.singles_b,
            self.coincidences + other.coincidences,
            self.accidentals + other.accidentals,
            self.pulses + other.pulses,
        )

    @classmethod
    def empty(cls, n: int = N_OUTPUTS) -> "Tally":
        z = np.zeros(n, dtype=np.int64)
        return cls(z, z.copy(), np.zeros((n, n), np.int64), np.zeros((n, n), np.int64), 0)

    @property
    def car(self) -> float:
        acc = self.accidentals.sum()
        return float(self.coincidences.sum() / acc) if acc else float("inf")


def _pair_counts(a: ClickStream, b: ClickStream, shift: int, window_ps: float, n: int) -> np.ndarray:
    _, ia, ib = np.intersect1d(a.pulse + shift, b.pulse, assume_unique=True, return_indices=True)
    ok = np.abs(a.tag_ps[ia] - b.tag_ps[ib]) <= window_ps
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (a.detector[ia][ok], b.detector[ib][ok]), 1)
    return counts


def coincide(a: ClickStream, b: ClickStream, window_ps: float, pulses: int, n_detectors: int = N_OUTPUTS) -> Tally:
    """Same-pulse coincidences within ``+/- window_ps``.

    Accidentals are counted the same way after pairing Alice's pulse ``k``
    with Bob's pulse ``k + 1``.
    """
    return Tally(
        a.singles(n_detectors),
        b.singles(n_detectors),
        _pair_counts(a, b, 0, window_ps, n_detectors),
        _pair_counts(a, b, 1, window_ps, n_detectors),
        int(pulses),
    )
