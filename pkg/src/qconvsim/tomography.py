"""Single-qubit path tomography: analyzer settings, linear inversion and MLE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .devices import MziSetting, mzi_transfer, phase_transfer
from .statekit import (
    StokesVector,
    density_from_stokes,
    fidelity,
    is_physical,
    stokes_of,
)

BASES = ("Z", "X", "Y")
#: Projector labels per basis, in analyzer port order (port 0, port 1).
PORT_LABELS = {"Z": ("0", "1"), "X": ("+", "-"), "Y": ("+i", "-i")}
LABELS = ("0", "1", "+", "-", "+i", "-i")
PROB_FLOOR = 1e-12


class IncompleteTomographyError(ValueError):
    pass


class MleConvergenceError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class MeasSetting:
    basis: str
    mzi: MziSetting
    tops_phase: float


_TABLE = {
    "Z": (MziSetting.through(), 0.0),
    "X": (MziSetting.balanced(), 0.0),
    "Y": (MziSetting.balanced(), np.pi / 2),
}


def setting_for(basis: str) -> MeasSetting:
    """Analyzer configuration (TO-MZI splitting, MODL TOPS phase) for a basis."""
    if basis not in _TABLE:
        raise ValueError(f"unknown basis {basis!r}; expected one of {BASES}")
    mzi, phase = _TABLE[basis]
    return MeasSetting(basis, mzi, phase)


def analyzer(s: MeasSetting) -> np.ndarray:
    # the MODL TOPS sits on the long arm (path 0)
    return mzi_transfer(s.mzi) @ phase_transfer(s.tops_phase, 0.0)


def projector_states(s: MeasSetting) -> tuple[np.ndarray, np.ndarray]:
    """States projected onto by analyzer ports 0 and 1."""
    u = analyzer(s)
    return u.conj()[0], u.conj()[1]


def expected_probs(rho, s: MeasSetting) -> tuple[float, float]:
    u = analyzer(s)
    out = u @ np.asarray(rho, dtype=complex) @ u.conj().T
    p = np.clip(np.diag(out).real, 0.0, None)
    p = p / p.sum()
    return float(p[0]), float(p[1])


def _all_projectors() -> dict[str, np.ndarray]:
    out = {}
    for b in BASES:
        for label, vec in zip(PORT_LABELS[b], projector_states(setting_for(b))):
            out[label] = np.outer(vec, vec.conj())
    return out


PROJECTORS = _all_projectors()


@dataclass(frozen=True)
class CountSet:
    """Counts for the six cardinal projectors.

    Per-basis totals default to the sum of the two ports; explicit totals must
    agree with that sum.
    """

    counts: dict
    totals: dict = field(default=None)

    def __post_init__(self):
        counts = {k: int(self.counts.get(k, 0)) for k in LABELS}
        if any(v < 0 for v in counts.values()):
            raise ValueError("counts must be nonnegative")
        sums = {b: counts[PORT_LABELS[b][0]] + counts[PORT_LABELS[b][1]] for b in BASES}
        if self.totals is not None:
            for b, t in self.totals.items():
                if int(t) != sums[b]:
                    raise ValueError(f"basis {b}: total {t} != port sum {sums[b]}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "totals", sums)

    @classmethod
    def from_sequence(cls, seq) -> "CountSet":
        return cls(dict(zip(LABELS, seq)))

    def as_array(self) -> np.ndarray:
        return np.array([self.counts[k] for k in LABELS], dtype=float)

    def basis_totals(self) -> np.ndarray:
        """Per-projector total of the basis it belongs to."""
        return np.array([self.totals[b] for b in BASES for _ in range(2)], dtype=float)

    def require_complete(self) -> None:
        missing = [b for b in BASES if self.totals[b] <= 0]
        if missing:
            raise IncompleteTomographyError(f"incomplete tomography: no counts in basis {', '.join(missing)}")


def stokes_from_counts(c: CountSet) -> StokesVector:
    c.require_complete()
    n, t = c.counts, c.totals
    return StokesVector(
        1.0,
        (n["+"] - n["-"]) / t["X"],
        (n["+i"] - n["-i"]) / t["Y"],
        (n["0"] - n["1"]) / t["Z"],
    )


def linear_reconstruct(c: CountSet) -> tuple[np.ndarray, bool]:
    """Stokes inversion; the flag reports whether the result is a valid state."""
    s = stokes_from_counts(c)
    rho = density_from_stokes(s)
    return rho, is_physical(rho)


def rho_from_t(t) -> np.ndarray:
    t0, t1, t2, t3 = t
    T = np.array([[t0, 0.0], [t2 + 1j * t3, t1]], dtype=complex)
    m = T.conj().T @ T
    return m / np.trace(m).real


def t_from_rho(rho) -> np.ndarray:
    """Invert :func:`rho_from_t` (up to scale) for a positive definite ``rho``."""
    # rho = T^dagger T with T lower triangular <=> T = L^dagger for the upper Cholesky factor
    j = np.array([[0, 1], [1, 0]])
    lower = np.linalg.cholesky(j @ np.asarray(rho, dtype=complex) @ j)
    T = (j @ lower @ j).conj().T
    phase = np.exp(-1j * np.angle(T[0, 0])), np.exp(-1j * np.angle(T[1, 1]))
    T = np.diag(phase) @ T
    return np.array([T[0, 0].real, T[1, 1].real, T[1, 0].real, T[1, 0].imag])


def bloch_from_t(t) -> np.ndarray:
    """Bloch vector of :func:`rho_from_t` in closed form (no matrix products)."""
    t0, t1, t2, t3 = t
    n = t0 * t0 + t1 * t1 + t2 * t2 + t3 * t3
    return np.array([2 * t1 * t2, 2 * t1 * t3, t0 * t0 + t2 * t2 + t3 * t3 - t1 * t1]) / n


_PROJ_STACK = np.stack([PROJECTORS[k] for k in LABELS])


def predicted_probs(rho) -> np.ndarray:
    return np.einsum("kij,ji->k", _PROJ_STACK, rho).real


def likelihood(rho, c: CountSet) -> float:
    """Least-squares likelihood ``sum (N p - n)^2 / (2 N p)`` with per-basis ``N``."""
    p = np.maximum(predicted_probs(rho), PROB_FLOOR)
    big_n = c.basis_totals()
    n = c.as_array()
    return float(np.sum((big_n * p - n) ** 2 / (2 * big_n * p)))


def likelihood_bloch(r, c: CountSet) -> np.ndarray:
    """Vectorized likelihood over Bloch vectors ``r`` of shape ``(..., 3)``."""
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    p = 0.5 * np.stack([1 + z, 1 - z, 1 + x, 1 - x, 1 + y, 1 - y], axis=-1)
    p = np.maximum(p, PROB_FLOOR)
    big_n = c.basis_totals()
    n = c.as_array()
    return np.sum((big_n * p - n) ** 2 / (2 * big_n * p), axis=-1)


@dataclass(frozen=True)
class MleConfig:
    restarts: int = 5
    fatol: float = 1e-10
    xatol: float = 1e-8
    max_evals: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class TomoResult:
    rho_rec: np.ndarray
    likelihood: float
    fidelity_vs_target: float | None
    iterations: int
    restarts: int
    rho_linear: np.ndarray | None = None
    linear_physical: bool | None = None


def _starts(c: CountSet, cfg: MleConfig) -> list[np.ndarray]:
    starts = []
    rho_lin, _ = linear_reconstruct(c)
    # pull the linear estimate inside the Bloch ball so it has a Cholesky factor
    s = stokes_of(rho_lin)
    norm = s.bloch_norm
    shrink = min(1.0, 0.999 / norm) if norm > 0 else 1.0
    rho_in = density_from_stokes((1.0, s.s1 * shrink, s.s2 * shrink, s.s3 * shrink))
    starts.append(t_from_rho(rho_in))
    starts.append(np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2))
    rng = np.random.default_rng(cfg.seed)
    while len(starts) < max(cfg.restarts, 3):
        starts.append(rng.normal(size=4))
    return [x / np.linalg.norm(x) for x in starts]


def mle_reconstruct(c: CountSet, config: MleConfig | None = None, target=None) -> TomoResult:
    """Maximum-likelihood state over the Cholesky parametrization ``rho = T^+T / Tr``.

    Nelder-Mead from several starts (linear estimate, maximally mixed,
    random); the lowest likelihood wins, ties going to the earlier start.
    The objective carries ``(|t|^2 - 1)^2``, which pins the scale of ``T``
    without moving the minimum because ``rho`` is scale invariant.
    """
    cfg = config or MleConfig()
    c.require_complete()

    big_n, n_obs = c.basis_totals(), c.as_array()

    def objective(t):
        nt = float(np.dot(t, t))
        if nt < 1e-300:
            return 1e300
        x, y, z = bloch_from_t(t)
        p = np.maximum(0.5 * np.array([1 + z, 1 - z, 1 + x, 1 - x, 1 + y, 1 - y]), PROB_FLOOR)
        return float(np.sum((big_n * p - n_obs) ** 2 / (2 * big_n * p))) + (nt - 1.0) ** 2

    best = None
    evals = 0
    any_ok = False
    for x0 in _starts(c, cfg):
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"fatol": cfg.fatol, "xatol": cfg.xatol, "maxfev": cfg.max_evals, "maxiter": cfg.max_evals},
        )
        evals += res.nfev
        any_ok |= bool(res.success)
        if best is None or res.fun < best.fun:
            best = res
    rho = rho_from_t(best.x)
    if not any_ok:
        raise MleConvergenceError("MLE did not converge from any start", best=rho)
    rho_lin, phys = linear_reconstruct(c)
    fid = None if target is None else fidelity(rho, target)
    return TomoResult(rho, likelihood(rho, c), fid, evals, max(cfg.restarts, 3), rho_lin, phys)


def run_tomography(rho_true, shots: int, noise: bool, rng: np.random.Generator | None = None) -> CountSet:
    """Synthesize analyzer counts; binomial per basis, or rounded expectations when ``noise`` is off."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    counts = {}
    for b in BASES:
        p0, _ = expected_probs(rho_true, setting_for(b))
        n0 = int(rng.binomial(shots, p0)) if noise else int(round(shots * p0))
        counts[PORT_LABELS[b][0]] = n0
        counts[PORT_LABELS[b][1]] = shots - n0
    return CountSet(counts)
