"""Dense linear algebra for one- and two-qubit states.

States are plain numpy arrays: a state vector is a complex array of shape
``(d,)`` and a density matrix is a complex array of shape ``(d, d)`` with
``d`` in {2, 4}.

Basis ordering is fixed everywhere in the package: index 0 is the early time
bin ``|t0>`` or path ``|0>``, index 1 is ``|t1>`` or path ``|1>``.  Two-qubit
indices are ``signal (x) idler``, i.e. ``2 * a + b``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

ATOL = 1e-9

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_PLUS_I = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_MINUS_I = np.array([1, -1j], dtype=complex) / np.sqrt(2)

#: The six cardinal qubit states, keyed by their projector label.
CARDINAL_STATES = {
    "0": KET_0,
    "1": KET_1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "+i": KET_PLUS_I,
    "-i": KET_MINUS_I,
}


class DegenerateStateError(ValueError):
    pass


class StokesVector(NamedTuple):
    """Pauli expectation values ``s_i = Tr(rho sigma_i)``."""

    s0: float
    s1: float
    s2: float
    s3: float

    @property
    def bloch_norm(self) -> float:
        return float(np.sqrt(self.s1**2 + self.s2**2 + self.s3**2))

    @property
    def is_physical(self) -> bool:
        return self.bloch_norm <= self.s0 + ATOL


def _check_dim(dim: int) -> None:
    if dim not in (2, 4):
        raise ValueError(f"unsupported dimension {dim}; expected 2 or 4")


def normalize(v) -> np.ndarray:
    """Return ``v / ||v||``.

    Raises
    ------
    DegenerateStateError
        If ``v`` has zero norm.
    """
    v = np.asarray(v, dtype=complex)
    _check_dim(v.shape[0])
    norm = np.linalg.norm(v)
    if norm < 1e-15:
        raise DegenerateStateError("degenerate state: zero norm")
    return v / norm


def density_of(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two vectors or two matrices (first operand is the signal)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != b.ndim:
        raise ValueError("tensor operands must be of the same kind")
    return np.kron(a, b)


def is_unitary(u, atol: float = ATOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0))


def apply(u, rho) -> np.ndarray:
    """Propagate a density matrix through a unitary: ``U rho U^dagger``."""
    u = np.asarray(u, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if u.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {rho.shape}")
    if not is_unitary(u):
        raise ValueError("matrix is not unitary")
    return u @ rho @ u.conj().T


def is_hermitian(rho, atol: float = ATOL) -> bool:
    rho = np.asarray(rho)
    return bool(np.max(np.abs(rho - rho.conj().T)) <= atol)


def min_eigenvalue(rho) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + np.conj(rho).T))[0])


def is_physical(rho, atol: float = ATOL, normalized: bool = True) -> bool:
    """Hermitian, positive semidefinite and (optionally) unit trace, all to ``atol``."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, atol):
        return False
    if min_eigenvalue(rho) < -atol:
        return False
    tr = np.trace(rho).real
    if normalized:
        return bool(abs(tr - 1.0) <= atol)
    return bool(tr <= 1.0 + atol)


def stokes_of(rho) -> StokesVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"Stokes parameters need a single qubit, got shape {rho.shape}")
    return StokesVector(*(float(np.trace(rho @ s).real) for s in PAULIS))


def density_from_stokes(s) -> np.ndarray:
    """``rho = 1/2 sum_i s_i sigma_i``.

    Nonphysical Stokes vectors are accepted; check the result with
    :func:`is_physical` (or ``StokesVector.is_physical``).
    """
    return 0.5 * sum(float(si) * p for si, p in zip(s, PAULIS))


def psd_sqrt(rho) -> np.ndarray:
    # eigenvalues clamped at zero: PSD inputs can carry -1e-12 numerical noise
    w, v = np.linalg.eigh(0.5 * (rho + np.conj(rho).T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho, rho_aim) -> float:
    """Uhlmann fidelity ``[Tr sqrt(sqrt(rho_aim) rho sqrt(rho_aim))]^2``.

    Either argument may be given as a state vector.
    """
    rho = np.asarray(rho, dtype=complex)
    rho_aim = np.asarray(rho_aim, dtype=complex)
    if rho.ndim == 1:
        rho = density_of(rho)
    if rho_aim.ndim == 1:
        rho_aim = density_of(rho_aim)
    if rho.shape != rho_aim.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {rho_aim.shape}")
    s = psd_sqrt(rho_aim)
    inner = s @ rho @ s
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    # eigenvalues at roundoff level would contribute sqrt(eps) to the trace
    floor = 8 * w.size * np.finfo(float).eps * max(float(np.max(np.abs(w))), 1e-300)
    w = np.where(w > floor, w, 0.0)
    return float(np.sum(np.sqrt(w)) ** 2)


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduce a two-qubit density matrix to subsystem ``keep`` (0 = signal, 1 = idler)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("partial_trace expects a 4x4 density matrix")
    r = rho.reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ajbj->ab", r)
    if keep == 1:
        return np.einsum("jajb->ab", r)
    raise ValueError("keep must be 0 or 1")


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
