"""Tests for the single/two-qubit algebra helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconvsim import statekit as sk

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_cardinal_states_are_orthonormal_pairs():
    for a, b in (("0", "1"), ("+", "-"), ("+i", "-i")):
        ka, kb = sk.CARDINAL_STATES[a], sk.CARDINAL_STATES[b]
        assert abs(np.vdot(ka, ka) - 1) < 1e-15
        assert abs(np.vdot(ka, kb)) < 1e-15


def test_normalize_rejects_zero_vector():
    with pytest.raises(sk.DegenerateStateError):
        sk.normalize([0, 0])


def test_normalize_rejects_odd_dimension():
    with pytest.raises(ValueError):
        sk.normalize([1, 0, 0])


def test_apply_rejects_nonunitary_and_mismatch():
    with pytest.raises(ValueError, match="unitary"):
        sk.apply(np.array([[1, 1], [0, 1]]), np.eye(2) / 2)
    with pytest.raises(ValueError, match="mismatch"):
        sk.apply(np.eye(4), np.eye(2) / 2)


def test_tensor_ordering_is_signal_first():
    ket = sk.tensor(sk.KET_0, sk.KET_1)
    assert np.allclose(ket, [0, 1, 0, 0])
    with pytest.raises(ValueError):
        sk.tensor(sk.KET_0, np.eye(2))


def test_stokes_of_cardinal_states():
    assert np.allclose(sk.stokes_of(sk.density_of(sk.KET_0)), (1, 0, 0, 1))
    assert np.allclose(sk.stokes_of(sk.density_of(sk.KET_PLUS)), (1, 1, 0, 0))
    assert np.allclose(sk.stokes_of(sk.density_of(sk.KET_PLUS_I)), (1, 0, 1, 0))


def test_stokes_rejects_two_qubit_input():
    with pytest.raises(ValueError):
        sk.stokes_of(np.eye(4) / 4)


def test_nonphysical_stokes_flagged():
    rho = sk.density_from_stokes((1, 1, 1, 1))
    assert not sk.is_physical(rho)
    assert not sk.StokesVector(1, 1, 1, 1).is_physical


def test_fidelity_known_values():
    assert sk.fidelity(sk.KET_0, sk.KET_PLUS) == pytest.approx(0.5, abs=1e-12)
    assert sk.fidelity(np.eye(2) / 2, sk.KET_0) == pytest.approx(0.5, abs=1e-12)
    # commuting diagonal states: (sum sqrt(p q))^2
    a, b = np.diag([0.9, 0.1]), np.diag([0.6, 0.4])
    expect = (np.sqrt(0.54) + np.sqrt(0.04)) ** 2
    assert sk.fidelity(a, b) == pytest.approx(expect, abs=1e-12)


def test_partial_trace_of_bell_state_is_mixed():
    bell = sk.normalize(sk.tensor(sk.KET_0, sk.KET_0) + sk.tensor(sk.KET_1, sk.KET_1))
    for keep in (0, 1):
        assert np.allclose(sk.partial_trace(sk.density_of(bell), keep), np.eye(2) / 2)
    with pytest.raises(ValueError):
        sk.partial_trace(sk.density_of(bell), 2)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_unitary_evolution_preserves_physicality(seed):
    rng = np.random.default_rng(seed)
    for dim in (2, 4):
        u = sk.random_unitary(dim, rng)
        assert sk.is_unitary(u)
        rho = sk.random_density(dim, rng)
        out = sk.apply(u, rho)
        assert sk.is_physical(out)
        assert np.allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_stokes_round_trip(seed):
    rho = sk.random_density(2, np.random.default_rng(seed))
    assert np.allclose(sk.density_from_stokes(sk.stokes_of(rho)), rho, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_fidelity_bounds_and_pure_overlap(seed):
    rng = np.random.default_rng(seed)
    a, b = sk.random_density(2, rng), sk.random_density(2, rng)
    f = sk.fidelity(a, b)
    assert -1e-12 <= f <= 1 + 1e-12
    assert f == pytest.approx(sk.fidelity(b, a), abs=1e-9)
    assert sk.fidelity(a, a) == pytest.approx(1.0, abs=1e-9)
    psi, phi = sk.random_pure_state(4, rng), sk.random_pure_state(4, rng)
    assert sk.fidelity(psi, phi) == pytest.approx(abs(np.vdot(psi, phi)) ** 2, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_partial_trace_of_product_state(seed):
    rng = np.random.default_rng(seed)
    a, b = sk.random_density(2, rng), sk.random_density(2, rng)
    ab = sk.tensor(a, b)
    assert np.allclose(sk.partial_trace(ab, 0), a, atol=1e-12)
    assert np.allclose(sk.partial_trace(ab, 1), b, atol=1e-12)
