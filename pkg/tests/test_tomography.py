"""Tests for path-qubit tomography."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconvsim import statekit as sk
from qconvsim import tomography as tm
from qconvsim.devices import MziSetting


def exact_counts(rho, shots=10**6):
    return tm.run_tomography(rho, shots, noise=False)


def grid_oracle(c, step=0.01):
    """Brute-force minimum of L over the Bloch ball on a cubic grid."""
    axis = np.arange(-1.0, 1.0 + step / 2, step)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    best = np.inf
    for z in axis:
        r = np.stack([x, y, np.full_like(x, z)], axis=-1)
        inside = np.sum(r * r, axis=-1) <= 1.0
        if inside.any():
            best = min(best, float(tm.likelihood_bloch(r[inside], c).min()))
    return best


def test_settings_table():
    assert tm.setting_for("Z") == tm.MeasSetting("Z", MziSetting(0.0), 0.0)
    assert tm.setting_for("X") == tm.MeasSetting("X", MziSetting(0.5), 0.0)
    assert tm.setting_for("Y").tops_phase == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        tm.setting_for("W")


@pytest.mark.parametrize(
    "basis, label",
    [("Z", "0"), ("Z", "1"), ("X", "+"), ("X", "-"), ("Y", "+i"), ("Y", "-i")],
)
def test_port_convention(basis, label):
    rho = sk.density_of(sk.CARDINAL_STATES[label])
    p0, p1 = tm.expected_probs(rho, tm.setting_for(basis))
    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)
    assert (p0, p1) == pytest.approx((1.0, 0.0) if tm.PORT_LABELS[basis][0] == label else (0.0, 1.0), abs=1e-12)


def test_maximally_mixed_is_balanced():
    for b in tm.BASES:
        assert tm.expected_probs(np.eye(2) / 2, tm.setting_for(b)) == pytest.approx((0.5, 0.5))


def test_countset_validation():
    with pytest.raises(ValueError):
        tm.CountSet({"0": -1})
    with pytest.raises(ValueError):
        tm.CountSet({"0": 3, "1": 2}, totals={"Z": 4})
    c = tm.CountSet.from_sequence([3, 2, 1, 1, 0, 5])
    assert c.totals == {"Z": 5, "X": 2, "Y": 5}


def test_incomplete_tomography():
    c = tm.CountSet({"0": 10, "1": 0, "+": 5, "-": 5})
    with pytest.raises(tm.IncompleteTomographyError, match="incomplete tomography"):
        tm.linear_reconstruct(c)
    with pytest.raises(tm.IncompleteTomographyError):
        tm.mle_reconstruct(c)


def test_linear_exact_counts():
    rho, ok = tm.linear_reconstruct(exact_counts(sk.density_of(sk.KET_0)))
    assert ok and np.allclose(rho, np.diag([1, 0]))
    rho, ok = tm.linear_reconstruct(exact_counts(np.eye(2) / 2))
    assert ok and np.allclose(rho, np.eye(2) / 2)


def test_linear_nonphysical_flagged():
    c = tm.CountSet.from_sequence([100, 0, 100, 0, 100, 0])
    rho, ok = tm.linear_reconstruct(c)
    assert not ok
    assert sk.stokes_of(rho).bloch_norm == pytest.approx(np.sqrt(3))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cholesky_round_trip(seed):
    rho = sk.random_density(2, np.random.default_rng(seed))
    assert np.allclose(tm.rho_from_t(tm.t_from_rho(rho)), rho, atol=1e-12)


def test_mle_exact_pure_state():
    res = tm.mle_reconstruct(exact_counts(sk.density_of(sk.KET_0)), target=sk.KET_0)
    assert res.fidelity_vs_target > 0.9999
    assert res.restarts >= 5


def test_mle_matches_physical_linear_estimate():
    rho = sk.random_density(2, np.random.default_rng(11))
    res = tm.mle_reconstruct(exact_counts(rho))
    assert res.linear_physical
    assert sk.fidelity(res.rho_rec, res.rho_linear) >= 1 - 1e-6
    assert res.likelihood <= tm.likelihood(res.rho_linear, exact_counts(rho)) + 1e-9


def test_mle_nonphysical_against_grid_oracle():
    c = tm.CountSet.from_sequence([100, 0, 100, 0, 100, 0])
    res = tm.mle_reconstruct(c)
    assert sk.is_physical(res.rho_rec)
    assert sk.min_eigenvalue(res.rho_rec) >= -1e-9
    # grid tolerance: largest change of L between neighbouring grid points near the optimum
    r = np.array(sk.stokes_of(res.rho_rec)[1:])
    steps = np.array([[0.01, 0, 0], [0, 0.01, 0], [0, 0, 0.01]])
    tol = float(np.max(np.abs(tm.likelihood_bloch(r - steps, c) - tm.likelihood_bloch(r, c))))
    assert res.likelihood <= grid_oracle(c) + tol


def test_mle_beats_random_states():
    rng = np.random.default_rng(12)
    c = tm.run_tomography(sk.random_density(2, rng), 1000, True, rng)
    res = tm.mle_reconstruct(c)
    others = [tm.likelihood(sk.random_density(2, rng), c) for _ in range(1000)]
    assert res.likelihood <= min(others) + 1e-9


def test_mle_median_fidelity_plus_i():
    target = sk.KET_PLUS_I
    fids = []
    for seed in range(100):
        c = tm.run_tomography(sk.density_of(target), 10**4, True, np.random.default_rng(seed))
        fids.append(tm.mle_reconstruct(c, target=target).fidelity_vs_target)
    assert np.median(fids) >= 0.99


def test_mle_consistency_with_shots():
    rho = sk.density_from_stokes((1, 0.3, -0.5, 0.6))
    medians = []
    for shots in (10**2, 10**4, 10**6):
        f = [
            sk.fidelity(tm.mle_reconstruct(tm.run_tomography(rho, shots, True, np.random.default_rng(s))).rho_rec, rho)
            for s in range(50)
        ]
        medians.append(np.median(f))
    assert medians[0] < medians[1] < medians[2]


def test_run_tomography_statistics():
    c = tm.run_tomography(np.eye(2) / 2, 10**6, True, np.random.default_rng(13))
    for b in tm.BASES:
        assert abs(c.counts[tm.PORT_LABELS[b][0]] - 5e5) < 4 * np.sqrt(2.5e5)
        assert c.totals[b] == 10**6
    c = exact_counts(sk.density_of(sk.KET_1), 1000)
    assert c.counts["0"] == 0 and c.counts["1"] == 1000
    with pytest.raises(ValueError):
        tm.run_tomography(np.eye(2) / 2, 0, False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 500), min_size=6, max_size=6))
def test_mle_always_physical(seq):
    for b in range(3):
        if seq[2 * b] + seq[2 * b + 1] == 0:
            seq[2 * b] = 1
    res = tm.mle_reconstruct(tm.CountSet.from_sequence(seq))
    rho = res.rho_rec
    assert sk.is_hermitian(rho, 1e-9)
    assert sk.min_eigenvalue(rho) >= -1e-9
    assert abs(np.trace(rho).real - 1) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4).filter(lambda t: np.dot(t, t) > 1e-6))
def test_closed_form_bloch_matches_matrix(t):
    rho = tm.rho_from_t(t)
    assert np.allclose(tm.bloch_from_t(t), sk.stokes_of(rho)[1:], atol=1e-12)
    if sk.stokes_of(rho).bloch_norm > 0.999:
        return  # near the surface the 1e-12 probability floor amplifies roundoff
    c = tm.CountSet.from_sequence([7, 3, 4, 6, 9, 1])
    assert tm.likelihood_bloch(tm.bloch_from_t(t), c) == pytest.approx(tm.likelihood(rho, c), rel=1e-10)
