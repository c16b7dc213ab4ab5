import numpy as np
import pytest
from hypothesis import given, strategies as st

from tweezer_exchange import qstate as q
from conftest import random_density, random_ket


def test_basis_order_and_bell_states():
    assert q.BASIS_LABELS == ("upup", "updn", "dnup", "dndn")
    s2 = 1 / np.sqrt(2)
    np.testing.assert_allclose(q.singlet(), [0, s2, -s2, 0], atol=1e-15)
    np.testing.assert_allclose(q.triplet(), [0, s2, s2, 0], atol=1e-15)
    np.testing.assert_allclose(q.psi_plus(), [0, s2, 1j * s2, 0], atol=1e-15)
    np.testing.assert_allclose(q.psi_minus(), [0, s2, -1j * s2, 0], atol=1e-15)


def test_validate_reports_each_violation():
    bad = np.diag([0.7, 0.5, 0.0, -0.1]).astype(complex)
    bad[0, 1] = 0.2
    kinds = {v.invariant for v in q.validate(bad)}
    assert kinds == {"hermiticity", "trace", "positivity"}
    assert all(v.magnitude > 0 for v in q.validate(bad))
    assert q.validate(q.maximally_mixed()) == []
    with pytest.raises(q.ValidationError):
        q.check_density(bad)
    with pytest.raises(q.ValidationError):
        q.check_density(np.eye(3) / 3)


def test_check_pure_rejects_unnormalised():
    with pytest.raises(q.ValidationError):
        q.check_pure([1, 1, 0, 0])


def test_x_state_entries():
    rho = q.x_state(0.1, 0.4, 0.4, 0.1, 0.3j)
    assert rho[q.UPDN, q.DNUP] == pytest.approx(0.3j)
    assert rho[q.DNUP, q.UPDN] == pytest.approx(-0.3j)
    assert q.validate(rho) == []


def test_singlet_triplet_examples():
    st_s = q.singlet_triplet_transform(q.density_from_pure(q.singlet()))
    np.testing.assert_allclose(np.diag(st_s)[1:3].real, [1, 0], atol=1e-12)
    st_ud = q.singlet_triplet_transform(q.density_from_pure(q.ket("updn")))
    np.testing.assert_allclose([st_ud[1, 1].real, st_ud[2, 2].real, abs(st_ud[1, 2])], [0.5, 0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(q.singlet_triplet_transform(q.maximally_mixed()), np.eye(4) / 4, atol=1e-15)


def test_singlet_triplet_preserves_spectrum_on_random_states(rng):
    for _ in range(1000):
        rho = random_density(rng)
        out = q.singlet_triplet_transform(rho)
        np.testing.assert_allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-12)
        np.testing.assert_allclose(q.singlet_triplet_inverse(out), rho, atol=1e-12)


def test_bloch_azimuth_on_grid():
    for theta in np.linspace(0.05, np.pi - 0.05, 10):
        for phi in np.linspace(0, 2 * np.pi, 10, endpoint=False):
            psi = np.cos(theta / 2) * q.ket("updn") + np.exp(1j * phi) * np.sin(theta / 2) * q.ket("dnup")
            b = q.bloch_vector(q.density_from_pure(psi))
            diff = (b.azimuth - phi + np.pi) % (2 * np.pi) - np.pi
            assert abs(diff) < 1e-9
            assert b.length == pytest.approx(1.0, abs=1e-12)
            assert b.z == pytest.approx(np.cos(theta), abs=1e-12)


def test_bloch_poles_and_equator():
    assert q.bloch_vector(q.density_from_pure(q.ket("updn"))).z == pytest.approx(1)
    b = q.bloch_vector(q.density_from_pure(q.psi_plus()))
    assert (b.x, b.y, b.z) == pytest.approx((0, 1, 0), abs=1e-12)
    b = q.bloch_vector(q.density_from_pure(q.singlet()))
    assert (b.x, b.y) == pytest.approx((-1, 0), abs=1e-12)


def test_bloch_degenerate_subspace():
    with pytest.raises(q.DegenerateSubspaceError):
        q.bloch_vector(q.density_from_pure(q.ket("upup")))


def test_overlap_up_to_phase():
    psi = q.psi_plus()
    assert q.overlap_up_to_phase(psi, np.exp(0.7j) * psi) == pytest.approx(1.0)
    assert q.overlap_up_to_phase(q.singlet(), q.triplet()) == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_random_pure_states_are_valid_densities(seed):
    rng = np.random.default_rng(seed)
    rho = q.density_from_pure(random_ket(rng))
    assert q.validate(rho) == []
    assert np.trace(rho @ rho).real == pytest.approx(1.0)
