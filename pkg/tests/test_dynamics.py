import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from tweezer_exchange import dynamics as dyn
from tweezer_exchange import qstate as q
from tweezer_exchange.measure import parity
from conftest import random_density

DEFAULT_RAMP = dyn.ApRamp(-2200.0, 2200.0, 12e-3, 165.0, 0.0)


def pure(psi):
    return q.density_from_pure(psi)


# ---------------------------------------------------------------- exchange


def test_exchange_quarter_period_makes_psi_plus():
    p = dyn.ExchangeParams(176.0)
    psi = dyn.exchange_evolve(q.ket("updn"), p, 1 / (4 * p.j_ex_hz))
    assert q.overlap_up_to_phase(psi, q.psi_plus()) == pytest.approx(1.0, abs=1e-12)


def test_exchange_singlet_triplet_relative_phase():
    """Triplet advances by 2 pi J t relative to the singlet; aligned states follow the triplet."""
    p, t = dyn.ExchangeParams(150.0), 1.3e-3
    u = dyn.exchange_unitary(p, t)
    ang = 2 * np.pi * p.j_ex_hz * t
    ph_s = np.vdot(q.singlet(), u @ q.singlet())
    ph_t = np.vdot(q.triplet(), u @ q.triplet())
    assert abs(ph_s) == pytest.approx(1) and abs(ph_t) == pytest.approx(1)
    assert np.angle(ph_t / ph_s) == pytest.approx((ang + np.pi) % (2 * np.pi) - np.pi)
    assert u[q.UPUP, q.UPUP] == pytest.approx(ph_t)


def test_exchange_population_frequency_and_recurrence():
    p = dyn.ExchangeParams(176.75)
    t = np.linspace(0, 3 / p.j_ex_hz, 301)
    pud = [abs(dyn.exchange_evolve(q.ket("updn"), p, ti)[q.UPDN]) ** 2 for ti in t]
    np.testing.assert_allclose(pud, np.cos(np.pi * p.j_ex_hz * t) ** 2, atol=1e-12)
    for tr in (1 / p.j_ex_hz, 2 / p.j_ex_hz):
        psi = dyn.exchange_evolve(q.psi_plus(), p, tr)
        assert q.overlap_up_to_phase(psi, q.psi_plus()) == pytest.approx(1.0, abs=1e-12)


def test_exchange_unitary_matches_matrix_exponential():
    """Generator check: U(t) = exp(i 2 pi J t (S.S + 1/4)) in the ordered basis."""
    sx, sy, sz = (m / 2 for m in (dyn.SIGMA_X, dyn.SIGMA_Y, dyn.SIGMA_Z))
    ss = sum(np.kron(a, a) for a in (sx, sy, sz))
    p, t = dyn.ExchangeParams(120.0), 0.7e-3
    ref = expm(1j * 2 * np.pi * p.j_ex_hz * t * (ss + np.eye(4) / 4))
    np.testing.assert_allclose(dyn.exchange_unitary(p, t), ref, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0, 0.05))
def test_evolutions_are_valid_channels(seed, t):
    rng = np.random.default_rng(seed)
    rho = random_density(rng)
    ev0 = np.linalg.eigvalsh(rho)
    maps = [
        dyn.exchange_evolve_rho(rho, dyn.ExchangeParams(176.0), t),
        dyn.gradient_evolve(rho, dyn.GradientParams(100.0), t),
        dyn.microwave_pulse(rho, dyn.PulseParams(rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi))),
    ]
    for out in maps:
        assert q.validate(out) == []
        np.testing.assert_allclose(np.linalg.eigvalsh(out), ev0, atol=1e-12)
    out = dyn.exchange_evolve_rho(rho, dyn.ExchangeParams(176.0), t)
    np.testing.assert_allclose(np.diag(out)[[0, 3]], np.diag(rho)[[0, 3]], atol=1e-12)
    deph = dyn.collective_dephase(rho, dyn.DephasingParams(rng.uniform(0, 3)))
    assert q.validate(deph) == []


# ---------------------------------------------------------------- readout maps


def test_gradient_maps_psi_plus_to_triplet():
    g = dyn.GradientParams(100.0)
    psi = dyn.gradient_unitary(g, 1 / (4 * g.delta_hz)) @ q.psi_plus()
    assert q.overlap_up_to_phase(psi, q.triplet()) == pytest.approx(1.0, abs=1e-12)


def test_gradient_half_period_swaps_singlet_and_triplet():
    g = dyn.GradientParams(100.0)
    u = dyn.gradient_unitary(g, 1 / (2 * g.delta_hz))
    assert q.overlap_up_to_phase(u @ q.singlet(), q.triplet()) == pytest.approx(1.0, abs=1e-12)
    assert q.overlap_up_to_phase(u @ q.triplet(), q.singlet()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("phase", np.linspace(0, 2 * np.pi, 7))
def test_pulse_parities(phase):
    pulse = dyn.PulseParams(np.pi / 2, phase)
    assert parity(dyn.microwave_pulse(pure(q.singlet()), pulse)) == pytest.approx(-1.0, abs=1e-12)
    assert parity(dyn.microwave_pulse(pure(q.triplet()), pulse)) == pytest.approx(1.0, abs=1e-12)


def test_composite_readout_sequence():
    g, pulse = dyn.GradientParams(100.0), dyn.PulseParams()
    half = 1 / (2 * g.delta_hz)
    # a half-period gradient exchanges singlet and triplet, so the parities swap
    rho = dyn.microwave_pulse(dyn.gradient_evolve(pure(q.singlet()), g, half), pulse)
    assert parity(rho) == pytest.approx(1.0, abs=1e-12)
    rho = dyn.microwave_pulse(dyn.gradient_evolve(pure(q.triplet()), g, half), pulse)
    assert parity(rho) == pytest.approx(-1.0, abs=1e-12)
    rho = dyn.microwave_pulse(dyn.gradient_evolve(pure(q.singlet()), g, 2 * half), pulse)
    assert parity(rho) == pytest.approx(-1.0, abs=1e-12)


def test_single_atom_rotation_is_su2():
    u = dyn.single_atom_rotation(dyn.PulseParams(1.1, 0.3))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-15)
    assert np.linalg.det(u) == pytest.approx(1.0)


def test_gradient_commutes_with_collective_dephasing(rng):
    g, d = dyn.GradientParams(73.0), dyn.DephasingParams(0.8)
    for _ in range(20):
        rho = random_density(rng)
        a = dyn.collective_dephase(dyn.gradient_evolve(rho, g, 1.7e-3), d)
        b = dyn.gradient_evolve(dyn.collective_dephase(rho, d), g, 1.7e-3)
        np.testing.assert_allclose(a, b, atol=1e-14)


# ---------------------------------------------------------------- dephasing


def test_collective_dephasing_identity_and_dfs():
    rho = pure(q.psi_plus())
    np.testing.assert_allclose(dyn.collective_dephase(rho, dyn.DephasingParams(0.0)), rho, atol=0)
    for sigma in (0.1, 1.0, 5.0):
        out = dyn.collective_dephase(rho, dyn.DephasingParams(sigma))
        np.testing.assert_allclose(out, rho, atol=1e-15)


def test_aligned_coherence_against_phase_sampling_oracle():
    sigma = 0.6
    ghz = (q.ket("upup") + q.ket("dndn")) / np.sqrt(2)
    rho = pure(ghz)
    out = dyn.collective_dephase(rho, dyn.DephasingParams(sigma))
    phi = np.random.default_rng(7).normal(0.0, sigma, 10**6)
    oracle = np.mean(np.exp(-2j * phi)) * rho[q.UPUP, q.DNDN]
    assert abs(out[q.UPUP, q.DNDN] - oracle) < 1e-3
    assert out[q.UPUP, q.DNDN].real == pytest.approx(0.5 * np.exp(-2 * sigma**2), rel=1e-12)


def test_dephasing_rejects_negative_sigma():
    with pytest.raises(ValueError):
        dyn.DephasingParams(-0.1)


# ---------------------------------------------------------------- adiabatic passage


def test_lz_closed_form_value():
    rate = DEFAULT_RAMP.sweep_rate_hz_per_s
    gamma = dyn.adiabaticity(165.0, rate)
    assert gamma == pytest.approx(2 * np.pi * 165.0**2 / rate)
    assert dyn.lz_transfer_probability(165.0, rate) == pytest.approx(1 - np.exp(-2 * np.pi * gamma))
    assert dyn.lz_transfer_probability(165.0, rate) == pytest.approx(0.9467, abs=1e-4)


def test_arp_matches_ode_oracle():
    """Two-level singlet block integrated with an adaptive Runge-Kutta solver."""
    r = DEFAULT_RAMP

    def rhs(t, y):
        d = r.bias_at(t)
        h = np.array([[d, -r.j_eg_hz], [-r.j_eg_hz, 0.0]])
        return -2j * np.pi * h @ y

    def ground(d):
        return np.linalg.eigh(np.array([[d, -r.j_eg_hz], [-r.j_eg_hz, 0.0]]))[1][:, 0]

    sol = solve_ivp(rhs, (0, r.duration_s), ground(r.delta_start_hz).astype(complex), rtol=1e-11, atol=1e-12, method="DOP853")
    oracle = abs(np.vdot(ground(r.delta_end_hz), sol.y[:, -1])) ** 2
    assert dyn.arp_transfer_probability(r, 3e-6) == pytest.approx(oracle, abs=1e-6)

    psi0 = np.array([1, 0, 0, 0], dtype=complex)
    sol = solve_ivp(rhs, (0, r.duration_s), psi0[:2], rtol=1e-11, atol=1e-12, method="DOP853")
    np.testing.assert_allclose(dyn.arp_propagate(psi0, r, 3e-6)[:2], sol.y[:, -1], atol=1e-5)


def test_arp_against_landau_zener_and_converged():
    p1 = dyn.arp_transfer_probability(DEFAULT_RAMP, 3e-6)
    p2 = dyn.arp_transfer_probability(DEFAULT_RAMP, 1.5e-6)
    lz = dyn.lz_transfer_probability(DEFAULT_RAMP.j_eg_hz, DEFAULT_RAMP.sweep_rate_hz_per_s)
    assert abs(p1 - lz) < 0.02
    assert abs(p1 - p2) < 1e-4
    assert dyn.arp_transfer_probability(DEFAULT_RAMP, 3e-6, "T") == pytest.approx(p1, abs=1e-12)


def test_arp_preserves_norm():
    psi = dyn.arp_propagate(dyn.arp_initial_state(), DEFAULT_RAMP, 3e-6)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)


def test_arp_step_size_guard():
    with pytest.raises(dyn.StepSizeError):
        dyn.arp_propagate(dyn.arp_initial_state(), DEFAULT_RAMP, 2e-5)


def test_round_trip_returns_at_high_adiabaticity():
    ramp = dyn.ApRamp(-2200.0, 2200.0, 12e-3, 400.0, 88.0)
    assert dyn.adiabaticity(ramp.j_eg_hz, ramp.sweep_rate_hz_per_s) >= 2
    assert dyn.arp_round_trip(ramp, 3e-6, basis="adiabatic").return_probability > 0.98
    # the default ramp is far less adiabatic and loses more on the way back
    assert dyn.arp_round_trip(DEFAULT_RAMP, 3e-6, basis="adiabatic").return_probability < 0.98


def test_triplet_channel_phase_tracks_u_eg():
    """The merged-pair triplet picks up a phase that vanishes at U_eg = 0."""
    assert dyn.arp_round_trip(DEFAULT_RAMP, 3e-6).channel_phase == pytest.approx(0.0, abs=1e-9)
    shifted = dyn.ApRamp(-2200.0, 2200.0, 12e-3, 165.0, 88.0)
    assert abs(dyn.arp_round_trip(shifted, 3e-6).channel_phase) > 0.01


@pytest.mark.parametrize("u", [0.0, 44.0, 88.4, 300.0])
def test_minimum_gap_bias_is_two_u(u):
    ramp = dyn.ApRamp(-2200.0, 2200.0, 12e-3, 165.0, u)
    assert dyn.minimum_gap_bias(ramp, "T") == pytest.approx(2 * u, rel=1e-9, abs=1e-9)
    assert dyn.minimum_gap_bias(ramp, "S") == pytest.approx(0.0, abs=1e-9)
    grid = np.linspace(2 * u - 50, 2 * u + 50, 20001)
    brute = grid[np.argmin(dyn.channel_gap_hz(grid, ramp, "T"))]
    assert brute == pytest.approx(2 * u, abs=0.01)
    assert dyn.channel_gap_hz(2 * u, ramp, "T") == pytest.approx(2 * ramp.j_eg_hz)


def test_ramp_validation():
    with pytest.raises(ValueError):
        dyn.ApRamp(duration_s=0)
    with pytest.raises(ValueError):
        dyn.ApRamp(j_eg_hz=-1)
