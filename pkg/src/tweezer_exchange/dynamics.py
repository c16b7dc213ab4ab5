"""Coherent evolutions and the collective dephasing channel for the two-atom spin state.

Conventions used throughout:

* frequencies are in Hz, so a Hamiltonian ``h_hz`` generates
  ``exp(-2j*pi*h_hz*t)``;
* exchange follows (a, b) -> (a cos(th) + i b sin(th), b cos(th) + i a sin(th))
  on (|updn>, |dnup>) with th = pi * J_ex * t, and the aligned states pick up
  a sector phase only;
* the gradient writes its phase on |updn> (left atom up), so that a
  +pi/2 gradient rotation takes (|updn> + i|dnup>)/sqrt(2) to the triplet;
* S^z per atom is +-1/2, hence |upup> and |dndn> differ by Delta S^z = 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import DNDN, DNUP, UPDN, UPUP, check_density, check_pure

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Total S^z of the product basis states, in units of hbar.
TOTAL_SZ = np.array([1.0, 0.0, 0.0, -1.0])

MAX_PHASE_PER_STEP = 0.1


class StepSizeError(ValueError):
    """Raised when a propagation step is too coarse for the Hamiltonian."""


@dataclass(frozen=True)
class ExchangeParams:
    j_ex_hz: float

    def __post_init__(self):
        if not self.j_ex_hz >= 0:
            raise ValueError("j_ex_hz must be non-negative")

    @property
    def period_s(self) -> float:
        """Period of the spin-population oscillation, 1 / J_ex."""
        return 1.0 / self.j_ex_hz


@dataclass(frozen=True)
class GradientParams:
    delta_hz: float

    def __post_init__(self):
        if not np.isfinite(self.delta_hz):
            raise ValueError("delta_hz must be finite")


@dataclass(frozen=True)
class PulseParams:
    area_rad: float = np.pi / 2
    phase_rad: float = 0.0


@dataclass(frozen=True)
class DephasingParams:
    sigma_rad: float

    def __post_init__(self):
        if not self.sigma_rad >= 0:
            raise ValueError("sigma_rad must be non-negative")


def _conjugate(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


# --------------------------------------------------------------------------- exchange


def exchange_unitary(p: ExchangeParams, t: float) -> np.ndarray:
    th = np.pi * p.j_ex_hz * t
    c, s = np.cos(th), np.sin(th)
    sector = np.exp(1j * th)
    u = np.zeros((4, 4), dtype=complex)
    u[UPUP, UPUP] = sector
    u[DNDN, DNDN] = sector
    u[UPDN, UPDN] = u[DNUP, DNUP] = c
    u[UPDN, DNUP] = u[DNUP, UPDN] = 1j * s
    return u


def exchange_evolve(psi, p: ExchangeParams, t: float) -> np.ndarray:
    psi = check_pure(psi)
    return exchange_unitary(p, t) @ psi


def exchange_evolve_rho(rho, p: ExchangeParams, t: float) -> np.ndarray:
    return _conjugate(check_density(rho), exchange_unitary(p, t))


def singlet_triplet_phase(rho, phi: float) -> np.ndarray:
    """Advance the triplet component by ``phi`` relative to the singlet.

    Equivalent to exchange evolution for a time phi / (2 pi J_ex); used for
    the channel phase accumulated during the adiabatic passages.
    """
    return exchange_evolve_rho(rho, ExchangeParams(1.0), phi / (2 * np.pi))


# --------------------------------------------------------------------------- readout maps


def gradient_unitary(g: GradientParams, t_g: float) -> np.ndarray:
    phi = 2 * np.pi * g.delta_hz * t_g
    return np.diag([1.0, np.exp(1j * phi), 1.0, 1.0]).astype(complex)


def gradient_evolve(rho, g: GradientParams, t_g: float) -> np.ndarray:
    return _conjugate(check_density(rho), gradient_unitary(g, t_g))


def single_atom_rotation(p: PulseParams) -> np.ndarray:
    axis = np.cos(p.phase_rad) * SIGMA_X + np.sin(p.phase_rad) * SIGMA_Y
    half = p.area_rad / 2
    return np.cos(half) * np.eye(2) - 1j * np.sin(half) * axis


def pulse_unitary(p: PulseParams) -> np.ndarray:
    u = single_atom_rotation(p)
    return np.kron(u, u)


def microwave_pulse(rho, p: PulseParams) -> np.ndarray:
    return _conjugate(check_density(rho), pulse_unitary(p))


def collective_dephase(rho, d: DephasingParams) -> np.ndarray:
    """Average over a global Gaussian phase phi ~ N(0, sigma^2) applied as exp(-i phi S^z).

    Element (i, j) is damped by exp(-(m_i - m_j)^2 sigma^2 / 2) where m is the
    total S^z; the anti-aligned block is untouched.
    """
    rho = check_density(rho)
    dm = TOTAL_SZ[:, None] - TOTAL_SZ[None, :]
    return rho * np.exp(-(dm**2) * d.sigma_rad**2 / 2)


# --------------------------------------------------------------------------- adiabatic passage

# Basis order of the four-level passage model.
S_LL, S_RR, T_LL, T_RR = 0, 1, 2, 3
AP_BASIS_LABELS = ("S;Lg,Rg", "S;Re,Rg", "T;Lg,Rg", "T;Re,Rg")


@dataclass(frozen=True)
class ApRamp:
    """Linear bias sweep through the L_g <-> R_e tunnelling resonance."""

    delta_start_hz: float = -2200.0
    delta_end_hz: float = 2200.0
    duration_s: float = 12e-3
    j_eg_hz: float = 165.0
    u_eg_hz: float = 0.0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not self.j_eg_hz > 0:
            raise ValueError("j_eg_hz must be positive")

    @property
    def sweep_rate_hz_per_s(self) -> float:
        return (self.delta_end_hz - self.delta_start_hz) / self.duration_s

    def reversed(self) -> "ApRamp":
        return ApRamp(self.delta_end_hz, self.delta_start_hz, self.duration_s, self.j_eg_hz, self.u_eg_hz)

    def bias_at(self, t) -> np.ndarray:
        return self.delta_start_hz + self.sweep_rate_hz_per_s * np.asarray(t)


def arp_hamiltonian(delta_hz, ramp: ApRamp) -> np.ndarray:
    """Four-level passage Hamiltonian in Hz; broadcasts over an array of biases."""
    delta = np.asarray(delta_hz, dtype=float)
    h = np.zeros(delta.shape + (4, 4))
    h[..., S_LL, S_LL] = delta
    h[..., T_LL, T_LL] = delta
    h[..., S_LL, S_RR] = h[..., S_RR, S_LL] = -ramp.j_eg_hz
    h[..., T_LL, T_RR] = h[..., T_RR, T_LL] = -ramp.j_eg_hz
    h[..., T_RR, T_RR] = 2 * ramp.u_eg_hz
    return h


def _step_unitaries(h_hz: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(h_hz)
    phases = np.exp(-2j * np.pi * w * dt)
    return (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def _n_steps(ramp: ApRamp, dt: float) -> int:
    n = int(np.ceil(ramp.duration_s / dt - 1e-9))
    edge = max(abs(ramp.delta_start_hz), abs(ramp.delta_end_hz))
    norm = np.max(np.abs(np.linalg.eigvalsh(arp_hamiltonian(np.array([ramp.delta_start_hz, ramp.delta_end_hz, 0.0]), ramp))))
    norm = max(norm, edge)
    if 2 * np.pi * norm * (ramp.duration_s / n) >= MAX_PHASE_PER_STEP:
        raise StepSizeError(
            f"dt = {ramp.duration_s / n:.3e} s gives phase {2 * np.pi * norm * ramp.duration_s / n:.3f} rad per step; "
            f"need < {MAX_PHASE_PER_STEP}"
        )
    return n


def arp_propagate(psi0, ramp: ApRamp, dt: float) -> np.ndarray:
    """Propagate a passage-basis state across the ramp.

    The ramp is split into equal steps no longer than ``dt``; each step uses
    the exact exponential of the Hamiltonian at the step midpoint.
    """
    psi = np.asarray(psi0, dtype=complex)
    n = _n_steps(ramp, dt)
    step = ramp.duration_s / n
    t_mid = (np.arange(n) + 0.5) * step
    for u in _step_unitaries(arp_hamiltonian(ramp.bias_at(t_mid), ramp), step):
        psi = u @ psi
    return psi


def arp_initial_state() -> np.ndarray:
    """|L_g up, R_g down>: equal singlet and triplet weight in the separated configuration."""
    psi = np.zeros(4, dtype=complex)
    psi[S_LL] = psi[T_LL] = 1 / np.sqrt(2)
    return psi


def _block_ground(delta_hz: float, ramp: ApRamp, block: int) -> np.ndarray:
    h = arp_hamiltonian(delta_hz, ramp)
    sl = slice(2 * block, 2 * block + 2)
    _, v = np.linalg.eigh(h[sl, sl])
    vec = np.zeros(4, dtype=complex)
    vec[sl] = v[:, 0]
    return vec


def arp_transfer_probability(ramp: ApRamp, dt: float, channel: str = "S", basis: str = "adiabatic") -> float:
    """Probability that one channel is carried across the avoided crossing.

    ``basis="adiabatic"`` starts in the lower instantaneous eigenstate of the
    channel at the start bias and projects onto the lower eigenstate at the
    end bias; this is the quantity the Landau-Zener formula predicts.
    ``basis="diabatic"`` starts in |L_g, R_g> and measures the |R_e, R_g>
    population, which carries finite-window interference when the sweep
    edges are only a few couplings from resonance.
    """
    block = {"S": 0, "T": 1}[channel]
    if basis == "adiabatic":
        start = _block_ground(ramp.delta_start_hz, ramp, block)
        end = _block_ground(ramp.delta_end_hz, ramp, block)
        return float(abs(np.vdot(end, arp_propagate(start, ramp, dt))) ** 2)
    if basis == "diabatic":
        start = np.zeros(4, dtype=complex)
        start[2 * block] = 1.0
        return float(abs(arp_propagate(start, ramp, dt)[2 * block + 1]) ** 2)
    raise ValueError(f"unknown basis {basis!r}")


def lz_transfer_probability(j_eg_hz: float, sweep_rate_hz_per_s: float) -> float:
    """Landau-Zener adiabatic-following probability 1 - exp(-2 pi Gamma).

    Gamma = 2 pi J_eg^2 / |dDelta/dt| with both in Hz.
    """
    if j_eg_hz <= 0 or sweep_rate_hz_per_s <= 0:
        raise ValueError("inputs must be positive")
    gamma = 2 * np.pi * j_eg_hz**2 / sweep_rate_hz_per_s
    return float(-np.expm1(-2 * np.pi * gamma))


def adiabaticity(j_eg_hz: float, sweep_rate_hz_per_s: float) -> float:
    return 2 * np.pi * j_eg_hz**2 / abs(sweep_rate_hz_per_s)


def channel_gap_hz(delta_hz, ramp: ApRamp, channel: str = "T") -> np.ndarray:
    block = {"S": 0, "T": 1}[channel]
    sl = slice(2 * block, 2 * block + 2)
    w = np.linalg.eigvalsh(arp_hamiltonian(delta_hz, ramp)[..., sl, sl])
    return w[..., 1] - w[..., 0]


def minimum_gap_bias(ramp: ApRamp, channel: str = "T") -> float:
    """Bias at which the channel's avoided crossing is narrowest.

    The squared gap of a 2x2 Hermitian block is exactly quadratic in the
    bias, so the vertex of the parabola through three sampled gaps locates the
    minimum without a line search.
    """
    span = 10 * ramp.j_eg_hz + 4 * abs(ramp.u_eg_hz)
    d = np.array([-span, 0.0, span])
    g2 = channel_gap_hz(d, ramp, channel) ** 2
    a, b, _ = np.polyfit(d, g2, 2)
    return float(-b / (2 * a))


@dataclass(frozen=True)
class RoundTrip:
    """Outcome of a forward passage, a hold, and the reverse passage."""

    forward: np.ndarray  # passage-basis state after the forward ramp
    final: np.ndarray  # after the reverse ramp
    return_probability: float  # weight back in the separated configuration
    channel_phase: float  # triplet-minus-singlet phase picked up by the transferred pair


def arp_round_trip(ramp: ApRamp, dt: float, psi0=None, basis: str = "diabatic") -> RoundTrip:
    """Forward passage then its exact reverse.

    With ``basis="diabatic"`` the start state defaults to |L_g up, R_g down>
    and the return is measured on the (S;LL, T;LL) components. With
    ``basis="adiabatic"`` both are the lower instantaneous eigenstates of
    each channel at the start bias, which removes the admixture a finite
    sweep window leaves at its edges.

    ``channel_phase`` is the triplet-minus-singlet phase acquired by the
    merged (R_e, R_g) pair during the forward ramp plus the reverse ramp, and
    is what shifts the coherence angle of the exchange-produced state.
    """
    if basis == "diabatic":
        ref_s = np.zeros(4, dtype=complex)
        ref_t = np.zeros(4, dtype=complex)
        ref_s[S_LL] = ref_t[T_LL] = 1.0
    elif basis == "adiabatic":
        ref_s = _block_ground(ramp.delta_start_hz, ramp, 0)
        ref_t = _block_ground(ramp.delta_start_hz, ramp, 1)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    psi0 = (ref_s + ref_t) / np.sqrt(2) if psi0 is None else np.asarray(psi0, dtype=complex)
    fwd = arp_propagate(psi0, ramp, dt)
    back = arp_propagate(fwd, ramp.reversed(), dt)
    a_s, a_t = np.vdot(ref_s, back), np.vdot(ref_t, back)
    p_return = float(abs(a_s) ** 2 + abs(a_t) ** 2)
    phase = np.angle(a_t * np.conj(a_s) * np.conj(np.vdot(ref_t, psi0)) * np.vdot(ref_s, psi0))
    return RoundTrip(forward=fwd, final=back, return_probability=p_return, channel_phase=float(phase))
