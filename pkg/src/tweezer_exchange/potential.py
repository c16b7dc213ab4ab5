"""Tweezer trap frequencies, contact-interaction overlaps and the exchange frequency.

Energies are reported as frequencies (energy / h, in Hz). Two routes are
provided for the ground/excited interaction energy U_eg:

* harmonic: closed-form oscillator overlaps from the small-oscillation
  frequencies of the Gaussian beam;
* numeric: finite-difference eigenstates of the 1D Gaussian (radial) and
  Lorentzian (axial) profiles, combined as a separable 3D product.

The real tweezer potential is not separable; both routes share that
approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import constants
from scipy.linalg import eigh_tridiagonal

H = constants.h
HBAR = constants.hbar
RB87_MASS_KG = 86.909180531 * constants.atomic_mass
RB87_SCATTERING_LENGTH_M = 5.24e-9
AXES = ("x", "y", "z")

EDGE_TOLERANCE = 1e-8
DEFAULT_GRID_POINTS = 2048
DEFAULT_GRID_HALF_WIDTHS = 4.0


class GridTooSmallError(ValueError):
    pass


class NoBoundStateError(ValueError):
    pass


@dataclass(frozen=True)
class TweezerParams:
    depth_hz: float
    waist_m: float
    wavelength_m: float = 852e-9
    mass_kg: float = RB87_MASS_KG
    a_s_m: float = RB87_SCATTERING_LENGTH_M

    def __post_init__(self):
        for name in ("depth_hz", "waist_m", "wavelength_m", "mass_kg", "a_s_m"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"TweezerParams.{name} must be positive and finite, got {value!r}")
        radial_hz = _radial_omega(self) / (2 * np.pi)
        if self.depth_hz <= radial_hz / 2:
            raise ValueError(
                f"trap depth {self.depth_hz:.4g} Hz holds no bound state "
                f"(radial zero-point energy {radial_hz / 2:.4g} Hz)"
            )

    @property
    def rayleigh_range_m(self) -> float:
        return np.pi * self.waist_m**2 / self.wavelength_m

    def with_depth(self, depth_hz: float) -> "TweezerParams":
        return replace(self, depth_hz=depth_hz)


def _radial_omega(p: TweezerParams) -> float:
    return np.sqrt(4 * H * p.depth_hz / (p.mass_kg * p.waist_m**2))


@dataclass(frozen=True)
class HarmonicModes:
    omega: tuple[float, float, float]  # rad/s, ordered (x, y, z)
    r0: tuple[float, float, float]  # oscillator lengths, m

    def axis(self, name: str) -> tuple[float, float]:
        i = AXES.index(name)
        return self.omega[i], self.r0[i]


def harmonic_modes(p: TweezerParams) -> HarmonicModes:
    """Small-oscillation frequencies of the Gaussian focus: two radial, one axial."""
    u0 = H * p.depth_hz
    w_rad = np.sqrt(4 * u0 / (p.mass_kg * p.waist_m**2))
    w_ax = np.sqrt(2 * u0 / (p.mass_kg * p.rayleigh_range_m**2))
    omega = (w_rad, w_rad, w_ax)
    r0 = tuple(float(np.sqrt(HBAR / (p.mass_kg * w))) for w in omega)
    return HarmonicModes(omega=tuple(float(w) for w in omega), r0=r0)


def overlap_1d(n1: int, n2: int, r0: float) -> float:
    """Integral of |phi_n1|^2 |phi_n2|^2 over one axis for oscillator states n1, n2 in {0, 1}.

    Returns 1/(sqrt(2 pi) r0) for (0, 0) and exactly half of that when one of
    the two atoms is in the first excited state.
    """
    if n1 not in (0, 1) or n2 not in (0, 1):
        raise ValueError(f"only mode indices 0 and 1 are supported, got ({n1}, {n2})")
    if r0 <= 0:
        raise ValueError("oscillator length must be positive")
    base = 1.0 / (np.sqrt(2 * np.pi) * r0)
    excited = n1 + n2
    if excited == 0:
        return base
    if excited == 1:
        return base / 2
    return 3 * base / 4


def contact_prefactor(p: TweezerParams) -> float:
    """4 pi hbar^2 a_s / m, in J m^3."""
    return 4 * np.pi * HBAR**2 * p.a_s_m / p.mass_kg


def u_eg(p: TweezerParams, excited_axis: str = "x") -> float:
    """Ground/excited contact interaction energy in Hz, harmonic approximation."""
    if excited_axis not in AXES:
        raise ValueError(f"excited_axis must be one of {AXES}")
    modes = harmonic_modes(p)
    product = 1.0
    for axis, r0 in zip(AXES, modes.r0):
        product *= overlap_1d(0, 1 if axis == excited_axis else 0, r0)
    return contact_prefactor(p) * product / H


def u_gg(p: TweezerParams) -> float:
    """Both-ground contact interaction energy in Hz (twice u_eg)."""
    modes = harmonic_modes(p)
    product = np.prod([overlap_1d(0, 0, r0) for r0 in modes.r0])
    return contact_prefactor(p) * product / H


def j_ex(p: TweezerParams) -> float:
    """Spin-exchange frequency 2 U_eg in Hz for a radial (x) excitation."""
    return 2 * u_eg(p, "x")


@dataclass(frozen=True)
class NumericSpectrum1D:
    x: np.ndarray  # grid, m
    energies: np.ndarray  # Hz, relative to the potential asymptote
    wavefunctions: np.ndarray  # shape (n_states, n_grid), units m^-1/2

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def n_bound(self) -> int:
        return len(self.energies)

    def density_overlap(self, n1: int, n2: int) -> float:
        if max(n1, n2) >= self.n_bound:
            raise NoBoundStateError(f"spectrum holds {self.n_bound} states, need index {max(n1, n2)}")
        return float(np.sum(self.wavefunctions[n1] ** 2 * self.wavefunctions[n2] ** 2) * self.dx)


def sign_changes(psi: np.ndarray, rel_floor: float = 1e-10) -> int:
    """Number of nodes, ignoring tail values below ``rel_floor`` of the peak."""
    psi = np.asarray(psi)
    kept = psi[np.abs(psi) > rel_floor * np.max(np.abs(psi))]
    return int(np.count_nonzero(np.diff(np.sign(kept)) != 0))


def eigensolve_1d(
    potential_hz: np.ndarray,
    x: np.ndarray,
    mass_kg: float,
    n_check: int = 2,
    max_states: int | None = None,
) -> NumericSpectrum1D:
    """Bound states (E < 0) of a 1D potential on a uniform grid.

    Uses the three-point second-derivative stencil with hard walls just
    outside the grid. The lowest ``n_check`` states must have decayed below
    ``EDGE_TOLERANCE`` of their peak at both edges. ``max_states`` keeps only
    the lowest states, which is much cheaper for deep wells.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(potential_hz, dtype=float)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    t = HBAR**2 / (2 * mass_kg * dx**2) / H
    diag = v + 2 * t
    off = np.full(len(x) - 1, -t)
    n_bound = len(eigh_tridiagonal(diag, off, eigvals_only=True, select="v", select_range=(v.min() - 1.0, 0.0)))
    if n_bound == 0:
        raise NoBoundStateError("no state below the potential asymptote")
    if max_states is not None:
        n_bound = min(n_bound, max_states)
    energies, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_bound - 1))
    vecs = vecs.T / np.sqrt(dx)
    for k, psi in enumerate(vecs):
        lead = np.flatnonzero(np.abs(psi) > 1e-3 * np.max(np.abs(psi)))[0]
        if psi[lead] < 0:
            vecs[k] = -psi
    for k in range(min(n_check, len(energies))):
        peak = np.max(np.abs(vecs[k]))
        edge = max(abs(vecs[k, 0]), abs(vecs[k, -1])) / peak
        if edge > EDGE_TOLERANCE:
            raise GridTooSmallError(f"state {k} has relative edge amplitude {edge:.2e}; widen the grid")
    return NumericSpectrum1D(x=x, energies=energies, wavefunctions=vecs)


def _grid(half_width: float, n_points: int) -> np.ndarray:
    return np.linspace(-half_width, half_width, n_points)


def eigensolve_gaussian_1d(
    depth_hz: float,
    waist_m: float,
    mass_kg: float,
    n_points: int = DEFAULT_GRID_POINTS,
    half_width_m: float | None = None,
    max_states: int | None = None,
) -> NumericSpectrum1D:
    """Bound states of V(x) = -depth * exp(-2 x^2 / w0^2)."""
    if half_width_m is None:
        half_width_m = DEFAULT_GRID_HALF_WIDTHS * waist_m
    x = _grid(half_width_m, n_points)
    return eigensolve_1d(-depth_hz * np.exp(-2 * x**2 / waist_m**2), x, mass_kg, max_states=max_states)


def eigensolve_lorentzian_1d(
    depth_hz: float,
    rayleigh_m: float,
    mass_kg: float,
    n_points: int = DEFAULT_GRID_POINTS,
    half_width_m: float | None = None,
    max_states: int | None = None,
) -> NumericSpectrum1D:
    """Bound states of the on-axis profile V(z) = -depth / (1 + z^2 / z_R^2)."""
    if half_width_m is None:
        half_width_m = DEFAULT_GRID_HALF_WIDTHS * rayleigh_m
    z = _grid(half_width_m, n_points)
    return eigensolve_1d(-depth_hz / (1 + (z / rayleigh_m) ** 2), z, mass_kg, max_states=max_states)


def tweezer_spectra(
    p: TweezerParams, n_points: int = DEFAULT_GRID_POINTS, max_states: int | None = 2
) -> dict[str, NumericSpectrum1D]:
    """Radial (Gaussian) and axial (Lorentzian) 1D spectra keyed by axis."""
    radial = eigensolve_gaussian_1d(p.depth_hz, p.waist_m, p.mass_kg, n_points, max_states=max_states)
    axial = eigensolve_lorentzian_1d(p.depth_hz, p.rayleigh_range_m, p.mass_kg, n_points, max_states=max_states)
    return {"x": radial, "y": radial, "z": axial}


def harmonic_spectrum_1d(r0: float, omega: float, x: np.ndarray) -> NumericSpectrum1D:
    """Oscillator states 0 and 1 sampled on ``x``; energies (n + 1/2) hbar omega / h."""
    x = np.asarray(x, dtype=float)
    xi = x / r0
    g = np.exp(-(xi**2) / 2) / (np.pi**0.25 * np.sqrt(r0))
    psi = np.vstack([g, np.sqrt(2.0) * xi * g])
    energies = (np.arange(2) + 0.5) * omega / (2 * np.pi)
    return NumericSpectrum1D(x=x, energies=energies, wavefunctions=psi)


def u_eg_numeric(p: TweezerParams, spectra: dict[str, NumericSpectrum1D], excited_axis: str = "x") -> float:
    """U_eg in Hz from grid-quadrature density overlaps of the given 1D spectra."""
    if spectra[excited_axis].n_bound < 2:
        raise NoBoundStateError(f"axis {excited_axis} needs at least two bound states")
    product = 1.0
    for axis in AXES:
        product *= spectra[axis].density_overlap(0, 1 if axis == excited_axis else 0)
    return contact_prefactor(p) * product / H


def j_ex_numeric(p: TweezerParams, n_points: int = DEFAULT_GRID_POINTS) -> float:
    return 2 * u_eg_numeric(p, tweezer_spectra(p, n_points), "x")


def depth_over_trap_frequency(p: TweezerParams) -> float:
    """Trap depth in units of the radial harmonic quantum."""
    return p.depth_hz / (harmonic_modes(p).omega[0] / (2 * np.pi))
