"""Two-atom spin states: basis bookkeeping, density-matrix checks and Bloch vectors.

States are plain numpy arrays. A pure state is a length-4 complex vector and a
density matrix is a 4x4 complex array, both over the ordered product basis

    0: |up, up>   1: |up, dn>   2: |dn, up>   3: |dn, dn>

where the first slot is the left tweezer (or the motionally excited atom ``e``
when both atoms share a tweezer) and the second slot is the right tweezer (or
``g``). The module never looks at what the slot labels mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UP, DN = "up", "dn"

UPUP, UPDN, DNUP, DNDN = 0, 1, 2, 3
BASIS_LABELS = ("upup", "updn", "dnup", "dndn")
_INDEX = {(UP, UP): UPUP, (UP, DN): UPDN, (DN, UP): DNUP, (DN, DN): DNDN}
_SLOTS = {v: k for k, v in _INDEX.items()}

ALGEBRA_TOL = 1e-12
POSITIVITY_TOL = 1e-10
DEGENERATE_WEIGHT = 1e-9

SQRT_HALF = 1.0 / np.sqrt(2.0)


class ValidationError(ValueError):
    """Raised when a state violates one of its invariants."""


class DegenerateSubspaceError(ValueError):
    """Raised when the anti-aligned block carries (almost) no weight."""


def basis_index(left: str, right: str) -> int:
    return _INDEX[(left, right)]


def basis_slots(index: int) -> tuple[str, str]:
    return _SLOTS[index]


def ket(label: str) -> np.ndarray:
    """Basis vector for ``"upup"``, ``"updn"``, ``"dnup"`` or ``"dndn"``."""
    psi = np.zeros(4, dtype=complex)
    psi[BASIS_LABELS.index(label)] = 1.0
    return psi


def singlet() -> np.ndarray:
    return SQRT_HALF * (ket("updn") - ket("dnup"))


def triplet() -> np.ndarray:
    """The m=0 triplet (|updn> + |dnup>)/sqrt(2)."""
    return SQRT_HALF * (ket("updn") + ket("dnup"))


def psi_plus() -> np.ndarray:
    """(|updn> + i|dnup>)/sqrt(2), the state reached after a quarter exchange period."""
    return SQRT_HALF * (ket("updn") + 1j * ket("dnup"))


def psi_minus() -> np.ndarray:
    return SQRT_HALF * (ket("updn") - 1j * ket("dnup"))


def maximally_mixed() -> np.ndarray:
    return np.eye(4, dtype=complex) / 4.0


def check_pure(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (4,):
        raise ValidationError(f"pure state must have 4 amplitudes, got shape {psi.shape}")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > ALGEBRA_TOL:
        raise ValidationError(f"pure state not normalized: sum |a|^2 = {norm!r}")
    return psi


def density_from_pure(psi) -> np.ndarray:
    psi = check_pure(psi)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class Violation:
    invariant: str  # "shape", "hermiticity", "trace" or "positivity"
    magnitude: float

    def __str__(self) -> str:
        return f"{self.invariant} violated by {self.magnitude:.3e}"


def validate(rho) -> list[Violation]:
    """Report every density-matrix invariant that ``rho`` breaks.

    An empty list means the matrix is a valid state. The magnitudes are the
    max-norm Hermiticity defect, the trace defect, and minus the smallest
    eigenvalue of the Hermitian part.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        return [Violation("shape", float("inf"))]
    found = []
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > ALGEBRA_TOL:
        found.append(Violation("hermiticity", float(herm)))
    tr = abs(np.trace(rho) - 1.0)
    if tr > ALGEBRA_TOL:
        found.append(Violation("trace", float(tr)))
    min_eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if min_eig < -POSITIVITY_TOL:
        found.append(Violation("positivity", float(-min_eig)))
    return found


def check_density(rho) -> np.ndarray:
    """Return ``rho`` as a complex array, raising ValidationError if it is not a state."""
    problems = validate(rho)
    if problems:
        raise ValidationError("; ".join(str(p) for p in problems))
    return np.asarray(rho, dtype=complex)


def x_state(p_upup: float, p_updn: float, p_dnup: float, p_dndn: float, eps: complex) -> np.ndarray:
    """Density matrix with the four populations and a single updn/dnup coherence.

    This is the most general state with no coherence between different total
    S^z sectors. Positivity requires |eps|^2 <= p_updn * p_dnup.
    """
    rho = np.diag([p_upup, p_updn, p_dnup, p_dndn]).astype(complex)
    rho[UPDN, DNUP] = eps
    rho[DNUP, UPDN] = np.conj(eps)
    return rho


@dataclass(frozen=True)
class BlochVector:
    """Bloch vector of the effective qubit spanned by |updn> (north pole) and |dnup>."""

    x: float
    y: float
    z: float

    @property
    def azimuth(self) -> float:
        return float(np.arctan2(self.y, self.x))

    @property
    def length(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def bloch_vector(rho) -> BlochVector:
    rho = check_density(rho)
    weight = (rho[UPDN, UPDN] + rho[DNUP, DNUP]).real
    if weight < DEGENERATE_WEIGHT:
        raise DegenerateSubspaceError(f"anti-aligned block weight {weight:.3e} too small")
    coh = rho[UPDN, DNUP]
    return BlochVector(
        x=float(2.0 * coh.real / weight),
        y=float(-2.0 * coh.imag / weight),
        z=float((rho[UPDN, UPDN] - rho[DNUP, DNUP]).real / weight),
    )


# Rows are the new basis vectors (upup, S, T, dndn) written in the product basis.
SINGLET_TRIPLET_BASIS = np.array(
    [
        [1, 0, 0, 0],
        [0, SQRT_HALF, -SQRT_HALF, 0],
        [0, SQRT_HALF, SQRT_HALF, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)


def singlet_triplet_transform(rho) -> np.ndarray:
    """Rewrite ``rho`` in the ordered basis (upup, S, T, dndn)."""
    rho = check_density(rho)
    v = SINGLET_TRIPLET_BASIS
    return v @ rho @ v.conj().T


def singlet_triplet_inverse(rho_st) -> np.ndarray:
    rho_st = check_density(rho_st)
    v = SINGLET_TRIPLET_BASIS
    return v.conj().T @ rho_st @ v


def overlap_up_to_phase(psi, phi) -> float:
    """|<psi|phi>|, the phase-insensitive overlap used to compare rays."""
    return float(abs(np.vdot(np.asarray(psi, complex), np.asarray(phi, complex))))
