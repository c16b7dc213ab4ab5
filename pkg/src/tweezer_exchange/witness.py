"""Entanglement certification from a parity contrast and aligned-spin populations.

For a state with no coherence between different total S^z, the parity
contrast is C = 4|eps| with eps the updn/dnup coherence, and the state is
entangled exactly when C > 4 sqrt(P_upup P_dndn).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .qstate import DNUP, UPDN, check_density

SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


@dataclass(frozen=True)
class CertificationInput:
    contrast: float
    contrast_err: float
    p_upup: float
    p_upup_err: float
    p_dndn: float
    p_dndn_err: float
    ap_success_f: float | None = None
    ap_success_f_err: float = 0.0

    def __post_init__(self):
        if self.contrast < 0:
            raise ValueError("contrast must be non-negative")
        for name in ("p_upup", "p_dndn"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.ap_success_f is not None and not 0 < self.ap_success_f <= 1:
            raise ValueError("ap_success_f must lie in (0, 1]")
        for name in ("contrast_err", "p_upup_err", "p_dndn_err", "ap_success_f_err"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CertificationResult:
    contrast: float
    contrast_err: float
    c_bound: float
    c_bound_err: float
    entangled: bool
    sigma_separation: float
    fidelity: float
    fidelity_witness: bool
    concurrence_lower: float
    f_succ: float | None = None
    f_succ_err: float | None = None
    mc_sigma: float | None = None  # Monte Carlo equivalent of the separation, if requested

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def epsilon_coherence(rho) -> tuple[float, float]:
    """Modulus and phase of the <updn|rho|dnup> coherence."""
    eps = check_density(rho)[UPDN, DNUP]
    return float(abs(eps)), float(np.angle(eps))


def contrast_bound(p_upup: float, p_dndn: float) -> float:
    """Largest parity contrast a separable state with these aligned populations can show."""
    return 4.0 * float(np.sqrt(p_upup * p_dndn))


def contrast_bound_err(p_upup: float, p_upup_err: float, p_dndn: float, p_dndn_err: float) -> float:
    """First-order uncertainty of ``contrast_bound``.

    The derivative blows up at a zero population; there the bound's error is
    taken from the linear term alone (4 sqrt(p_other * err)).
    """
    if p_upup > 0 and p_dndn > 0:
        d_up = 2 * np.sqrt(p_dndn / p_upup)
        d_dn = 2 * np.sqrt(p_upup / p_dndn)
        return float(np.hypot(d_up * p_upup_err, d_dn * p_dndn_err))
    return float(np.hypot(4 * np.sqrt(p_dndn * p_upup_err), 4 * np.sqrt(p_upup * p_dndn_err)))


@dataclass(frozen=True)
class FidelityWitness:
    fidelity: float
    entangled: bool  # F > 1/2
    contrast_threshold: float  # the equivalent condition C > 2 (P_upup + P_dndn)


def fidelity_from_contrast(c: float, p_upup: float, p_dndn: float) -> FidelityWitness:
    """Overlap with (|updn> + i|dnup>)/sqrt(2) implied by contrast and populations."""
    f = 0.5 + c / 4 - 0.5 * (p_upup + p_dndn)
    return FidelityWitness(fidelity=float(f), entangled=f > 0.5, contrast_threshold=2 * (p_upup + p_dndn))


@dataclass(frozen=True)
class SuccessFidelity:
    f_succ: float
    entangled: bool  # F_succ > 1/2, i.e. actual fidelity F > f/2
    actual_fidelity: float  # f * F_succ
    actual_threshold: float  # f / 2


def f_succ_correction(c: float, f: float, p_upup: float, p_dndn: float) -> SuccessFidelity:
    """Fidelity of the one-atom-per-tweezer projection, using 4|eps| = C/f."""
    if f <= 0:
        raise ValueError("passage success probability must be positive")
    corrected = c / f
    if corrected > 2 + 1e-12:
        raise ValueError(f"C/f = {corrected:.4f} exceeds 2, i.e. |eps| > 1/2")
    w = fidelity_from_contrast(corrected, p_upup, p_dndn)
    return SuccessFidelity(
        f_succ=w.fidelity, entangled=w.entangled, actual_fidelity=f * w.fidelity, actual_threshold=f / 2
    )


def f_succ_err(inp: CertificationInput) -> float:
    f = inp.ap_success_f
    return float(
        np.sqrt(
            (inp.contrast_err / (4 * f)) ** 2
            + (inp.contrast * inp.ap_success_f_err / (4 * f**2)) ** 2
            + (inp.p_upup_err / 2) ** 2
            + (inp.p_dndn_err / 2) ** 2
        )
    )


def concurrence_lower(c: float, p_upup: float, p_dndn: float) -> float:
    return max(0.0, 0.5 * (c - contrast_bound(p_upup, p_dndn)))


def certify(inp: CertificationInput, mc_samples: int = 0, seed: int = 0) -> CertificationResult:
    """Compare the contrast with the separability bound.

    The separation divides the margin by the quadrature sum of the contrast
    error and the delta-method error of the bound. ``mc_samples > 0`` also
    resamples the inputs as independent normals (populations clipped at
    zero) and reports the one-sided normal quantile of the fraction of
    draws that stay above the bound.
    """
    bnd = contrast_bound(inp.p_upup, inp.p_dndn)
    bnd_err = contrast_bound_err(inp.p_upup, inp.p_upup_err, inp.p_dndn, inp.p_dndn_err)
    spread = float(np.hypot(inp.contrast_err, bnd_err))
    margin = inp.contrast - bnd
    if spread > 0:
        sep = margin / spread
    else:
        sep = float(np.sign(margin)) * np.inf if margin else 0.0
    fw = fidelity_from_contrast(inp.contrast, inp.p_upup, inp.p_dndn)

    f_s = f_s_err = None
    if inp.ap_success_f is not None:
        f_s = f_succ_correction(inp.contrast, inp.ap_success_f, inp.p_upup, inp.p_dndn).f_succ
        f_s_err = f_succ_err(inp)

    mc_sigma = None
    if mc_samples > 0:
        rng = np.random.default_rng(seed)
        c = rng.normal(inp.contrast, inp.contrast_err, mc_samples)
        pu = np.clip(rng.normal(inp.p_upup, inp.p_upup_err, mc_samples), 0, 1)
        pd = np.clip(rng.normal(inp.p_dndn, inp.p_dndn_err, mc_samples), 0, 1)
        above = np.mean(c > 4 * np.sqrt(pu * pd))
        above = min(above, 1 - 0.5 / mc_samples)
        mc_sigma = float(norm.ppf(above))

    return CertificationResult(
        contrast=inp.contrast,
        contrast_err=inp.contrast_err,
        c_bound=bnd,
        c_bound_err=bnd_err,
        entangled=bool(inp.contrast > bnd),
        sigma_separation=float(sep),
        fidelity=fw.fidelity,
        fidelity_witness=fw.entangled,
        concurrence_lower=concurrence_lower(inp.contrast, inp.p_upup, inp.p_dndn),
        f_succ=f_s,
        f_succ_err=f_s_err,
        mc_sigma=mc_sigma,
    )


def partial_transpose(rho, subsystem: int = 1) -> np.ndarray:
    """Partial transpose of a two-qubit matrix over the left (0) or right (1) slot."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if subsystem == 1:
        r = r.transpose(0, 3, 2, 1)
    elif subsystem == 0:
        r = r.transpose(2, 1, 0, 3)
    else:
        raise ValueError("subsystem must be 0 or 1")
    return r.reshape(4, 4)


def ppt_min_eigenvalue(rho) -> float:
    """Smallest eigenvalue of the partial transpose; negative iff a two-qubit state is entangled."""
    rho = check_density(rho)
    return float(np.linalg.eigvalsh(partial_transpose(rho, 1))[0])


def wootters_concurrence(rho) -> float:
    rho = check_density(rho)
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
