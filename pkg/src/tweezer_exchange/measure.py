"""Populations, parity, the experimental error budget, shot sampling and sinusoid fits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, check_array

from .dynamics import GradientParams, PulseParams, gradient_evolve, microwave_pulse
from .qstate import DNDN, DNUP, UPDN, UPUP, check_density

OUTCOMES = ("upup", "updn", "dnup", "dndn", "loss")
LOSS = 4
PARITY_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])
WEIGHT_TOL = 1e-12


# --------------------------------------------------------------------------- observables


def spin_populations(rho) -> tuple[float, float, float, float]:
    rho = check_density(rho)
    p = np.real(np.diag(rho))
    return float(p[UPUP]), float(p[UPDN]), float(p[DNUP]), float(p[DNDN])


def parity(rho) -> float:
    """Even-minus-odd number of down spins, Tr(rho diag(1, -1, -1, 1))."""
    return float(np.dot(PARITY_SIGNS, spin_populations(rho)))


def readout_map(g: GradientParams, t_g: float, pulse: PulseParams) -> Callable[[np.ndarray], np.ndarray]:
    """Gradient for ``t_g`` followed by the global pulse, as a state map."""

    def apply(rho):
        return microwave_pulse(gradient_evolve(rho, g, t_g), pulse)

    return apply


def parity_after_readout(rho, g: GradientParams, t_g: float, pulse: PulseParams) -> float:
    return parity(readout_map(g, t_g, pulse)(rho))


# --------------------------------------------------------------------------- error model


@dataclass(frozen=True)
class ErrorModel:
    """Scalar imperfections of the protocol.

    ``pair_coherence`` is the fraction of the left/right spin coherence that
    survives in the successful branch; it does not affect populations and so
    only shows up in parity measurements.
    """

    p_upup: float = 0.0
    p_dndn: float = 0.0
    ground_fraction: float = 1.0
    ap_success_f: float = 1.0
    survival: float = 1.0
    pair_coherence: float = 1.0

    def __post_init__(self):
        for name in ("p_upup", "p_dndn", "ground_fraction", "ap_success_f", "survival", "pair_coherence"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"ErrorModel.{name} must lie in [0, 1], got {value!r}")
        if self.p_upup + self.p_dndn > 1.0:
            raise ValueError("p_upup + p_dndn must not exceed 1")

    @property
    def p_aligned(self) -> float:
        return self.p_upup + self.p_dndn

    @property
    def coherent_fraction(self) -> float:
        """Weight of the branch that carries the exchange signal, given correct preparation."""
        return self.ground_fraction**2 * self.ap_success_f


IDEAL = ErrorModel()

BACKGROUND_STATE = np.diag([0.0, 0.5, 0.5, 0.0]).astype(complex)

# Conjugation flipping the sign of the |updn> amplitude; mixing with it damps
# the left/right coherence.
_PAIR_FLIP = np.diag([1.0, -1.0, 1.0, 1.0]).astype(complex)


def damp_pair_coherence(rho, kappa: float) -> np.ndarray:
    rho = check_density(rho)
    return 0.5 * (1 + kappa) * rho + 0.5 * (1 - kappa) * (_PAIR_FLIP @ rho @ _PAIR_FLIP)


@dataclass(frozen=True)
class OutcomeDistribution:
    probabilities: np.ndarray  # over OUTCOMES
    weights: dict = field(default_factory=dict)  # branch name -> weight, sums to 1

    def __getitem__(self, outcome: str) -> float:
        return float(self.probabilities[OUTCOMES.index(outcome)])

    def parity(self, loss_as_even: bool = False) -> float:
        return outcome_parity(self.probabilities, loss_as_even)


def outcome_parity(probabilities, loss_as_even: bool = False) -> float:
    p = np.asarray(probabilities, dtype=float)
    signed = float(np.dot(PARITY_SIGNS, p[:4]))
    if loss_as_even:
        return signed + float(p[LOSS])
    kept = float(np.sum(p[:4]))
    if kept <= 0:
        raise ValueError("parity undefined: every shot is a loss")
    return signed / kept


def apply_error_model(
    rho_success,
    em: ErrorModel,
    readout: Callable[[np.ndarray], np.ndarray] | None = None,
    postselect_prep: bool = False,
    background=None,
) -> OutcomeDistribution:
    """Mix the protocol branches into a distribution over OUTCOMES.

    Branches, before loss:

    * success: correct preparation, both atoms in the motional ground state
      and the passages leave one atom per tweezer. State ``rho_success``
      (with its pair coherence damped by ``em.pair_coherence``).
    * aligned: |upup> or |dndn> preparation, stationary through exchange.
    * background: motional excitation or passage failure. A t_g-independent
      anti-aligned mixture (``background``, default diag(0, 1/2, 1/2, 0)).

    Every branch goes through ``readout`` before its populations are taken.
    Either atom being lost yields the ``loss`` outcome. With
    ``postselect_prep`` the aligned-preparation branch is removed and the
    rest renormalised, which is how post-selection on spin preparation acts.
    """
    readout = readout or (lambda r: r)
    background = BACKGROUND_STATE if background is None else background
    correct = 1.0 - em.p_aligned
    w_up, w_dn = em.p_upup, em.p_dndn
    if postselect_prep:
        if correct <= 0:
            raise ValueError("post-selection on preparation leaves nothing")
        correct, w_up, w_dn = 1.0, 0.0, 0.0
    w_success = correct * em.coherent_fraction
    w_background = correct * (1.0 - em.coherent_fraction)

    rho_s = damp_pair_coherence(rho_success, em.pair_coherence)
    spin = np.zeros(4)
    for w, rho in (
        (w_success, rho_s),
        (w_background, background),
        (w_up, np.diag([1.0, 0, 0, 0]).astype(complex)),
        (w_dn, np.diag([0, 0, 0, 1.0]).astype(complex)),
    ):
        if w > 0:
            spin += w * np.array(spin_populations(readout(rho)))

    keep = em.survival**2
    probs = np.append(keep * spin, 1.0 - keep)
    weights = {
        "success": keep * w_success,
        "aligned": keep * (w_up + w_dn),
        "background": keep * w_background,
        "loss": 1.0 - keep,
    }
    total = sum(weights.values())
    assert abs(total - 1.0) < WEIGHT_TOL, f"branch weights sum to {total!r}"
    assert abs(probs.sum() - 1.0) < WEIGHT_TOL, f"outcome probabilities sum to {probs.sum()!r}"
    return OutcomeDistribution(probabilities=np.clip(probs, 0.0, 1.0), weights=weights)


def predicted_exchange_contrast(em: ErrorModel) -> float:
    """Peak-to-peak of the post-selected P(updn) exchange oscillation.

    Lost atoms stay in the denominator, so this equals
    ground_fraction^2 * ap_success_f * survival^2.
    """
    up_dn = np.diag([0, 1.0, 0, 0]).astype(complex)
    dn_up = np.diag([0, 0, 1.0, 0]).astype(complex)
    hi = apply_error_model(up_dn, em, postselect_prep=True)["updn"]
    lo = apply_error_model(dn_up, em, postselect_prep=True)["updn"]
    return hi - lo


def predicted_parity_contrast(em: ErrorModel, eps_abs: float = 0.5) -> float:
    """Peak-to-peak parity for a success-branch coherence |eps|, loss excluded.

    Only the success branch oscillates with t_g, so the contrast is
    4 |eps| (1 - p_aligned) g^2 f kappa.
    """
    return 4 * eps_abs * (1 - em.p_aligned) * em.coherent_fraction * em.pair_coherence


def calibrate_pair_coherence(em: ErrorModel, target_contrast: float, eps_abs: float = 0.5) -> float:
    """The pair coherence that makes ``predicted_parity_contrast`` hit ``target_contrast``."""
    full = 4 * eps_abs * (1 - em.p_aligned) * em.coherent_fraction
    kappa = target_contrast / full
    if not 0 <= kappa <= 1:
        raise ValueError(f"target contrast {target_contrast} needs pair coherence {kappa:.3f} outside [0, 1]")
    return kappa


# --------------------------------------------------------------------------- shots


@dataclass(frozen=True)
class ShotRecord:
    outcomes: np.ndarray  # integer codes indexing OUTCOMES
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.outcomes, minlength=len(OUTCOMES))

    @classmethod
    def from_counts(cls, counts, seed=None) -> "ShotRecord":
        return cls(np.repeat(np.arange(len(OUTCOMES)), np.asarray(counts, dtype=int)), seed)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["shot", "outcome", "seed"])
            for i, code in enumerate(self.outcomes):
                w.writerow([i, OUTCOMES[code], "" if self.seed is None else self.seed])

    @classmethod
    def from_csv(cls, path) -> "ShotRecord":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        seed = rows[0]["seed"] if rows else ""
        codes = np.array([OUTCOMES.index(r["outcome"]) for r in rows], dtype=np.int8)
        return cls(codes, int(seed) if seed else None)


def sample_shots(distribution, n: int, seed: int) -> ShotRecord:
    p = np.asarray(getattr(distribution, "probabilities", distribution), dtype=float)
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {p.sum()!r}")
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(len(OUTCOMES), size=n, p=p / p.sum()).astype(np.int8)
    return ShotRecord(outcomes, seed)


@dataclass(frozen=True)
class PostSelection:
    record: ShotRecord
    retained_fraction: float

    @property
    def empty(self) -> bool:
        return self.record.n == 0


def postselect_antialigned(record: ShotRecord, keep_loss: bool = False) -> PostSelection:
    """Drop shots read out as aligned spins.

    By default only updn/dnup survive. ``keep_loss`` also keeps lost-atom
    shots, which is the right choice when the post-selection stands in for
    knowledge of the spin preparation rather than for the final readout.
    """
    keep = np.isin(record.outcomes, [UPDN, DNUP, LOSS] if keep_loss else [UPDN, DNUP])
    fraction = float(keep.mean()) if record.n else 0.0
    return PostSelection(ShotRecord(record.outcomes[keep], record.seed), fraction)


def _counts(record_or_counts) -> np.ndarray:
    if isinstance(record_or_counts, PostSelection):
        if record_or_counts.empty:
            raise ValueError("post-selected record is empty")
        record_or_counts = record_or_counts.record
    if isinstance(record_or_counts, ShotRecord):
        return record_or_counts.counts
    c = np.zeros(len(OUTCOMES), dtype=int)
    given = np.asarray(record_or_counts, dtype=int)
    c[: len(given)] = given
    return c


def binomial_se(p: float, n: int) -> float:
    """sqrt(p(1-p)/n), floored at 1/n so that extreme estimates keep a finite weight."""
    return max(float(np.sqrt(max(p * (1 - p), 0.0) / n)), 1.0 / n)


def estimate_parity(record, loss_as_even: bool = False) -> tuple[float, float]:
    """Parity estimate and its binomial standard error sqrt((1 - Pi^2)/N).

    Lost-atom shots are left out unless ``loss_as_even``.
    """
    c = _counts(record)
    even = c[UPUP] + c[DNDN] + (c[LOSS] if loss_as_even else 0)
    odd = c[UPDN] + c[DNUP]
    n = even + odd
    if n == 0:
        raise ValueError("no usable shots for a parity estimate")
    pi = (even - odd) / n
    return float(pi), float(np.sqrt(max(1 - pi**2, 0.0) / n))


def estimate_fraction(record, outcome: str) -> tuple[float, float]:
    """Fraction of shots with ``outcome`` and its binomial standard error."""
    c = _counts(record)
    n = int(c.sum())
    if n == 0:
        raise ValueError("empty record")
    p = c[OUTCOMES.index(outcome)] / n
    return float(p), binomial_se(p, n)


# --------------------------------------------------------------------------- parity scans and fits


@dataclass(frozen=True)
class ParityScan:
    t_g: np.ndarray
    parity: np.ndarray
    se: np.ndarray
    delta_hz: float

    def __post_init__(self):
        if np.any(np.abs(self.parity) > 1 + 1e-12):
            raise ValueError("parity estimates must lie in [-1, 1]")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_g_s", "parity", "parity_se", "delta_hz"])
            for row in zip(self.t_g, self.parity, self.se):
                w.writerow([f"{v:.17g}" for v in row] + [f"{self.delta_hz:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "ParityScan":
        with open(Path(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
        return cls(col("t_g_s"), col("parity"), col("parity_se"), float(rows[0]["delta_hz"]))


@dataclass(frozen=True)
class ContrastFit:
    contrast: float  # peak-to-peak, twice the sinusoid amplitude
    phase: float
    offset: float
    residual_norm: float
    contrast_se: float
    phase_se: float = float("nan")
    offset_se: float = float("nan")
    frequency_hz: float = float("nan")
    frequency_se: float = float("nan")


class SinusoidRegressor(RegressorMixin, BaseEstimator):
    """Weighted least-squares fit of y = A cos(2 pi nu t + phi) + c with A >= 0.

    With ``frequency`` given the problem is linear in (A cos phi, A sin phi, c).
    With ``frequency=None`` the frequency is found by scanning ``n_grid``
    trial frequencies up to the Nyquist-like limit of the sampling and then
    refined jointly with the other parameters.

    Parameter standard errors come from the linearised covariance. With
    ``absolute_sigma`` the weights are taken as 1/sigma^2 literally; otherwise
    the covariance is rescaled by the reduced chi-square.
    """

    def __init__(self, frequency=None, n_grid=4000, absolute_sigma=True, min_points=4):
        self.frequency = frequency
        self.n_grid = n_grid
        self.absolute_sigma = absolute_sigma
        self.min_points = min_points

    @staticmethod
    def _design(t, nu):
        w = 2 * np.pi * nu * t
        return np.column_stack([np.cos(w), np.sin(w), np.ones_like(t)])

    def _linear(self, t, y, sw, nu):
        a = self._design(t, nu) * np.sqrt(sw)[:, None]
        coef, *_ = np.linalg.lstsq(a, y * np.sqrt(sw), rcond=None)
        r = y - self._design(t, nu) @ coef
        return coef, float(np.sum(sw * r**2))

    def fit(self, X, y, sample_weight=None):
        X, y = check_X_y(np.reshape(X, (-1, 1)) if np.ndim(X) == 1 else X, y, y_numeric=True)
        t = X[:, 0]
        n = len(t)
        if n < self.min_points:
            raise ValueError(f"need at least {self.min_points} points, got {n}")
        sw = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)

        if self.frequency is not None:
            nu = float(self.frequency)
            a = self._design(t, nu)
            if np.linalg.matrix_rank(a * np.sqrt(sw)[:, None]) < 3:
                raise ValueError("degenerate design matrix: sampling does not resolve the sinusoid")
            coef, _ = self._linear(t, y, sw, nu)
            params = np.array([coef[0], coef[1], coef[2]])
            jac = a
        else:
            span = np.ptp(t)
            if span <= 0:
                raise ValueError("degenerate design matrix: all abscissae equal")
            dt_min = np.min(np.diff(np.unique(t)))
            grid = np.linspace(0.5 / span, 0.5 / dt_min, self.n_grid)
            costs = [self._linear(t, y, sw, nu)[1] for nu in grid]
            nu0 = grid[int(np.argmin(costs))]
            coef0, _ = self._linear(t, y, sw, nu0)

            def resid(p):
                return np.sqrt(sw) * (y - self._design(t, p[3]) @ p[:3])

            sol = least_squares(resid, np.append(coef0, nu0), x_scale="jac")
            params = sol.x[:3]
            nu = float(sol.x[3])
            w = 2 * np.pi * nu * t
            dnu = 2 * np.pi * t * (-params[0] * np.sin(w) + params[1] * np.cos(w))
            jac = np.column_stack([self._design(t, nu), dnu])

        resid = y - self._design(t, nu) @ params[:3]
        chi2 = float(np.sum(sw * resid**2))
        fisher = jac.T @ (jac * sw[:, None])
        cov = np.linalg.pinv(fisher)
        dof = n - jac.shape[1]
        if not self.absolute_sigma and dof > 0:
            cov = cov * chi2 / dof

        a_c, b_c, c = params[:3]
        amp = float(np.hypot(a_c, b_c))
        if amp > 0:
            g = np.zeros(jac.shape[1])
            g[0], g[1] = a_c / amp, b_c / amp
            amp_var = g @ cov @ g
            gp = np.zeros(jac.shape[1])
            gp[0], gp[1] = b_c / amp**2, -a_c / amp**2
            phase_var = gp @ cov @ gp
        else:
            amp_var = max(cov[0, 0], cov[1, 1])
            phase_var = np.inf

        self.frequency_ = nu
        self.amplitude_ = amp
        self.phase_ = float(np.arctan2(-b_c, a_c))
        self.offset_ = float(c)
        self.coef_ = np.asarray(params[:3])
        self.covariance_ = cov
        self.amplitude_se_ = float(np.sqrt(max(amp_var, 0.0)))
        self.phase_se_ = float(np.sqrt(max(phase_var, 0.0)))
        self.offset_se_ = float(np.sqrt(max(cov[2, 2], 0.0)))
        self.frequency_se_ = float(np.sqrt(max(cov[3, 3], 0.0))) if self.frequency is None else 0.0
        self.residual_norm_ = float(np.sqrt(chi2))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(np.reshape(X, (-1, 1)) if np.ndim(X) == 1 else X)
        return self._design(X[:, 0], self.frequency_) @ self.coef_

    def contrast_fit(self) -> ContrastFit:
        check_is_fitted(self, "coef_")
        return ContrastFit(
            contrast=2 * self.amplitude_,
            phase=self.phase_,
            offset=self.offset_,
            residual_norm=self.residual_norm_,
            contrast_se=2 * self.amplitude_se_,
            phase_se=self.phase_se_,
            offset_se=self.offset_se_,
            frequency_hz=self.frequency_,
            frequency_se=self.frequency_se_,
        )


def _weights(se) -> np.ndarray | None:
    se = np.asarray(se, dtype=float)
    if np.all(se > 0):
        return 1.0 / se**2
    return None


def fit_parity_scan(scan: ParityScan) -> ContrastFit:
    """Contrast of a parity scan at the known gradient frequency.

    Needs at least six points covering one full gradient period.
    """
    t = np.asarray(scan.t_g, dtype=float)
    if len(t) < 6:
        raise ValueError(f"need at least 6 scan points, got {len(t)}")
    if np.ptp(t) * abs(scan.delta_hz) < 1 - 1e-9:
        raise ValueError("scan must span at least one gradient period")
    model = SinusoidRegressor(frequency=scan.delta_hz, min_points=6)
    model.fit(t, scan.parity, sample_weight=_weights(scan.se))
    return model.contrast_fit()


def fit_oscillation(t, y, se=None, frequency=None) -> ContrastFit:
    """Sinusoid fit with free frequency unless ``frequency`` is given."""
    model = SinusoidRegressor(frequency=frequency)
    model.fit(np.asarray(t, float), np.asarray(y, float), sample_weight=None if se is None else _weights(se))
    return model.contrast_fit()
