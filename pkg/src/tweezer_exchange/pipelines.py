"""End-to-end simulated measurement runs that emit plot-ready tables.

Each grid point is simulated independently with seed ``cfg.seed + index``
(offset by the point count of earlier depths in a depth sweep), so runs are
bit-reproducible and points could be evaluated in any order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ExperimentConfig
from .dynamics import (
    ExchangeParams,
    arp_round_trip,
    collective_dephase,
    exchange_evolve_rho,
    singlet_triplet_phase,
)
from .measure import (
    ContrastFit,
    ErrorModel,
    apply_error_model,
    estimate_fraction,
    estimate_parity,
    fit_oscillation,
    fit_parity_scan,
    ParityScan,
    postselect_antialigned,
    readout_map,
    sample_shots,
)
from .potential import GridTooSmallError, NoBoundStateError, depth_over_trap_frequency, j_ex, j_ex_numeric
from .qstate import density_from_pure, ket
from .witness import CertificationInput, CertificationResult, certify

BRANCH_COLUMNS = ("w_success", "w_aligned", "w_background", "w_loss")


@dataclass
class CurveOutput:
    columns: tuple
    rows: list
    fits: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(v)
    return f"{float(v):.17g}"


def _branches(dist) -> list:
    return [dist.weights[k] for k in ("success", "aligned", "background", "loss")]


def ap_channel_phase(cfg: ExperimentConfig) -> float:
    """Exchange-convention triplet phase contributed by the forward and reverse passages.

    The passage Hamiltonian advances the (higher-energy) triplet phase
    backwards, while the exchange map used here advances it forwards, hence
    the sign flip.
    """
    if not cfg.track_ap_phase:
        return 0.0
    return -arp_round_trip(cfg.ramp, cfg.ramp_dt_s).channel_phase


def exchange_state(cfg: ExperimentConfig, t: float, j_ex_hz: float | None = None, ap_phase: float = 0.0) -> np.ndarray:
    """Spin state of the success branch after exchange for ``t`` and separation."""
    j = cfg.j_ex_hz if j_ex_hz is None else j_ex_hz
    rho = exchange_evolve_rho(density_from_pure(ket("updn")), ExchangeParams(j), t)
    if ap_phase:
        rho = singlet_triplet_phase(rho, ap_phase)
    return collective_dephase(rho, cfg.dephasing)


def _exchange_rows(cfg, em: ErrorModel, times, j, seed0, ap_phase):
    rows = []
    for k, t in enumerate(times):
        rho = exchange_state(cfg, t, j, ap_phase)
        dist = apply_error_model(rho, em, postselect_prep=cfg.postselect)
        record = sample_shots(dist, cfg.shots, seed0 + k)
        kept = postselect_antialigned(record, keep_loss=True) if cfg.postselect else None
        source = kept.record if kept is not None else record
        if source.n == 0:
            p_ud = se_ud = p_du = se_du = float("nan")
        else:
            p_ud, se_ud = estimate_fraction(source, "updn")
            p_du, se_du = estimate_fraction(source, "dnup")
        retained = kept.retained_fraction if kept is not None else 1.0
        norm = 1.0 - (dist["upup"] + dist["dndn"] if cfg.postselect else 0.0)
        rows.append(
            (t, p_ud, se_ud, p_du, se_du, dist["updn"] / norm, dist["dnup"] / norm, retained, *_branches(dist))
        )
    return rows


EXCHANGE_COLUMNS = (
    "t_s",
    "p_updn",
    "p_updn_se",
    "p_dnup",
    "p_dnup_se",
    "p_updn_expected",
    "p_dnup_expected",
    "retained_fraction",
) + BRANCH_COLUMNS


def pipeline_exchange_scan(cfg: ExperimentConfig) -> CurveOutput:
    """Spin populations versus exchange time, post-selected on spin preparation.

    The fitted ``contrast`` (peak-to-peak of P(updn)) and ``frequency_hz`` are
    returned in ``fits["updn"]``.
    """
    j = cfg.j_ex_hz
    times = cfg.exchange_times(j)
    phase = ap_channel_phase(cfg)
    rows = _exchange_rows(cfg, cfg.error_model, times, j, cfg.seed, phase)
    out = CurveOutput(EXCHANGE_COLUMNS, rows, meta={"j_ex_hz": j, "ap_phase_rad": phase})
    if len(times) >= 4:
        out.fits["updn"] = fit_oscillation(times, out.column("p_updn"), out.column("p_updn_se"))
    return out


DEPTH_COLUMNS = (
    "depth_hz",
    "depth_over_trap_quantum",
    "j_ex_harmonic_hz",
    "j_ex_numeric_hz",
    "numeric_ok",
    "j_ex_fit_hz",
    "j_ex_fit_se_hz",
)


def pipeline_depth_sweep(cfg: ExperimentConfig) -> CurveOutput:
    """Exchange frequency against tweezer depth, harmonic and numeric, with optional simulated fits."""
    rows = []
    offset = cfg.seed
    for depth in cfg.depths_hz:
        trap = cfg.trap.with_depth(depth)
        j_h = j_ex(trap)
        try:
            j_n, ok = j_ex_numeric(trap, cfg.grid_points), True
        except (GridTooSmallError, NoBoundStateError):
            j_n, ok = float("nan"), False
        j_fit = j_fit_se = float("nan")
        if cfg.simulate_depths:
            times = np.linspace(0.0, cfg.exchange_periods / j_h, cfg.exchange_points)
            sim = _exchange_rows(cfg, cfg.error_model, times, j_h, offset, 0.0)
            offset += len(times)
            fit = fit_oscillation(
                times, np.array([r[1] for r in sim]), np.array([r[2] for r in sim])
            )
            j_fit, j_fit_se = fit.frequency_hz, fit.frequency_se
        rows.append((depth, depth_over_trap_frequency(trap), j_h, j_n, ok, j_fit, j_fit_se))
    return CurveOutput(DEPTH_COLUMNS, rows)


PARITY_COLUMNS = ("t_g_s", "parity", "parity_se", "parity_expected", "n_used") + BRANCH_COLUMNS


def _parity_point(cfg, rho, em, readout, seed):
    dist = apply_error_model(rho, em, readout=readout)
    record = sample_shots(dist, cfg.shots, seed)
    pi, se = estimate_parity(record, loss_as_even=cfg.loss_as_even)
    c = record.counts
    n_used = int(c.sum() if cfg.loss_as_even else c[:4].sum())
    return dist, pi, se, n_used


def _fit_se(se, n_used) -> np.ndarray:
    return np.maximum(np.asarray(se), 1.0 / np.maximum(np.asarray(n_used), 1))


@dataclass
class ParityScanResult:
    curve: CurveOutput
    fit: ContrastFit
    certification: CertificationResult
    target_contrast: float


def pipeline_parity_scan(cfg: ExperimentConfig) -> ParityScanResult:
    """Parity versus gradient time after a quarter-period exchange, fitted and certified."""
    j = cfg.j_ex_hz
    t_ex = cfg.parity_exchange_time_s if cfg.parity_exchange_time_s is not None else 1.0 / (4 * j)
    em = cfg.parity_error_model
    rho = exchange_state(cfg, t_ex, j, ap_channel_phase(cfg))
    rows = []
    for k, t_g in enumerate(cfg.t_g_grid()):
        dist, pi, se, n_used = _parity_point(cfg, rho, em, readout_map(cfg.gradient, t_g, cfg.pulse), cfg.seed + k)
        rows.append((t_g, pi, se, dist.parity(cfg.loss_as_even), n_used, *_branches(dist)))
    curve = CurveOutput(PARITY_COLUMNS, rows, meta={"j_ex_hz": j, "exchange_time_s": t_ex})
    scan = ParityScan(
        curve.column("t_g_s"),
        curve.column("parity"),
        _fit_se(curve.column("parity_se"), curve.column("n_used")),
        cfg.gradient.delta_hz,
    )
    fit = fit_parity_scan(scan)
    curve.fits["parity"] = fit
    cert = certify(
        CertificationInput(
            contrast=fit.contrast,
            contrast_err=fit.contrast_se,
            p_upup=em.p_upup,
            p_upup_err=cfg.p_upup_err,
            p_dndn=em.p_dndn,
            p_dndn_err=cfg.p_dndn_err,
            ap_success_f=em.ap_success_f if fit.contrast / em.ap_success_f <= 2 else None,
            ap_success_f_err=cfg.ap_success_f_err,
        ),
        mc_samples=cfg.mc_samples,
        seed=cfg.seed,
    )
    target = expected_parity_contrast(cfg, rho, em)
    return ParityScanResult(curve, fit, cert, target)


def expected_parity_contrast(cfg: ExperimentConfig, rho, em: ErrorModel) -> float:
    """Noise-free peak-to-peak parity over one gradient period for ``rho`` under ``em``."""
    phases = np.linspace(0.0, 1.0, 64, endpoint=False) / abs(cfg.gradient.delta_hz)
    vals = [apply_error_model(rho, em, readout=readout_map(cfg.gradient, t, cfg.pulse)).parity(cfg.loss_as_even) for t in phases]
    fit = fit_oscillation(phases, vals, frequency=cfg.gradient.delta_hz)
    return fit.contrast


PVE_COLUMNS = ("t_s", "parity", "parity_se", "parity_expected", "n_used") + BRANCH_COLUMNS


def pipeline_parity_vs_exchange(cfg: ExperimentConfig) -> CurveOutput:
    """Parity versus exchange time with the gradient fixed at a quarter period.

    Uses the exchange-data error model without post-selection; the fit in
    ``fits["parity"]`` has a free frequency, expected to equal J_ex.
    """
    j = cfg.j_ex_hz
    t_g = cfg.pve_t_g_s if cfg.pve_t_g_s is not None else 1.0 / (4 * abs(cfg.gradient.delta_hz))
    readout = readout_map(cfg.gradient, t_g, cfg.pulse)
    phase = ap_channel_phase(cfg)
    times = cfg.exchange_times(j)
    rows = []
    for k, t in enumerate(times):
        rho = exchange_state(cfg, t, j, phase)
        dist, pi, se, n_used = _parity_point(cfg, rho, cfg.error_model, readout, cfg.seed + k)
        rows.append((t, pi, se, dist.parity(cfg.loss_as_even), n_used, *_branches(dist)))
    out = CurveOutput(PVE_COLUMNS, rows, meta={"j_ex_hz": j, "t_g_s": t_g, "ap_phase_rad": phase})
    if len(times) >= 4:
        out.fits["parity"] = fit_oscillation(times, out.column("parity"), _fit_se(out.column("parity_se"), out.column("n_used")))
    return out


def ideal(cfg: ExperimentConfig) -> ExperimentConfig:
    """Same grids and seeds, no imperfections."""
    perfect = ErrorModel()
    return replace(cfg, error_model=perfect, parity_error_model=perfect)
