"""Experiment configuration: JSON file merged over the shipped protocol defaults."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import ApRamp, DephasingParams, GradientParams, PulseParams
from .measure import ErrorModel, calibrate_pair_coherence
from .potential import RB87_MASS_KG, TweezerParams, j_ex


class ConfigError(ValueError):
    pass


def paper_defaults() -> dict:
    text = resources.files(__package__).joinpath("paper_defaults.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key.startswith("_"):
            continue
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _strip(d):
    if isinstance(d, dict):
        return {k: _strip(v) for k, v in d.items() if not k.startswith("_")}
    return d


@dataclass(frozen=True)
class ExperimentConfig:
    trap: TweezerParams
    j_ex_override_hz: float | None
    exchange_times_s: tuple | None
    exchange_points: int
    exchange_periods: float
    postselect: bool
    ramp: ApRamp
    ramp_dt_s: float
    track_ap_phase: bool
    gradient: GradientParams
    t_g_s: tuple | None
    gradient_points: int
    gradient_periods: float
    pulse: PulseParams
    dephasing: DephasingParams
    error_model: ErrorModel
    parity_error_model: ErrorModel
    p_upup_err: float
    p_dndn_err: float
    ap_success_f_err: float
    mc_samples: int
    parity_exchange_time_s: float | None
    pve_t_g_s: float | None
    depths_hz: tuple
    grid_points: int
    simulate_depths: bool
    loss_as_even: bool
    shots: int
    seed: int

    @property
    def j_ex_hz(self) -> float:
        if self.j_ex_override_hz is not None:
            return float(self.j_ex_override_hz)
        return j_ex(self.trap)

    def exchange_times(self, j_ex_hz: float | None = None) -> np.ndarray:
        if self.exchange_times_s is not None:
            return np.asarray(self.exchange_times_s, dtype=float)
        j = self.j_ex_hz if j_ex_hz is None else j_ex_hz
        return np.linspace(0.0, self.exchange_periods / j, self.exchange_points)

    def t_g_grid(self) -> np.ndarray:
        if self.t_g_s is not None:
            return np.asarray(self.t_g_s, dtype=float)
        return np.linspace(0.0, self.gradient_periods / abs(self.gradient.delta_hz), self.gradient_points)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _error_model(d: dict, where: str) -> ErrorModel:
    d = dict(d)
    target = d.pop("target_contrast", None)
    kappa = d.pop("pair_coherence", None)
    try:
        em = ErrorModel(**d, pair_coherence=1.0)
        if kappa is None:
            kappa = calibrate_pair_coherence(em, target) if target is not None else 1.0
        return replace(em, pair_coherence=kappa)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def from_dict(raw: dict) -> ExperimentConfig:
    d = _strip(_merge(paper_defaults(), raw))
    try:
        trap_d = dict(d["trap"])
        if trap_d.get("mass_kg") is None:
            trap_d["mass_kg"] = RB87_MASS_KG
        trap = TweezerParams(**trap_d)

        ex = d["exchange"]
        j_override = ex["j_ex_hz"]
        rp = dict(d["ramp"])
        dt = float(rp.pop("dt_s"))
        track = bool(rp.pop("track_phase"))
        if rp.get("u_eg_hz") is None:
            rp["u_eg_hz"] = (j_override if j_override is not None else j_ex(trap)) / 2
        ramp = ApRamp(**rp)

        gr = d["gradient"]
        cert = d["certification"]
        ds = d["depth_sweep"]
        cfg = ExperimentConfig(
            trap=trap,
            j_ex_override_hz=j_override,
            exchange_times_s=None if ex["times_s"] is None else tuple(ex["times_s"]),
            exchange_points=int(ex["n_points"]),
            exchange_periods=float(ex["n_periods"]),
            postselect=bool(ex["postselect"]),
            ramp=ramp,
            ramp_dt_s=dt,
            track_ap_phase=track,
            gradient=GradientParams(float(gr["delta_hz"])),
            t_g_s=None if gr["t_g_s"] is None else tuple(gr["t_g_s"]),
            gradient_points=int(gr["n_points"]),
            gradient_periods=float(gr["n_periods"]),
            pulse=PulseParams(**d["pulse"]),
            dephasing=DephasingParams(**d["dephasing"]),
            error_model=_error_model(d["error_model"], "error_model"),
            parity_error_model=_error_model(d["parity_error_model"], "parity_error_model"),
            p_upup_err=float(cert["p_upup_err"]),
            p_dndn_err=float(cert["p_dndn_err"]),
            ap_success_f_err=float(cert["ap_success_f_err"]),
            mc_samples=int(cert["mc_samples"]),
            parity_exchange_time_s=d["parity_scan"]["exchange_time_s"],
            pve_t_g_s=d["parity_vs_exchange"]["t_g_s"],
            depths_hz=tuple(float(x) for x in ds["depths_hz"]),
            grid_points=int(ds["grid_points"]),
            simulate_depths=bool(ds["simulate"]),
            loss_as_even=bool(d["readout"]["loss_as_even"]),
            shots=int(d["shots"]),
            seed=int(d["seed"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    _check(cfg)
    return cfg


def _check(cfg: ExperimentConfig) -> None:
    if cfg.shots <= 0:
        raise ConfigError("shots must be positive")
    if cfg.gradient.delta_hz == 0:
        raise ConfigError("gradient.delta_hz must be non-zero")
    if cfg.exchange_times_s is not None and len(cfg.exchange_times_s) == 0:
        raise ConfigError("exchange.times_s must not be empty")
    if cfg.t_g_s is not None and len(cfg.t_g_s) == 0:
        raise ConfigError("gradient.t_g_s must not be empty")
    if cfg.exchange_points < 1 or cfg.gradient_points < 1:
        raise ConfigError("grids must hold at least one point")
    if not cfg.depths_hz:
        raise ConfigError("depth_sweep.depths_hz must not be empty")


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    """Read a JSON config (or just the defaults) and apply keyword overrides."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    cfg = from_dict(raw)
    cfg = cfg.with_overrides(**overrides)
    _check(cfg)
    return cfg
