"""Run configuration: one flat INI-style file, overridable by command-line
``--set section.key=value`` flags (flags win)."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .spectral import Grid, PhysParams

__all__ = ["RunConfig", "load_config", "DEFAULTS"]

DEFAULTS = {
    "grid": {"dim": "2", "points_per_axis": "32", "period": str(2.0 * np.pi)},
    "physics": {
        "mu": "0.5", "lam": "0.1", "nu": "0.4", "pressure_a": "1.0",
        "pressure_gamma": "1.4", "rho_bar": "1.0", "c0_floor": "0.5",
    },
    "initial": {
        "kind": "equilibrium", "amplitude": "0.01", "band_min": "1",
        "band_max": "2", "mode": "1,0,0", "component": "0", "checkpoint": "",
    },
    "time": {"dt": "0.01", "t_end": "0.1", "snapshot_every": "1", "cfl_factor": "0.4"},
    "output": {"directory": "run", "seed": "1234"},
    "diagnostics": {"hoff": "true", "blowup_q": "6.0", "epsilon0": "1.0", "div_tol": "1e-6"},
    "picard": {
        "r": "0.06", "t": "0.0036", "dt": "0.000225", "p": "3.0",
        "n_max": "25", "tol": "1e-8", "eta": "0.12", "c_bar": "1e-2",
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for simulate / verify runs."""

    grid: Grid
    params: PhysParams
    ic_kind: str
    ic_amplitude: float
    ic_band: tuple
    ic_mode: tuple
    ic_component: int
    ic_checkpoint: str
    dt: float
    t_end: float
    snapshot_every: int
    cfl_factor: float
    output_dir: str
    seed: int
    hoff: bool
    blowup_q: float
    epsilon0: float
    div_tol: float
    picard: dict = field(default_factory=dict)


def _apply_overrides(cp: configparser.ConfigParser, overrides) -> None:
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section.strip(), key.strip(), value.strip())


def load_config(path, overrides=None) -> RunConfig:
    """Parse and validate a config file, applying flag overrides last."""
    cp = configparser.ConfigParser()
    cp.read_dict(DEFAULTS)
    if path is not None:
        found = cp.read(str(path))
        if not found:
            raise ConfigError(f"config file {path} not found or unreadable")
    _apply_overrides(cp, overrides)

    try:
        grid = Grid(
            dim=cp.getint("grid", "dim"),
            points_per_axis=cp.getint("grid", "points_per_axis"),
            period=cp.getfloat("grid", "period"),
        )
        params = PhysParams(
            mu=cp.getfloat("physics", "mu"),
            lam=cp.getfloat("physics", "lam"),
            nu=cp.getfloat("physics", "nu"),
            pressure_A=cp.getfloat("physics", "pressure_a"),
            pressure_gamma=cp.getfloat("physics", "pressure_gamma"),
            rho_bar=cp.getfloat("physics", "rho_bar"),
            c0_floor=cp.getfloat("physics", "c0_floor"),
        )
        mode = tuple(int(v) for v in cp.get("initial", "mode").split(","))
        cfg = RunConfig(
            grid=grid,
            params=params,
            ic_kind=cp.get("initial", "kind"),
            ic_amplitude=cp.getfloat("initial", "amplitude"),
            ic_band=(cp.getint("initial", "band_min"), cp.getint("initial", "band_max")),
            ic_mode=mode,
            ic_component=cp.getint("initial", "component"),
            ic_checkpoint=cp.get("initial", "checkpoint"),
            dt=cp.getfloat("time", "dt"),
            t_end=cp.getfloat("time", "t_end"),
            snapshot_every=cp.getint("time", "snapshot_every"),
            cfl_factor=cp.getfloat("time", "cfl_factor"),
            output_dir=cp.get("output", "directory"),
            seed=cp.getint("output", "seed"),
            hoff=cp.getboolean("diagnostics", "hoff"),
            blowup_q=cp.getfloat("diagnostics", "blowup_q"),
            epsilon0=cp.getfloat("diagnostics", "epsilon0"),
            div_tol=cp.getfloat("diagnostics", "div_tol"),
            picard={k: float(v) for k, v in cp.items("picard")},
        )
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

    if cfg.dt <= 0 or cfg.t_end <= 0:
        raise ConfigError("time.dt and time.t_end must be positive")
    if cfg.snapshot_every < 1:
        raise ConfigError("time.snapshot_every must be >= 1")
    if cfg.ic_kind == "checkpoint":
        if not cfg.ic_checkpoint:
            raise ConfigError("initial.kind=checkpoint requires initial.checkpoint")
        if not Path(cfg.ic_checkpoint).exists():
            raise ConfigError(f"checkpoint file {cfg.ic_checkpoint} does not exist")
    return cfg
