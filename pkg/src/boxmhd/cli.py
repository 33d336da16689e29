"""Command-line front end: ``simulate <config>``, ``verify <config> --suite
<name>``, ``report <rundir>``.

Exit codes: 0 ok, 1 check-or-run failure, 2 configuration error.  Artifacts
written into the run directory (CSV time series, checkpoints, JSON summary,
MANIFEST) are byte-deterministic for a fixed config and seed; the output
root may be relocated with the BOXMHD_OUTPUT_ROOT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import read_checkpoint, write_checkpoint
from .config import RunConfig, load_config
from .energy import blowup_indicator, c0, energy_report
from .errors import (
    BoxMHDError,
    CFLViolationError,
    ConfigError,
    DensityFloorError,
    FoldError,
)
from .initial_conditions import make_initial_state
from .mhd import (
    State,
    Trajectory,
    dissipation_rate,
    div_b_norm,
    step_etdrk2,
    total_energy,
)
from .verify import available_suites, run_suite

__all__ = ["main"]

CSV_HEADER = "t,total_energy,dissipation,div_b_l2,min_rho,blowup_indicator"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _resolve_run_dir(cfg: RunConfig) -> Path:
    root = os.environ.get("BOXMHD_OUTPUT_ROOT", ".")
    out = Path(cfg.output_dir)
    return out if out.is_absolute() else Path(root) / out


def _error_code(exc: BaseException) -> str:
    if isinstance(exc, CFLViolationError):
        return "cfl-violation"
    if isinstance(exc, DensityFloorError):
        return "density-floor"
    if isinstance(exc, FoldError):
        return "fold-error"
    if isinstance(exc, ConfigError):
        return "config-error"
    code = getattr(exc, "code", None)
    return code if code else "runtime-error"


def _initial_state(cfg: RunConfig) -> State:
    if cfg.ic_kind == "checkpoint":
        state, _ = read_checkpoint(cfg.ic_checkpoint)
        if state.grid != cfg.grid:
            raise ConfigError("checkpoint grid does not match configured grid")
        return state
    return make_initial_state(
        cfg.ic_kind, cfg.grid, cfg.params, cfg.seed,
        amplitude=cfg.ic_amplitude, band_min=cfg.ic_band[0],
        band_max=cfg.ic_band[1], mode=cfg.ic_mode, component=cfg.ic_component,
    )


def _csv_row(state: State, cfg: RunConfig) -> str:
    return ",".join(
        _fmt(v)
        for v in (
            state.t,
            total_energy(state, cfg.params),
            dissipation_rate(state, cfg.params),
            div_b_norm(state),
            state.min_density(),
            blowup_indicator(state, cfg.blowup_q),
        )
    )


def run_simulate(cfg: RunConfig) -> int:
    """Drive the stepper, writing the CSV series, checkpoints, a JSON
    summary and a MANIFEST; partial artifacts survive failed runs."""
    run_dir = _resolve_run_dir(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    lock = run_dir / ".lock"
    try:
        lock_fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        print(f"run directory {run_dir} is locked by another writer", file=sys.stderr)
        return 2
    os.close(lock_fd)

    ckpt_dir = run_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    csv_path = run_dir / "series.csv"
    artifacts = ["series.csv"]
    summary: dict = {"status": "ok"}
    truncated = False
    try:
        state = _initial_state(cfg)
        n_steps = int(round(cfg.t_end / cfg.dt))
        snapshots = [state]
        with open(csv_path, "w", newline="\n") as csv:
            csv.write(CSV_HEADER + "\n")
            csv.write(_csv_row(state, cfg) + "\n")
            name = f"step_{0:06d}.ckpt"
            write_checkpoint(ckpt_dir / name, state, cfg.params)
            artifacts.append(f"checkpoints/{name}")
            try:
                for n in range(n_steps):
                    state = step_etdrk2(state, cfg.dt, cfg.params, cfg.cfl_factor)
                    csv.write(_csv_row(state, cfg) + "\n")
                    if (n + 1) % cfg.snapshot_every == 0 or n == n_steps - 1:
                        snapshots.append(state)
                        name = f"step_{n + 1:06d}.ckpt"
                        write_checkpoint(ckpt_dir / name, state, cfg.params)
                        artifacts.append(f"checkpoints/{name}")
            except (CFLViolationError, DensityFloorError, FoldError) as exc:
                truncated = True
                summary = {"status": "error", "error_code": _error_code(exc),
                           "message": str(exc)}
                print(f"run aborted: {exc}", file=sys.stderr)

        if summary["status"] == "ok":
            traj = Trajectory(tuple(snapshots), cfg.params)
            summary["c0"] = c0(snapshots[0], cfg.params)
            summary["div_b_max"] = max(div_b_norm(s) for s in snapshots)
            summary["min_rho"] = min(s.min_density() for s in snapshots)
            if cfg.hoff and len(snapshots) >= 3:
                rep = energy_report(traj, cfg.params, cfg.epsilon0, cfg.blowup_q)
                summary.update({
                    "a1": rep.a1, "a2": rep.a2, "e_at_t": rep.e_at_t, "h": rep.h,
                    "balance_residual": rep.balance_residual,
                    "accumulated_balance_residual": rep.accumulated_residual,
                    "smallness_c0": rep.smallness_c0,
                    "smallness_a": rep.smallness_a,
                })
    except BoxMHDError as exc:
        truncated = True
        summary = {"status": "error", "error_code": _error_code(exc), "message": str(exc)}
        print(f"run failed: {exc}", file=sys.stderr)
    finally:
        with open(run_dir / "summary.json", "w", newline="\n") as fh:
            json.dump(summary, fh, sort_keys=True, indent=2)
            fh.write("\n")
        artifacts.append("summary.json")
        manifest = {"artifacts": sorted(artifacts), "truncated": truncated}
        with open(run_dir / "MANIFEST", "w", newline="\n") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        lock.unlink(missing_ok=True)
    return 0 if summary["status"] == "ok" else 1


def run_verify(cfg: RunConfig, suite: str) -> int:
    try:
        result = run_suite(suite, seed=cfg.seed)
    except KeyError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0 if result["all_pass"] else 1


def run_report(run_dir: str) -> int:
    path = Path(run_dir)
    summary_path = path / "summary.json"
    csv_path = path / "series.csv"
    if not summary_path.exists() or not csv_path.exists():
        print(f"{run_dir} does not look like a run directory", file=sys.stderr)
        return 2
    summary = json.loads(summary_path.read_text())
    rows = csv_path.read_text().strip().splitlines()
    print(f"run directory: {path}")
    print(f"status: {summary.get('status')}")
    if summary.get("status") != "ok":
        print(f"error code: {summary.get('error_code')}")
        print(f"message: {summary.get('message')}")
    n_rows = max(len(rows) - 1, 0)
    print(f"time series rows: {n_rows}")
    if n_rows:
        first = rows[1].split(",")
        last = rows[-1].split(",")
        print(f"t range: {first[0]} .. {last[0]}")
        print(f"final energy: {last[1]}  final div B: {last[3]}  min rho: {last[4]}")
    for key in ("c0", "a1", "a2", "e_at_t", "h", "balance_residual",
                "div_b_max", "smallness_c0", "smallness_a"):
        if key in summary:
            print(f"{key}: {summary[key]}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="boxmhd",
        description="Pseudo-spectral compressible MHD on a periodic box",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a simulation from a config file")
    p_sim.add_argument("config")
    p_sim.add_argument("--set", action="append", dest="overrides", metavar="SEC.KEY=VAL",
                       help="override a config entry (repeatable; flags win)")

    p_ver = sub.add_parser("verify", help="run a property suite")
    p_ver.add_argument("config")
    p_ver.add_argument("--suite", required=True, choices=available_suites())
    p_ver.add_argument("--set", action="append", dest="overrides", metavar="SEC.KEY=VAL")

    p_rep = sub.add_parser("report", help="summarize a finished run directory")
    p_rep.add_argument("rundir")

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = load_config(args.config, args.overrides)
            return run_simulate(cfg)
        if args.command == "verify":
            cfg = load_config(args.config, args.overrides)
            return run_verify(cfg, args.suite)
        return run_report(args.rundir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
