"""Checkpoint file format.

Layout: one JSON header line (UTF-8, newline-terminated) followed by a raw
binary body of little-endian 64-bit floats.  The header records the schema
version, grid, time, physical parameters, the field order with component
counts, the exact body byte length, and a CRC-32 of the body.  Within each
field the components are stored consecutively; within each component the
samples are laid out with axis 1 varying fastest.  Write-then-read is
bit-identical.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    ChecksumError,
    MalformedHeaderError,
    TruncatedBodyError,
    VersionMismatchError,
)
from .mhd import State
from .spectral import Grid, PhysParams, RealField

__all__ = ["SCHEMA_VERSION", "write_checkpoint", "read_checkpoint"]

SCHEMA_VERSION = 1

_FIELDS = ("rho", "u", "B")


def _component_bytes(samples: np.ndarray) -> bytes:
    # axis 1 fastest == Fortran order of the spatial block
    return np.asfortranarray(samples.astype("<f8", copy=False)).tobytes(order="F")


def write_checkpoint(path, state: State, params: PhysParams) -> None:
    grid = state.grid
    body = bytearray()
    fields = []
    for name in _FIELDS:
        f: RealField = getattr(state, name)
        fields.append({"name": name, "components": f.components})
        for c in range(f.components):
            body += _component_bytes(f.samples[c])
    body = bytes(body)
    header = {
        "schema": SCHEMA_VERSION,
        "dim": grid.dim,
        "points_per_axis": grid.points_per_axis,
        "period": grid.period,
        "t": state.t,
        "params": {
            "mu": params.mu,
            "lam": params.lam,
            "nu": params.nu,
            "pressure_A": params.pressure_A,
            "pressure_gamma": params.pressure_gamma,
            "rho_bar": params.rho_bar,
            "c0_floor": params.c0_floor,
        },
        "fields": fields,
        "body_bytes": len(body),
        "crc32": zlib.crc32(body),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(body)


def read_checkpoint(path):
    """Read a checkpoint; returns (State, PhysParams).

    Raises MalformedHeaderError, VersionMismatchError, TruncatedBodyError or
    ChecksumError on the corresponding defects.
    """
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise MalformedHeaderError("no header line found")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"header is not valid JSON: {exc}") from exc
    required = {"schema", "dim", "points_per_axis", "period", "t", "params",
                "fields", "body_bytes", "crc32"}
    missing = required - set(header)
    if missing:
        raise MalformedHeaderError(f"header missing keys: {sorted(missing)}")
    if header["schema"] != SCHEMA_VERSION:
        raise VersionMismatchError(
            f"schema {header['schema']} not supported (expected {SCHEMA_VERSION})"
        )
    body = raw[newline + 1 :]
    if len(body) != header["body_bytes"]:
        raise TruncatedBodyError(
            f"body has {len(body)} bytes, header declares {header['body_bytes']}"
        )
    if zlib.crc32(body) != header["crc32"]:
        raise ChecksumError("body CRC-32 does not match header")

    grid = Grid(dim=header["dim"], points_per_axis=header["points_per_axis"],
                period=header["period"])
    params = PhysParams(**header["params"])
    n_pts = grid.num_points
    offset = 0
    arrays = {}
    for entry in header["fields"]:
        comps = []
        for _ in range(entry["components"]):
            flat = np.frombuffer(body, dtype="<f8", count=n_pts, offset=offset)
            offset += 8 * n_pts
            comps.append(flat.reshape(grid.shape, order="F"))
        arrays[entry["name"]] = np.stack(comps)
    state = State(
        t=header["t"],
        rho=RealField(grid, arrays["rho"]),
        u=RealField(grid, arrays["u"]),
        B=RealField(grid, arrays["B"]),
    )
    return state, params
