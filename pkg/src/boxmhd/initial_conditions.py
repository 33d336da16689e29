"""Initial-condition library: equilibrium, single-mode perturbations,
divergence-free random magnetic fields (curl construction), and smooth
random small-data ensembles parameterized by amplitude and spectral band.

All random constructions are driven by an explicit generator so a fixed
seed reproduces identical fields bit for bit.
"""

from __future__ import annotations

import numpy as np

from .mhd import State
from .spectral import Grid, PhysParams, RealField, forward_array, inverse_array

__all__ = [
    "equilibrium",
    "single_mode_state",
    "random_band_limited",
    "random_div_free",
    "small_data_state",
    "make_initial_state",
]


def equilibrium(grid: Grid, params: PhysParams) -> State:
    zero = np.zeros((grid.dim,) + grid.shape)
    return State(
        t=0.0,
        rho=RealField(grid, np.full(grid.shape, params.rho_bar)),
        u=RealField(grid, zero),
        B=RealField(grid, zero),
    )


def _mode_wave(grid: Grid, mode, phase: float = 0.0) -> np.ndarray:
    arg = np.zeros(grid.shape)
    for ax, m in enumerate(mode):
        arg = arg + (2.0 * np.pi / grid.period) * m * grid.coords[ax]
    return np.cos(arg + phase)


def single_mode_state(grid: Grid, params: PhysParams, field: str, mode,
                      amplitude: float, component: int = 0) -> State:
    """Equilibrium plus one cosine mode in rho, one u component, or a
    transverse circular B mode (div-free by construction)."""
    s = equilibrium(grid, params)
    wave = _mode_wave(grid, mode)
    if field == "rho":
        return State(0.0, RealField(grid, s.rho.samples[0] + amplitude * wave), s.u, s.B)
    if field == "u":
        u = s.u.samples.copy()
        u[component] += amplitude * wave
        return State(0.0, s.rho, RealField(grid, u), s.B)
    if field == "B":
        if grid.dim < 2:
            raise ValueError("transverse magnetic mode needs dim >= 2")
        mode = tuple(mode)
        axes = [ax for ax in range(grid.dim) if mode[ax] == 0]
        if len(axes) < grid.dim - 1 or grid.dim == 2 and len(axes) < 1:
            raise ValueError("single B mode must be axis-aligned for a div-free field")
        B = s.B.samples.copy()
        if grid.dim == 3 and len(axes) == 2:
            arg = _mode_wave(grid, mode)
            arg_s = _mode_wave(grid, mode, phase=-np.pi / 2.0)  # sin
            B[axes[0]] += amplitude * arg
            B[axes[1]] += amplitude * arg_s
        else:
            B[axes[0]] += amplitude * _mode_wave(grid, mode)
        return State(0.0, s.rho, s.u, RealField(grid, B))
    raise ValueError(f"unknown field {field!r}")


def random_band_limited(grid: Grid, rng: np.random.Generator, ncomp: int,
                        band_min: int, band_max: int, amplitude: float,
                        zero_mean: bool = True) -> np.ndarray:
    """Real fields with independent Gaussian modes in band_min <= |k| <= band_max,
    normalized so the max pointwise magnitude is ``amplitude``."""
    n = grid.points_per_axis
    coef = np.zeros((ncomp,) + grid.shape, dtype=complex)
    ranges = [range(-band_max, band_max + 1)] * grid.dim
    import itertools

    for mode in itertools.product(*ranges):
        r2 = sum(m * m for m in mode)
        if r2 > band_max ** 2 or r2 < band_min ** 2:
            continue
        if zero_mean and r2 == 0:
            continue
        idx = tuple(m % n for m in mode)
        conj_idx = tuple((-m) % n for m in mode)
        z = rng.standard_normal(ncomp) + 1j * rng.standard_normal(ncomp)
        for c in range(ncomp):
            coef[c][idx] += 0.5 * z[c]
            coef[c][conj_idx] += 0.5 * z[c].conjugate()
    phys = inverse_array(grid, coef)
    peak = np.max(np.abs(phys))
    if peak > 0:
        phys = phys * (amplitude / peak)
    return phys


def random_div_free(grid: Grid, rng: np.random.Generator, band_min: int,
                    band_max: int, amplitude: float) -> np.ndarray:
    """Divergence-free field: curl of a random potential (3-d) or the
    perpendicular gradient of a random stream function (2-d)."""
    if grid.dim == 1:
        raise ValueError("no nontrivial divergence-free fields in one dimension")
    if grid.dim == 2:
        psi = random_band_limited(grid, rng, 1, band_min, band_max, 1.0)
        coef = forward_array(grid, psi)
        bx = inverse_array(grid, 1j * grid.wavenumbers[1] * coef)
        by = inverse_array(grid, -1j * grid.wavenumbers[0] * coef)
        out = np.concatenate([bx, by], axis=0)
    else:
        pot = random_band_limited(grid, rng, 3, band_min, band_max, 1.0)
        coef = forward_array(grid, pot)
        k = grid.wavenumbers
        out = inverse_array(grid, np.concatenate([
            1j * k[1] * coef[2:3] - 1j * k[2] * coef[1:2],
            1j * k[2] * coef[0:1] - 1j * k[0] * coef[2:3],
            1j * k[0] * coef[1:2] - 1j * k[1] * coef[0:1],
        ], axis=0))
    peak = np.max(np.abs(out))
    if peak > 0:
        out = out * (amplitude / peak)
    return out


def small_data_state(grid: Grid, params: PhysParams, rng: np.random.Generator,
                     amplitude: float, band_min: int = 1, band_max: int = 2) -> State:
    """Smooth random data near equilibrium: band-limited density deviation
    and velocity, curl-constructed magnetic field."""
    a = random_band_limited(grid, rng, 1, band_min, band_max, amplitude)
    u = random_band_limited(grid, rng, grid.dim, band_min, band_max, amplitude)
    if grid.dim >= 2:
        B = random_div_free(grid, rng, band_min, band_max, amplitude)
    else:
        B = np.zeros((1,) + grid.shape)
    return State(
        t=0.0,
        rho=RealField(grid, params.rho_bar + a),
        u=RealField(grid, u),
        B=RealField(grid, B),
    )


def make_initial_state(kind: str, grid: Grid, params: PhysParams, seed: int,
                       amplitude: float = 0.01, band_min: int = 1,
                       band_max: int = 2, mode=(1, 0, 0), component: int = 0) -> State:
    """Named families used by run configurations."""
    rng = np.random.default_rng(seed)
    mode = tuple(mode)[: grid.dim]
    if kind == "equilibrium":
        return equilibrium(grid, params)
    if kind == "single_mode_rho":
        return single_mode_state(grid, params, "rho", mode, amplitude)
    if kind == "single_mode_u":
        return single_mode_state(grid, params, "u", mode, amplitude, component)
    if kind == "single_mode_b":
        return single_mode_state(grid, params, "B", mode, amplitude)
    if kind == "random_small":
        return small_data_state(grid, params, rng, amplitude, band_min, band_max)
    raise ValueError(f"unknown initial-condition kind {kind!r}")
