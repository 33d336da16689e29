"""Eulerian compressible MHD: right-hand sides, exact propagators, ETDRK2
stepper, and the structural fields (effective viscous flux, vorticity tensor)
with their elliptic identities.

System (density rho, velocity u, magnetic field B):

    d rho/dt = -div(rho u)
    rho (du/dt + u.grad u) + grad P(rho)
        = B.grad B - 0.5 grad|B|^2 + mu Lap u + (lam+mu) grad div u
    dB/dt = -(div u) B - u.grad B + B.grad u + nu Lap B
    div B = 0 (propagated from div-free data)

States evolved by the stepper are kept band-limited to the two-thirds
dealias ball, so quadratic products in the right-hand side are alias-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CFLViolationError, DensityFloorError, GridMismatchError
from .littlewood_paley import FieldHistory
from .spectral import (
    Grid,
    PhysParams,
    RealField,
    SpectralField,
    dealias_array,
    forward_array,
    inverse_array,
    jacobian,
    lp_norm_array,
    pointwise_magnitude,
)

__all__ = [
    "State",
    "Trajectory",
    "FluxFields",
    "pressure_eval",
    "pressure_range_bounds",
    "mhd_rhs",
    "linear_propagators",
    "step_etdrk2",
    "simulate",
    "flux_and_vorticity",
    "elliptic_residuals",
    "material_derivative",
    "div_b_norm",
    "total_energy",
    "dissipation_rate",
    "momentum_total",
]

DEFAULT_CFL_FACTOR = 0.4
DEFAULT_DIV_TOL = 1e-6


@dataclass(frozen=True)
class State:
    """Fields at one instant: density (scalar), velocity and magnetic field."""

    t: float
    rho: RealField
    u: RealField
    B: RealField

    def __post_init__(self):
        g = self.rho.grid
        if self.u.grid != g or self.B.grid != g:
            raise GridMismatchError("state fields live on different grids")
        if self.rho.components != 1:
            raise ValueError("rho must be scalar")
        if self.u.components != g.dim or self.B.components != g.dim:
            raise ValueError("u and B must have dim components")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def min_density(self) -> float:
        return float(np.min(self.rho.samples))


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered states on a fixed grid."""

    snapshots: tuple
    params: PhysParams

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        object.__setattr__(self, "snapshots", snaps)
        if not snaps:
            raise ValueError("trajectory needs at least one snapshot")
        ts = np.array([s.t for s in snaps])
        if ts.size >= 2 and not np.all(np.diff(ts) > 0):
            raise ValueError("snapshot times must be strictly increasing")
        g = snaps[0].grid
        for s in snaps:
            if s.grid != g:
                raise GridMismatchError("snapshots on different grids")

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def history(self, name: str) -> FieldHistory:
        """Snapshot series of one field ('rho', 'u' or 'B')."""
        return FieldHistory(
            times=tuple(float(s.t) for s in self.snapshots),
            fields=tuple(getattr(s, name) for s in self.snapshots),
        )


@dataclass(frozen=True)
class FluxFields:
    """Effective viscous flux F, vorticity tensor omega, and its source g."""

    F: RealField
    omega: np.ndarray = field(repr=False)  # (dim, dim) + grid shape
    g: RealField

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        om.flags.writeable = False
        object.__setattr__(self, "omega", om)

    def antisymmetry_defect(self) -> float:
        return float(np.max(np.abs(self.omega + np.swapaxes(self.omega, 0, 1))))


# ---------------------------------------------------------------------------
# pressure law
# ---------------------------------------------------------------------------

def _pressure_fn(params: PhysParams, order: int) -> Callable[[np.ndarray], np.ndarray]:
    A, gam = params.pressure_A, params.pressure_gamma
    if order == 0:
        return lambda r: A * r ** gam
    if order == 1:
        return lambda r: A * gam * r ** (gam - 1.0)
    if order == 2:
        return lambda r: A * gam * (gam - 1.0) * r ** (gam - 2.0)
    raise ValueError("derivative_order must be 0, 1 or 2")


def pressure_eval(rho: RealField, params: PhysParams, derivative_order: int = 0) -> RealField:
    """Evaluate P, P' or P'' of the gamma-law pointwise; density must be positive."""
    if np.min(rho.samples) <= 0:
        raise DensityFloorError("pressure evaluation requires positive density")
    fn = _pressure_fn(params, derivative_order)
    return RealField(rho.grid, fn(rho.samples))


def pressure_range_bounds(params: PhysParams, samples: int = 10_000, k_max: int = 2):
    """(P_plus, P_minus): extremal |P^(k)| over the density interval
    [c0/4, 4/c0], by dense sampling."""
    lo = params.c0_floor / 4.0
    hi = 4.0 / params.c0_floor
    r = np.linspace(lo, hi, samples)
    p_plus = max(float(np.max(np.abs(_pressure_fn(params, k)(r)))) for k in range(k_max + 1))
    p_minus = float(np.min(np.abs(_pressure_fn(params, 1)(r))))
    return p_plus, p_minus


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def _phys_and_jac(grid: Grid, samples: np.ndarray, trunc: bool = True):
    """Physical samples, coefficients, and physical jacobian.

    ``trunc`` applies the two-thirds truncation (solver path); the identity
    diagnostics pass ``trunc=False`` so both sides of an algebraic identity
    see the same spectral projection.
    """
    coef = forward_array(grid, samples)
    if trunc:
        coef = dealias_array(grid, coef)
    phys = inverse_array(grid, coef)
    jac = inverse_array(grid, jacobian(grid, coef).reshape((-1,) + grid.shape))
    jac = jac.reshape((samples.shape[0], grid.dim) + grid.shape)
    return phys, coef, jac


def _advect(jac: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(u . grad) f from the jacobian of f: sum_j u_j d(f_i)/dx_j."""
    return np.einsum("ij...,j...->i...", jac, u)


def _grad_scalar(grid: Grid, phys: np.ndarray, trunc: bool = True) -> np.ndarray:
    coef = forward_array(grid, phys)
    if trunc:
        coef = dealias_array(grid, coef)
    return inverse_array(grid, jacobian(grid, coef)[0])


def _laplacian_phys(grid: Grid, coef: np.ndarray) -> np.ndarray:
    return inverse_array(grid, -grid.wavenumber_sq * coef)


def _grad_div_phys(grid: Grid, coef: np.ndarray) -> np.ndarray:
    div = np.zeros(grid.shape, dtype=complex)
    for ax in range(grid.dim):
        div = div + 1j * grid.wavenumbers[ax] * coef[ax]
    out = np.empty_like(coef)
    for ax in range(grid.dim):
        out[ax] = 1j * grid.wavenumbers[ax] * div
    return inverse_array(grid, out)


def _momentum_stress_rhs(grid: Grid, params: PhysParams, rho, u_coef, u_jac, B, B_jac,
                         trunc: bool = True):
    """rho * du/dt + rho u.grad u, i.e. the momentum equation right side
    -grad P + B.grad B - 0.5 grad |B|^2 + mu Lap u + (lam+mu) grad div u."""
    p_phys = params.pressure_A * rho ** params.pressure_gamma
    grad_p = _grad_scalar(grid, p_phys, trunc)
    b_sq = np.sum(B * B, axis=0, keepdims=True)
    grad_bsq = _grad_scalar(grid, b_sq, trunc)
    b_grad_b = _advect(B_jac, B)
    lap_u = _laplacian_phys(grid, u_coef)
    grad_div_u = _grad_div_phys(grid, u_coef)
    return (
        -grad_p
        + b_grad_b
        - 0.5 * grad_bsq
        + params.mu * lap_u
        + params.mu_prime * grad_div_u
    )


def _rhs_arrays(grid: Grid, params: PhysParams, rho_s, u_s, B_s):
    """Dealiased time derivatives (drho, du, dB) plus the fields' jacobians."""
    floor = params.c0_floor / 4.0
    if np.min(rho_s) < floor:
        raise DensityFloorError(
            f"min density {np.min(rho_s):.6g} below floor {floor:.6g}"
        )
    rho, rho_coef, rho_jac = _phys_and_jac(grid, rho_s)
    u, u_coef, u_jac = _phys_and_jac(grid, u_s)
    B, B_coef, B_jac = _phys_and_jac(grid, B_s)

    div_u = np.einsum("ii...->...", u_jac)[np.newaxis]

    # mass: -div(rho u), conservative form
    rho_u_coef = dealias_array(grid, forward_array(grid, rho * u))
    drho = np.zeros(grid.shape, dtype=complex)
    for ax in range(grid.dim):
        drho = drho + 1j * grid.wavenumbers[ax] * rho_u_coef[ax]
    drho = -inverse_array(grid, drho[np.newaxis])

    stress = _momentum_stress_rhs(grid, params, rho, u_coef, u_jac, B, B_jac)
    du = -_advect(u_jac, u) + stress / rho

    dB = (
        -div_u * B
        - _advect(B_jac, u)
        + _advect(u_jac, B)
        + params.nu * _laplacian_phys(grid, B_coef)
    )
    return drho, du, dB, (rho, u, B, u_coef, B_coef, u_jac, B_jac, div_u)


def mhd_rhs(s: State, params: PhysParams):
    """Time derivatives (drho, du, dB) in non-conservative form."""
    drho, du, dB, _ = _rhs_arrays(s.grid, params, s.rho.samples, s.u.samples, s.B.samples)
    g = s.grid
    return RealField(g, drho), RealField(g, du), RealField(g, dB)


# ---------------------------------------------------------------------------
# exact propagators and phi-functions
# ---------------------------------------------------------------------------

def _phi1(z: np.ndarray) -> np.ndarray:
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 0.5 + zs / 6.0 + zs ** 2 / 24.0 + zs ** 3 / 120.0
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / zb ** 2
    return out


def _apply_heat_symbol(grid: Grid, coef: np.ndarray, nu: float, dt: float, fn) -> np.ndarray:
    return coef * fn(-nu * grid.wavenumber_sq * dt)


def _apply_lame_symbol(grid: Grid, coef: np.ndarray, mu: float, lam: float, dt: float, fn) -> np.ndarray:
    """Apply fn of the Lame symbol mu Lap + (lam+mu) grad div exactly.

    Longitudinal modes (parallel to k) see eigenvalue -(lam+2mu)|k|^2,
    transverse modes -mu|k|^2; the mean mode sees fn(0).
    """
    k2 = grid.wavenumber_sq
    k2_safe = np.where(k2 > 0, k2, 1.0)
    k_dot = np.zeros(grid.shape, dtype=complex)
    for ax in range(grid.dim):
        k_dot = k_dot + grid.wavenumbers[ax] * coef[ax]
    longit = np.empty_like(coef)
    for ax in range(grid.dim):
        longit[ax] = grid.wavenumbers[ax] * k_dot / k2_safe
    trans = coef - longit
    f_long = fn(-(lam + 2.0 * mu) * k2 * dt)
    f_trans = fn(-mu * k2 * dt)
    out = f_long * longit + f_trans * trans
    mean_idx = (slice(None),) + (0,) * grid.dim
    out[mean_idx] = fn(np.zeros(1))[0] * coef[mean_idx]
    return out


def linear_propagators(f: SpectralField, dt: float, which: str, params: PhysParams) -> SpectralField:
    """Exact semigroup of the heat (``heat``) or Lame (``lame``) operator."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    g = f.grid
    if which == "heat":
        out = _apply_heat_symbol(g, f.coefficients, params.nu, dt, np.exp)
    elif which == "lame":
        if f.components != g.dim:
            raise ValueError("lame propagator needs a dim-component field")
        out = _apply_lame_symbol(g, f.coefficients, params.mu, params.lam, dt, np.exp)
    else:
        raise ValueError(f"unknown propagator {which!r}")
    return SpectralField(g, out)


# ---------------------------------------------------------------------------
# ETDRK2 stepper
# ---------------------------------------------------------------------------

def _cfl_limit(grid: Grid, params: PhysParams, rho, u, B) -> float:
    speed = (
        pointwise_magnitude(u)
        + np.sqrt(_pressure_fn(params, 1)(rho[0]))
        + pointwise_magnitude(B) / np.sqrt(rho[0])
    )
    vmax = float(np.max(speed))
    if vmax == 0.0:
        return np.inf
    return grid.spacing / vmax


def step_etdrk2(s: State, dt: float, params: PhysParams,
                cfl_factor: float = DEFAULT_CFL_FACTOR) -> State:
    """One exponential-integrator RK2 step.

    Stiff linear parts (Lame on u with frozen 1/rho_bar coefficient, heat on
    B) use exact Fourier propagators; everything else, including the
    (1/rho - 1/rho_bar)-weighted viscous remainder, is integrated explicitly
    at second order.  Density advances inside the same two stages.
    """
    grid = s.grid
    limit = cfl_factor * _cfl_limit(grid, params, s.rho.samples, s.u.samples, s.B.samples)
    if dt > limit:
        raise CFLViolationError(
            f"dt={dt:.6g} exceeds CFL bound {limit:.6g} "
            f"(factor {cfl_factor} times h/max wave speed)"
        )
    mu_s, lam_s = params.mu / params.rho_bar, params.lam / params.rho_bar

    def nonlinear(rho_s, u_s, B_s):
        drho, du, dB, _ = _rhs_arrays(grid, params, rho_s, u_s, B_s)
        cu = dealias_array(grid, forward_array(grid, u_s))
        cB = dealias_array(grid, forward_array(grid, B_s))
        n_u = dealias_array(grid, forward_array(grid, du)) - _apply_lame_symbol(
            grid, cu, mu_s, lam_s, 1.0, lambda z: z
        )
        n_B = dealias_array(grid, forward_array(grid, dB)) + params.nu * grid.wavenumber_sq * cB
        return drho, n_u, n_B, cu, cB

    drho0, n_u0, n_B0, cu0, cB0 = nonlinear(s.rho.samples, s.u.samples, s.B.samples)

    exp_u = lambda c: _apply_lame_symbol(grid, c, mu_s, lam_s, dt, np.exp)
    phi1_u = lambda c: _apply_lame_symbol(grid, c, mu_s, lam_s, dt, _phi1)
    phi2_u = lambda c: _apply_lame_symbol(grid, c, mu_s, lam_s, dt, _phi2)
    exp_B = lambda c: _apply_heat_symbol(grid, c, params.nu, dt, np.exp)
    phi1_B = lambda c: _apply_heat_symbol(grid, c, params.nu, dt, _phi1)
    phi2_B = lambda c: _apply_heat_symbol(grid, c, params.nu, dt, _phi2)

    a_u = exp_u(cu0) + dt * phi1_u(n_u0)
    a_B = exp_B(cB0) + dt * phi1_B(n_B0)
    a_rho = s.rho.samples + dt * drho0

    drho1, n_u1, n_B1, _, _ = nonlinear(a_rho, inverse_array(grid, a_u), inverse_array(grid, a_B))

    new_u = a_u + dt * phi2_u(n_u1 - n_u0)
    new_B = a_B + dt * phi2_B(n_B1 - n_B0)
    new_rho = a_rho + 0.5 * dt * (drho1 - drho0)

    return State(
        t=s.t + dt,
        rho=RealField(grid, new_rho),
        u=RealField(grid, inverse_array(grid, new_u)),
        B=RealField(grid, inverse_array(grid, new_B)),
    )


def simulate(initial: State, params: PhysParams, dt: float, n_steps: int,
             snapshot_every: int = 1, cfl_factor: float = DEFAULT_CFL_FACTOR,
             observer=None) -> Trajectory:
    """March n_steps from the initial state, keeping every
    ``snapshot_every``-th state (plus the first and last)."""
    snaps = [initial]
    s = initial
    for n in range(n_steps):
        s = step_etdrk2(s, dt, params, cfl_factor=cfl_factor)
        if observer is not None:
            observer(s)
        if (n + 1) % snapshot_every == 0 or n == n_steps - 1:
            snaps.append(s)
    return Trajectory(snapshots=tuple(snaps), params=params)


# ---------------------------------------------------------------------------
# structural fields and diagnostics
# ---------------------------------------------------------------------------

def momentum_rhs(s: State, params: PhysParams) -> np.ndarray:
    """rho * (material derivative of u): the momentum equation right side
    without dividing by the density."""
    grid = s.grid
    rho, _, _ = _phys_and_jac(grid, s.rho.samples)
    u, u_coef, u_jac = _phys_and_jac(grid, s.u.samples)
    B, _, B_jac = _phys_and_jac(grid, s.B.samples)
    return _momentum_stress_rhs(grid, params, rho, u_coef, u_jac, B, B_jac)


def flux_and_vorticity(s: State, params: PhysParams) -> FluxFields:
    """Effective viscous flux F = (lam+2mu) div u - (P - P(rho_bar)),
    vorticity tensor omega^{jk} = d_k u^j - d_j u^k, and the momentum
    source g^j = rho udot^j + d_j(|B|^2/2) - div(B^j B)."""
    grid = s.grid
    if np.min(s.rho.samples) < params.c0_floor / 4.0:
        raise DensityFloorError("density below floor")
    rho, _, _ = _phys_and_jac(grid, s.rho.samples, trunc=False)
    u, u_coef, u_jac = _phys_and_jac(grid, s.u.samples, trunc=False)
    B, B_coef, B_jac = _phys_and_jac(grid, s.B.samples, trunc=False)

    div_u = np.einsum("ii...->...", u_jac)
    p_dev = params.pressure_A * (rho ** params.pressure_gamma - params.rho_bar ** params.pressure_gamma)
    F = (params.lam + 2.0 * params.mu) * div_u - p_dev[0]

    omega = u_jac - np.swapaxes(u_jac, 0, 1)  # omega[j,k] = d_k u^j - d_j u^k

    rho_udot = _momentum_stress_rhs(grid, params, rho, u_coef, u_jac, B, B_jac, trunc=False)
    b_sq = np.sum(B * B, axis=0, keepdims=True)
    grad_bsq = _grad_scalar(grid, b_sq, trunc=False)
    # div(B^j B) per component j
    bb = np.einsum("j...,k...->jk...", B, B)
    bb_coef = forward_array(grid, bb.reshape((-1,) + grid.shape))
    bb_coef = bb_coef.reshape((grid.dim, grid.dim) + grid.shape)
    div_bb = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    for k_ax in range(grid.dim):
        div_bb += 1j * grid.wavenumbers[k_ax] * bb_coef[:, k_ax]
    div_bb = inverse_array(grid, div_bb)

    g_vec = rho_udot + 0.5 * grad_bsq - div_bb
    return FluxFields(F=RealField(grid, F), omega=omega, g=RealField(grid, g_vec))


def elliptic_residuals(s: State, params: PhysParams, eps: float = 1e-30):
    """Relative residuals of Lap F = div g and of the vorticity identity
    mu Lap omega^{jk} = (rho udot^j)_k - (rho udot^k)_j
                        - (B.grad B^j)_k + (B.grad B^k)_j."""
    grid = s.grid
    fx = flux_and_vorticity(s, params)

    f_coef = forward_array(grid, fx.F.samples)
    lap_f = inverse_array(grid, -grid.wavenumber_sq * f_coef)
    g_coef = forward_array(grid, fx.g.samples)
    div_g = np.zeros(grid.shape, dtype=complex)
    for ax in range(grid.dim):
        div_g = div_g + 1j * grid.wavenumbers[ax] * g_coef[ax]
    div_g = inverse_array(grid, div_g[np.newaxis])
    r_f = lp_norm_array(grid, lap_f - div_g, 2) / max(lp_norm_array(grid, div_g, 2), eps)

    rho, _, _ = _phys_and_jac(grid, s.rho.samples, trunc=False)
    u, u_coef, u_jac = _phys_and_jac(grid, s.u.samples, trunc=False)
    B, _, B_jac = _phys_and_jac(grid, s.B.samples, trunc=False)
    rho_udot = _momentum_stress_rhs(grid, params, rho, u_coef, u_jac, B, B_jac, trunc=False)
    b_grad_b = _advect(B_jac, B)

    def grad_of(vec):
        coef = forward_array(grid, vec)
        jac = inverse_array(grid, jacobian(grid, coef).reshape((-1,) + grid.shape))
        return jac.reshape((grid.dim, grid.dim) + grid.shape)

    ru_jac = grad_of(rho_udot)   # [j, k] = d_k (rho udot^j)
    bb_jac = grad_of(b_grad_b)

    om_coef = forward_array(grid, fx.omega.reshape((-1,) + grid.shape))
    lap_om = inverse_array(grid, -grid.wavenumber_sq * om_coef)
    lap_om = lap_om.reshape((grid.dim, grid.dim) + grid.shape)

    num = 0.0
    den = 0.0
    w = grid.volume / grid.num_points
    for j in range(grid.dim):
        for k in range(j + 1, grid.dim):
            rhs = ru_jac[j, k] - ru_jac[k, j] - bb_jac[j, k] + bb_jac[k, j]
            res = params.mu * lap_om[j, k] - rhs
            num += w * np.sum(res ** 2)
            den += w * np.sum(rhs ** 2)
    r_omega = np.sqrt(num) / max(np.sqrt(den), eps)
    return float(r_f), float(r_omega)


def material_derivative(f: RealField, f_t: RealField, u: RealField) -> RealField:
    """f_t + (u.grad) f with dealiased advection products."""
    grid = f.grid
    if f_t.grid != grid or u.grid != grid:
        raise GridMismatchError("material derivative operands on different grids")
    _, _, f_jac = _phys_and_jac(grid, f.samples)
    u_phys = inverse_array(grid, dealias_array(grid, forward_array(grid, u.samples)))
    return RealField(grid, f_t.samples + _advect(f_jac, u_phys))


def div_b_norm(s: State) -> float:
    """L^2 norm of div B."""
    grid = s.grid
    coef = forward_array(grid, s.B.samples)
    div = np.zeros(grid.shape, dtype=complex)
    for ax in range(grid.dim):
        div = div + 1j * grid.wavenumbers[ax] * coef[ax]
    return lp_norm_array(grid, inverse_array(grid, div[np.newaxis]), 2)


# ---------------------------------------------------------------------------
# energy bookkeeping used by the stepper tests and the energy monitor
# ---------------------------------------------------------------------------

def pressure_potential(rho: np.ndarray, params: PhysParams) -> np.ndarray:
    """Potential Pi(rho) with Pi'' = P'/rho, normalized to vanish at rho_bar."""
    A, gam, rb = params.pressure_A, params.pressure_gamma, params.rho_bar
    if gam == 1.0:
        return A * (rho * np.log(rho / rb) - (rho - rb))
    return A * (rho ** gam - rb ** gam - gam * rb ** (gam - 1.0) * (rho - rb)) / (gam - 1.0)


def total_energy(s: State, params: PhysParams) -> float:
    """Integral of kinetic + magnetic + pressure potential energy."""
    grid = s.grid
    w = grid.volume / grid.num_points
    rho = s.rho.samples[0]
    kin = 0.5 * rho * np.sum(s.u.samples ** 2, axis=0)
    mag = 0.5 * np.sum(s.B.samples ** 2, axis=0)
    pot = pressure_potential(rho, params)
    return float(w * np.sum(kin + mag + pot))


def dissipation_rate(s: State, params: PhysParams) -> float:
    """Integral of mu |grad u|^2 + (lam+mu) (div u)^2 + nu |grad B|^2."""
    grid = s.grid
    w = grid.volume / grid.num_points
    _, _, u_jac = _phys_and_jac(grid, s.u.samples)
    _, _, B_jac = _phys_and_jac(grid, s.B.samples)
    div_u = np.einsum("ii...->...", u_jac)
    val = (
        params.mu * np.sum(u_jac ** 2)
        + params.mu_prime * np.sum(div_u ** 2)
        + params.nu * np.sum(B_jac ** 2)
    )
    return float(w * val)


def momentum_total(s: State) -> np.ndarray:
    """Box integral of rho u per component."""
    grid = s.grid
    w = grid.volume / grid.num_points
    return w * np.sum(s.rho.samples[0] * s.u.samples, axis=tuple(range(1, grid.dim + 1)))
