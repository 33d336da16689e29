"""Hoff-style diagnostics: the initial-data size, the weighted space-time
functionals, the exact discrete energy balance, and the blow-up indicator.

The time weight is sigma(t) = min(1, t).  Material derivatives and field
time-derivatives are taken from the governing equations (not from finite
differences), so every integrand is an instantaneous function of a state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mhd import (
    State,
    Trajectory,
    _advect,
    _phys_and_jac,
    dissipation_rate,
    momentum_rhs,
    total_energy,
)
from .spectral import (
    PhysParams,
    RealField,
    forward_array,
    inverse_array,
    jacobian,
    lp_norm_array,
    pointwise_magnitude,
)

__all__ = [
    "EnergyReport",
    "sigma_weight",
    "c0",
    "sobolev_h_norm",
    "hoff_functionals",
    "energy_balance",
    "blowup_indicator",
    "energy_report",
]


def sigma_weight(t) -> np.ndarray | float:
    """Initial-layer weight min(1, t)."""
    return np.minimum(1.0, t)


def sobolev_h_norm(f: RealField, s: float) -> float:
    """Inhomogeneous H^s norm (volume * sum_k (1+|k|^2)^s |coef|^2)^{1/2}."""
    grid = f.grid
    coef = forward_array(grid, f.samples)
    weight = (1.0 + grid.wavenumber_sq) ** s
    total = 0.0
    for c in coef:
        total += np.sum(weight * np.abs(c) ** 2)
    return float(np.sqrt(grid.volume * total))


def c0(initial: State, params: PhysParams) -> float:
    """Squared size of the initial data:
    |rho0 - rho_bar|_{L2}^2 + |u0|_{H2}^2 + |B0|_{H1}^2."""
    dev = RealField(initial.grid, initial.rho.samples - params.rho_bar)
    return (
        lp_norm_array(initial.grid, dev.samples, 2) ** 2
        + sobolev_h_norm(initial.u, 2.0) ** 2
        + sobolev_h_norm(initial.B, 1.0) ** 2
    )


# ---------------------------------------------------------------------------
# pointwise building blocks
# ---------------------------------------------------------------------------

def _integrate_box(grid, values: np.ndarray) -> float:
    return float(grid.volume / grid.num_points * np.sum(values))


def _state_derivatives(s: State, params: PhysParams):
    """(rho, u-dot, B_t, grad u, grad B) from the governing equations."""
    grid = s.grid
    rho, _, _ = _phys_and_jac(grid, s.rho.samples)
    u, u_coef, u_jac = _phys_and_jac(grid, s.u.samples)
    B, B_coef, B_jac = _phys_and_jac(grid, s.B.samples)
    udot = momentum_rhs(s, params) / rho
    div_u = np.einsum("ii...->...", u_jac)[np.newaxis]
    b_t = (
        -div_u * B
        - _advect(B_jac, u)
        + _advect(u_jac, B)
        + params.nu * inverse_array(grid, -grid.wavenumber_sq * B_coef)
    )
    return rho, udot, b_t, u_jac, B_jac


def _grad_stack(grid, vec: np.ndarray) -> np.ndarray:
    coef = forward_array(grid, vec)
    return inverse_array(grid, jacobian(grid, coef).reshape((-1,) + grid.shape))


def hoff_functionals(traj: Trajectory, T: float, params: PhysParams):
    """(A1, A2, E_at_T, H) over the trajectory up to time T.

    A1: sup of |grad u|^2 + |grad B|^2 plus the time integral of
        rho |u-dot|^2 + |B_t|^2;
    A2: sup of sigma * (same instantaneous pair) plus time integrals of
        sigma |grad u-dot|^2 and sigma |grad B_t|^2;
    E:  the sigma-weighted mixed-gradient integral at the final snapshot;
    H:  time integrals of |grad B|^3, |grad u|^3, sigma |grad B|^4,
        sigma |grad u|^4.

    Field time-derivatives come from the governing equations; time
    integrals use the trapezoidal rule on the stored snapshots.
    """
    snaps = [s for s in traj.snapshots if s.t <= T + 1e-12]
    if len(snaps) < 3:
        raise ValueError("hoff functionals need at least 3 snapshots up to T")
    grid = traj.grid
    n = len(snaps)
    ts = np.array([s.t for s in snaps])
    sig = sigma_weight(ts)

    grad_sq = np.empty(n)
    dissip = np.empty(n)          # integral rho|udot|^2 + |B_t|^2
    grad_dot_sq = np.empty(n)     # integral |grad udot|^2 + |grad B_t|^2
    grad_u3 = np.empty(n)
    grad_b3 = np.empty(n)
    grad_u4 = np.empty(n)
    grad_b4 = np.empty(n)
    for i, s in enumerate(snaps):
        rho, udot, b_t, u_jac, B_jac = _state_derivatives(s, params)
        gu = pointwise_magnitude(u_jac.reshape((-1,) + grid.shape))
        gb = pointwise_magnitude(B_jac.reshape((-1,) + grid.shape))
        grad_sq[i] = _integrate_box(grid, gu ** 2 + gb ** 2)
        dissip[i] = _integrate_box(
            grid, rho[0] * np.sum(udot ** 2, axis=0) + np.sum(b_t ** 2, axis=0)
        )
        gud = _grad_stack(grid, udot)
        gbd = _grad_stack(grid, b_t)
        grad_dot_sq[i] = _integrate_box(grid, np.sum(gud ** 2, axis=0) + np.sum(gbd ** 2, axis=0))
        grad_u3[i] = _integrate_box(grid, gu ** 3)
        grad_b3[i] = _integrate_box(grid, gb ** 3)
        grad_u4[i] = _integrate_box(grid, gu ** 4)
        grad_b4[i] = _integrate_box(grid, gb ** 4)

    a1 = float(np.max(grad_sq) + np.trapezoid(dissip, ts))
    a2 = float(np.max(sig * dissip) + np.trapezoid(sig * grad_dot_sq, ts))
    h_val = float(
        np.trapezoid(grad_b3, ts)
        + np.trapezoid(grad_u3, ts)
        + np.trapezoid(sig * grad_b4, ts)
        + np.trapezoid(sig * grad_u4, ts)
    )

    s_end = snaps[-1]
    _, _, _, u_jac, B_jac = _state_derivatives(s_end, params)
    gu = pointwise_magnitude(u_jac.reshape((-1,) + grid.shape))
    gb = pointwise_magnitude(B_jac.reshape((-1,) + grid.shape))
    u_sq = np.sum(s_end.u.samples ** 2, axis=0)
    b_sq = np.sum(s_end.B.samples ** 2, axis=0)
    e_val = float(
        sigma_weight(s_end.t)
        * _integrate_box(grid, gb ** 2 * b_sq + gb ** 2 * u_sq + gu ** 2 * b_sq)
    )
    return a1, a2, e_val, h_val


def energy_balance(traj: Trajectory, params: PhysParams) -> dict:
    """Exact energy-identity bookkeeping along a trajectory.

    Per step: E(t_{n+1}) - E(t_n) + dt * (D_n + D_{n+1})/2, reported as the
    max and the accumulated absolute residual, plus the ratio of the
    witness quantity (final L^2 sizes plus gradient dissipation integrals)
    to the initial-data size c0 ('undefined' at equilibrium).
    """
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise ValueError("energy balance needs at least 2 snapshots")
    grid = traj.grid
    ts = np.array([s.t for s in snaps])
    energies = np.array([total_energy(s, params) for s in snaps])
    dissip = np.array([dissipation_rate(s, params) for s in snaps])
    steps = np.diff(ts)
    residuals = np.abs(np.diff(energies) + steps * 0.5 * (dissip[:-1] + dissip[1:]))

    s_end = snaps[-1]
    dev = s_end.rho.samples - params.rho_bar
    lhs = (
        _integrate_box(grid, dev[0] ** 2
                       + s_end.rho.samples[0] * np.sum(s_end.u.samples ** 2, axis=0)
                       + np.sum(s_end.B.samples ** 2, axis=0))
    )
    grad_int = 0.0
    grads = np.empty(len(snaps))
    for i, s in enumerate(snaps):
        _, _, u_jac = _phys_and_jac(grid, s.u.samples)
        _, _, B_jac = _phys_and_jac(grid, s.B.samples)
        grads[i] = _integrate_box(grid, np.sum(u_jac ** 2, axis=(0, 1)) + np.sum(B_jac ** 2, axis=(0, 1)))
    grad_int = float(np.trapezoid(grads, ts))
    c0_val = c0(snaps[0], params)
    ratio = (lhs + grad_int) / c0_val if c0_val > 0 else None

    return {
        "balance_residual": float(np.max(residuals)) if residuals.size else 0.0,
        "accumulated_residual": float(np.sum(residuals)),
        "energy_series": energies,
        "dissipation_series": dissip,
        "witness_over_c0": ratio if ratio is not None else "undefined",
    }


def blowup_indicator(s: State, q: float = 6.0) -> float:
    """|rho|_inf + |u|_{L^q} + |B|_{L^q}; requires q >= 6."""
    if q < 6:
        raise ValueError(f"blow-up indicator needs q >= 6, got {q}")
    grid = s.grid
    return (
        lp_norm_array(grid, s.rho.samples, np.inf)
        + lp_norm_array(grid, s.u.samples, q)
        + lp_norm_array(grid, s.B.samples, q)
    )


@dataclass(frozen=True)
class EnergyReport:
    """Everything the monitor computes on one trajectory."""

    c0: float
    a1: float
    a2: float
    e_at_t: float
    h: float
    sigma_series: np.ndarray
    energy_series: np.ndarray
    dissipation_series: np.ndarray
    balance_residual: float
    accumulated_residual: float
    blowup_series: np.ndarray
    smallness_c0: bool
    smallness_a: bool

    @property
    def a_total(self) -> float:
        return self.a1 + self.a2


def energy_report(traj: Trajectory, params: PhysParams, epsilon0: float = 1.0,
                  blowup_q: float = 6.0) -> EnergyReport:
    """Full diagnostic bundle; the smallness pair reports C0 <= eps0 and
    A1 + A2 <= sqrt(eps0) without claiming any implication between them."""
    ts = traj.times
    a1, a2, e_val, h_val = hoff_functionals(traj, float(ts[-1]), params)
    bal = energy_balance(traj, params)
    c0_val = c0(traj.snapshots[0], params)
    blow = np.array([blowup_indicator(s, blowup_q) for s in traj.snapshots])
    return EnergyReport(
        c0=c0_val,
        a1=a1,
        a2=a2,
        e_at_t=e_val,
        h=h_val,
        sigma_series=sigma_weight(ts),
        energy_series=bal["energy_series"],
        dissipation_series=bal["dissipation_series"],
        balance_residual=bal["balance_residual"],
        accumulated_residual=bal["accumulated_residual"],
        blowup_series=blow,
        smallness_c0=bool(c0_val <= epsilon0),
        smallness_a=bool(a1 + a2 <= np.sqrt(epsilon0)),
    )
