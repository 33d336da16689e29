"""Flow maps, Jacobian algebra, Euler/Lagrange transport, and numerical
certification of the coordinate-transform identities.

Index conventions (fixed by the master identity below, and exercised by the
transform-residual tests):

* ``DX[i, j] = d X_i / d y_j`` (Jacobian of the map), ``A = DX^{-1}``,
  ``adjDX = J * A`` with ``J = det DX``.
* Matrix divergence acts along rows: ``div(M)_i = sum_j d_j M[i, j]``.
* Piola identity: ``div(adjDX^T) = 0``.
* Master transform identity, for any matrix field G(x):
  ``div_x(G) composed with X  =  J^{-1} div_y( G-tilde @ adjDX^T )``.

Pull-backs evaluate trigonometric interpolants at particle positions; the
particle ODE is integrated with fixed-step RK4 and cubic-in-time velocity
interpolation between stored snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FoldError, GridMismatchError
from .spectral import (
    Grid,
    RealField,
    forward_array,
    inverse_array,
    jacobian,
    lp_norm_array,
)

__all__ = [
    "FlowMap",
    "LagrangianState",
    "flow_map_from_displacement",
    "identity_flow_map",
    "compute_flow_map",
    "displacement_flow_map",
    "pull_back",
    "pull_back_state",
    "inverse_positions",
    "push_forward",
    "recover_density",
    "transform_residuals",
    "piola_defect",
    "mass_residual",
    "matrix_divergence",
    "evaluate_at_points",
]


# ---------------------------------------------------------------------------
# scattered evaluation of trigonometric interpolants
# ---------------------------------------------------------------------------

ACTIVE_MODE_CUTOFF = 1e-15


def _active_modes(grid: Grid, coef: np.ndarray, rel_cutoff: float = ACTIVE_MODE_CUTOFF):
    """Integer mode vectors and amplitudes of the modes that carry the field.

    Modes below ``rel_cutoff`` times the peak coefficient magnitude are
    transform round-off and are dropped; this keeps scattered evaluation
    proportional to the true spectral support.
    """
    mag = np.max(np.abs(coef), axis=0)
    peak = float(np.max(mag)) if mag.size else 0.0
    mask = mag > rel_cutoff * peak if peak > 0 else np.zeros(grid.shape, dtype=bool)
    idx = np.argwhere(mask)  # (n_modes, dim), integer array positions
    n = grid.points_per_axis
    modes = np.where(idx <= n // 2, idx, idx - n)
    amps = np.stack([c[mask] for c in coef])  # (ncomp, n_modes)
    return modes, amps


def evaluate_at_points(grid: Grid, coef: np.ndarray, points: np.ndarray,
                       chunk: int = 8192,
                       rel_cutoff: float = ACTIVE_MODE_CUTOFF) -> np.ndarray:
    """Evaluate sum_k coef(k) exp(i k.x) at scattered points.

    ``coef`` is component-stacked, ``points`` has shape (n_points, dim);
    returns (ncomp, n_points).  Points need not lie in the base box.
    The phase factors are built per axis from tables over the distinct
    integer modes, so the cost is points x modes multiplies, not exps.
    """
    modes, amps = _active_modes(grid, coef, rel_cutoff)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((coef.shape[0], pts.shape[0]))
    if modes.size == 0:
        out[:] = 0.0
        return out
    scale = 2.0 * np.pi / grid.period
    amps_t = np.ascontiguousarray(amps.T)  # (n_modes, ncomp)
    axis_modes = []
    for d in range(grid.dim):
        uniq, inv = np.unique(modes[:, d], return_inverse=True)
        axis_modes.append((uniq.astype(float), inv))
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        uniq0, inv0 = axis_modes[0]
        phase = np.exp(1j * scale * np.outer(block[:, 0], uniq0))[:, inv0]
        for d in range(1, grid.dim):
            uniq, inv = axis_modes[d]
            phase *= np.exp(1j * scale * np.outer(block[:, d], uniq))[:, inv]
        out[:, start : start + block.shape[0]] = (phase @ amps_t).real.T
    return out


def _lagrange_weights(times: np.ndarray, tau: float, width: int = 4) -> tuple:
    """Interpolation window indices and Lagrange weights at time tau."""
    n = times.size
    w = min(width, n)
    anchor = int(np.searchsorted(times, tau))
    start = min(max(anchor - w // 2, 0), n - w)
    window = times[start : start + w]
    weights = np.ones(w)
    for i in range(w):
        for m in range(w):
            if m != i:
                weights[i] *= (tau - window[m]) / (window[i] - window[m])
    return start, weights


# ---------------------------------------------------------------------------
# flow map type and constructors
# ---------------------------------------------------------------------------

def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FlowMap:
    """Sampled flow map: displacement X(t,y) - y with its Jacobian algebra."""

    grid: Grid
    t: float
    displacement: RealField
    DX: np.ndarray = field(repr=False)      # (dim, dim) + shape
    J: np.ndarray = field(repr=False)       # shape
    A: np.ndarray = field(repr=False)       # (dim, dim) + shape
    adjDX: np.ndarray = field(repr=False)   # (dim, dim) + shape

    def __post_init__(self):
        for name in ("DX", "J", "A", "adjDX"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name))))
        if np.min(self.J) <= 0.0:
            raise FoldError(
                f"flow map folded: min det DX = {float(np.min(self.J)):.6g}"
            )

    def positions(self) -> np.ndarray:
        """Particle positions X(t, y) as (n_points, dim)."""
        g = self.grid
        base = np.stack([c.ravel() for c in g.coords], axis=1)
        disp = self.displacement.samples.reshape(g.dim, -1).T
        return base + disp

    def consistency_defect(self) -> float:
        """max pointwise |adjDX - J*A| relative to max |adjDX|."""
        diff = np.max(np.abs(self.adjDX - self.J * self.A))
        scale = max(float(np.max(np.abs(self.adjDX))), 1e-300)
        return float(diff / scale)


@dataclass(frozen=True)
class LagrangianState:
    """Tilde fields: an Eulerian state composed with a flow map."""

    rho: RealField
    u: RealField
    B: RealField


def _det_inv_adj(grid: Grid, dx: np.ndarray):
    """Pointwise determinant, inverse, adjugate of a stacked matrix field."""
    mats = np.moveaxis(dx.reshape(grid.dim, grid.dim, -1), -1, 0)  # (P, d, d)
    det = np.linalg.det(mats)
    if np.min(det) <= 0.0:
        raise FoldError(f"flow map folded: min det DX = {float(np.min(det)):.6g}")
    inv = np.linalg.inv(mats)
    adj = det[:, None, None] * inv
    shape = (grid.dim, grid.dim) + grid.shape
    J = det.reshape(grid.shape)
    A = np.moveaxis(inv, 0, -1).reshape(shape)
    adjDX = np.moveaxis(adj, 0, -1).reshape(shape)
    return J, A, adjDX


def flow_map_from_displacement(grid: Grid, t: float, disp: np.ndarray) -> FlowMap:
    """Assemble DX, J, A, adjDX from a periodic displacement field."""
    disp = np.asarray(disp, dtype=float)
    coef = forward_array(grid, disp)
    jac = inverse_array(grid, jacobian(grid, coef).reshape((-1,) + grid.shape))
    dx = jac.reshape((grid.dim, grid.dim) + grid.shape)
    eye = np.zeros_like(dx)
    for i in range(grid.dim):
        eye[i, i] = 1.0
    dx = dx + eye
    J, A, adjDX = _det_inv_adj(grid, dx)
    return FlowMap(
        grid=grid, t=t, displacement=RealField(grid, disp),
        DX=dx, J=J, A=A, adjDX=adjDX,
    )


def identity_flow_map(grid: Grid, t: float = 0.0) -> FlowMap:
    return flow_map_from_displacement(grid, t, np.zeros((grid.dim,) + grid.shape))


def compute_flow_map(traj, t: float, substeps_per_interval: int = 4,
                     mode_cutoff: float = ACTIVE_MODE_CUTOFF) -> FlowMap:
    """Integrate particles from every grid node through a velocity history.

    ``traj`` is anything with ``times``/``snapshots[i].u`` (an Eulerian
    trajectory).  RK4 with fixed substep (snapshot spacing / substeps);
    velocity is evaluated by trigonometric interpolation in space and cubic
    Lagrange interpolation in time.  ``mode_cutoff`` bounds the relative
    size of velocity modes dropped during particle advection.
    """
    times = np.asarray(traj.times, dtype=float)
    grid = traj.snapshots[0].grid
    if not (times[0] <= t <= times[-1] + 1e-12):
        raise ValueError(f"t={t} outside trajectory range [{times[0]}, {times[-1]}]")
    coefs = [forward_array(grid, s.u.samples) for s in traj.snapshots]

    def velocity(tau: float, pts: np.ndarray) -> np.ndarray:
        start, w = _lagrange_weights(times, tau)
        c = w[0] * coefs[start]
        for i in range(1, w.size):
            c = c + w[i] * coefs[start + i]
        return evaluate_at_points(grid, c, pts, rel_cutoff=mode_cutoff).T

    pts = np.stack([c.ravel() for c in grid.coords], axis=1)
    base = pts.copy()
    tau = times[0]
    for i in range(times.size - 1):
        if tau >= t:
            break
        seg_end = min(times[i + 1], t)
        h = (seg_end - times[i]) / substeps_per_interval
        if h <= 0:
            continue
        for _ in range(substeps_per_interval):
            k1 = velocity(tau, pts)
            k2 = velocity(tau + 0.5 * h, pts + 0.5 * h * k1)
            k3 = velocity(tau + 0.5 * h, pts + 0.5 * h * k2)
            k4 = velocity(tau + h, pts + h * k3)
            pts = pts + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            tau += h
        tau = seg_end

    disp = (pts - base).T.reshape((grid.dim,) + grid.shape)
    return flow_map_from_displacement(grid, t, disp)


def displacement_flow_map(grid: Grid, times: np.ndarray, u_history: np.ndarray,
                          t_index: int) -> FlowMap:
    """Flow map for a velocity already given in Lagrangian coordinates.

    There the particle ODE collapses to a per-node quadrature
    X(t,y) = y + integral of u(tau, y); the trapezoidal rule is used on the
    stored time grid.  ``u_history`` has shape (n_times, dim) + grid.shape.
    """
    ts = np.asarray(times, dtype=float)[: t_index + 1]
    disp = np.trapezoid(u_history[: t_index + 1], ts, axis=0)
    return flow_map_from_displacement(grid, float(ts[-1]), disp)


# ---------------------------------------------------------------------------
# transport between coordinates
# ---------------------------------------------------------------------------

def pull_back(f: RealField, fm: FlowMap,
              rel_cutoff: float = ACTIVE_MODE_CUTOFF) -> RealField:
    """Compose a field with the flow map: (f o X)(y)."""
    if f.grid != fm.grid:
        raise GridMismatchError("field and flow map on different grids")
    grid = f.grid
    coef = forward_array(grid, f.samples)
    vals = evaluate_at_points(grid, coef, fm.positions(), rel_cutoff=rel_cutoff)
    return RealField(grid, vals.reshape((f.components,) + grid.shape))


def pull_back_state(s, fm: FlowMap) -> LagrangianState:
    return LagrangianState(
        rho=pull_back(s.rho, fm), u=pull_back(s.u, fm), B=pull_back(s.B, fm)
    )


def inverse_positions(fm: FlowMap, tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Solve X(y) = x for every grid node x by damped fixed-point iteration.

    Returns (n_points, dim) array of preimages y.  Converges while the
    displacement gradient is below 1 in norm (the same small-flow regime
    the fold guard enforces).
    """
    grid = fm.grid
    coef = forward_array(grid, fm.displacement.samples)
    targets = np.stack([c.ravel() for c in grid.coords], axis=1)
    y = targets.copy()
    for _ in range(max_iter):
        disp = evaluate_at_points(grid, coef, y).T
        resid = y + disp - targets
        y = y - resid
        if np.max(np.abs(resid)) <= tol:
            return y
    raise FoldError(
        f"inverse map iteration did not reach {tol:g} in {max_iter} steps"
    )


def push_forward(f_lagr: RealField, fm: FlowMap, tol: float = 1e-10) -> RealField:
    """Evaluate a Lagrangian-coordinate field at Eulerian grid nodes."""
    grid = f_lagr.grid
    y = inverse_positions(fm, tol=tol)
    coef = forward_array(grid, f_lagr.samples)
    vals = evaluate_at_points(grid, coef, y)
    return RealField(grid, vals.reshape((f_lagr.components,) + grid.shape))


def recover_density(rho0: RealField, fm: FlowMap) -> RealField:
    """Density from mass conservation: rho-tilde = rho0 / J, pushed forward
    to Eulerian coordinates through the inverse map."""
    rho_lagr = RealField(fm.grid, rho0.samples / fm.J)
    return push_forward(rho_lagr, fm)


# ---------------------------------------------------------------------------
# transform identities
# ---------------------------------------------------------------------------

def matrix_divergence(grid: Grid, M: np.ndarray) -> np.ndarray:
    """Row divergence (div M)_i = sum_j d_j M[i, j], spectral."""
    coef = forward_array(grid, M.reshape((-1,) + grid.shape))
    coef = coef.reshape((grid.dim, grid.dim) + grid.shape)
    out = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    for j in range(grid.dim):
        out += 1j * grid.wavenumbers[j] * coef[:, j]
    return inverse_array(grid, out)


def _vector_divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    coef = forward_array(grid, v)
    out = np.zeros(grid.shape, dtype=complex)
    for j in range(grid.dim):
        out += 1j * grid.wavenumbers[j] * coef[j]
    return inverse_array(grid, out[np.newaxis])


def piola_defect(fm: FlowMap) -> float:
    """L^2 norm of div(adjDX^T), normalized by the adjugate's L^2 norm."""
    grid = fm.grid
    div = matrix_divergence(grid, np.swapaxes(fm.adjDX, 0, 1))
    scale = max(lp_norm_array(grid, fm.adjDX.reshape((-1,) + grid.shape), 2), 1e-300)
    return lp_norm_array(grid, div, 2) / scale


def _jac_phys(grid: Grid, samples: np.ndarray) -> np.ndarray:
    coef = forward_array(grid, samples)
    jac = inverse_array(grid, jacobian(grid, coef).reshape((-1,) + grid.shape))
    return jac.reshape((samples.shape[0], grid.dim) + grid.shape)


def transform_residuals(s, fm: FlowMap, eps: float = 1e-300,
                        eval_cutoff: float = ACTIVE_MODE_CUTOFF) -> dict:
    """Relative L^2 residuals of the five Euler-to-Lagrange transport
    identities, each of the form
    (Eulerian expression) o X  =  J^{-1} div_y(Lagrangian expression).
    """
    grid = s.grid
    if fm.grid != grid:
        raise GridMismatchError("state and flow map on different grids")
    u, B = s.u, s.B
    u_jac = _jac_phys(grid, u.samples)
    B_jac = _jac_phys(grid, B.samples)
    div_u = np.einsum("ii...->...", u_jac)[np.newaxis]
    b_sq = np.sum(B.samples * B.samples, axis=0, keepdims=True)
    grad_bsq = _jac_phys(grid, b_sq)[0]
    b_grad_b = np.einsum("ij...,j...->i...", B_jac, B.samples)
    b_grad_u = np.einsum("ij...,j...->i...", u_jac, B.samples)
    advect_b = np.einsum("ij...,j...->i...", B_jac, u.samples)

    u_t = pull_back(u, fm, rel_cutoff=eval_cutoff).samples
    B_t = pull_back(B, fm, rel_cutoff=eval_cutoff).samples
    adj = fm.adjDX
    adj_u = np.einsum("ij...,j...->i...", adj, u_t)
    adj_b = np.einsum("ij...,j...->i...", adj, B_t)
    bsq_t = np.sum(B_t * B_t, axis=0)
    inv_j = 1.0 / fm.J

    def pull(arr):
        return pull_back(RealField(grid, arr), fm, rel_cutoff=eval_cutoff).samples

    def rel(lhs, rhs):
        return float(
            lp_norm_array(grid, lhs - rhs, 2) / max(lp_norm_array(grid, lhs, 2), eps)
        )

    out = {}
    # 1. grad|B|^2: matrix adjDX^T * |B|^2
    rhs = inv_j * matrix_divergence(grid, np.swapaxes(adj, 0, 1) * bsq_t)
    out["grad_b_squared"] = rel(pull(grad_bsq), rhs)
    # 2. B.grad B = div(B x B): matrix B_i (adj B)_k
    rhs = inv_j * matrix_divergence(grid, np.einsum("i...,k...->ik...", B_t, adj_b))
    out["b_grad_b"] = rel(pull(b_grad_b), rhs)
    # 3. div u: scalar J^{-1} div(adj u)
    rhs = inv_j * _vector_divergence(grid, adj_u)
    out["div_u"] = rel(pull(div_u), rhs)
    # 4. (div u) B + u.grad B = div(B x u): matrix B_i (adj u)_k
    rhs = inv_j * matrix_divergence(grid, np.einsum("i...,k...->ik...", B_t, adj_u))
    out["div_u_b_transport"] = rel(pull(div_u * B.samples + advect_b), rhs)
    # 5. B.grad u = div(u x B): matrix u_i (adj B)_k
    rhs = inv_j * matrix_divergence(grid, np.einsum("i...,k...->ik...", u_t, adj_b))
    out["b_grad_u"] = rel(pull(b_grad_u), rhs)
    return out


def mass_residual(traj, t: float, substeps_per_interval: int = 4) -> float:
    """L^2 norm of the centered time difference of J * rho-tilde at t."""
    times = np.asarray(traj.times, dtype=float)
    if times.size < 3:
        raise ValueError("mass residual needs at least 3 snapshots")
    idx = int(np.argmin(np.abs(times - t)))
    idx = min(max(idx, 1), times.size - 2)
    grid = traj.snapshots[0].grid

    def j_rho(i: int) -> np.ndarray:
        fm = compute_flow_map(traj, float(times[i]), substeps_per_interval)
        rho_t = pull_back(traj.snapshots[i].rho, fm).samples[0]
        return fm.J * rho_t

    dt_minus = times[idx] - times[idx - 1]
    dt_plus = times[idx + 1] - times[idx]
    diff = (j_rho(idx + 1) - j_rho(idx - 1)) / (dt_minus + dt_plus)
    return lp_norm_array(grid, diff[np.newaxis], 2)
