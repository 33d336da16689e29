"""Periodic grid, Fourier transforms, spectral operators, norms, dealiased products.

Conventions used throughout the package:

* The box is ``[0, period)^dim`` sampled on a uniform lattice with
  ``points_per_axis`` nodes per axis.
* The forward transform is ``coef(k) = (1/M) sum_x f(x) exp(-i k.x)`` with
  ``M`` the total number of nodes, the inverse is
  ``f(x) = sum_k coef(k) exp(i k.x)`` (numpy's ``norm="forward"``).
* Integer mode ``m`` corresponds to the physical frequency
  ``k = (2*pi/period) * m``.  Only modes with ``|m_i| <= cutoff``
  (``cutoff = points_per_axis/2 - 1``) are resolved; the Nyquist plane is
  projected out on every forward transform.

All values are immutable after construction (backing arrays are marked
read-only) and every operation here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "PhysParams",
    "make_grid",
    "forward",
    "inverse",
    "differentiate",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "partial",
    "jacobian",
    "lp_norm",
    "dealias_product",
    "dealias",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic sampling lattice.

    Attributes:
        dim: spatial dimension, 1, 2 or 3
        points_per_axis: even number of nodes per axis, >= 8
        period: box edge length (same along every axis)
    """

    dim: int
    points_per_axis: int
    period: float = 2.0 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.points_per_axis
        if n % 2 != 0 or n < 8:
            raise ValueError(
                f"points_per_axis must be even and >= 8, got {n}"
            )
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def cutoff(self) -> int:
        """Largest resolved integer mode per axis (Nyquist excluded)."""
        return self.points_per_axis // 2 - 1

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def num_points(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def volume(self) -> float:
        return self.period ** self.dim

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @cached_property
    def coords(self) -> tuple:
        """Meshgrid of node coordinates, one array per axis."""
        x = np.arange(self.points_per_axis) * self.spacing
        axes = np.meshgrid(*([x] * self.dim), indexing="ij")
        for a in axes:
            a.flags.writeable = False
        return tuple(axes)

    @cached_property
    def modes(self) -> tuple:
        """Integer mode numbers along each axis, broadcast to full shape."""
        n = self.points_per_axis
        m1d = np.fft.fftfreq(n, d=1.0 / n)  # integers as floats
        out = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = n
            m = m1d.reshape(shape)
            m.flags.writeable = False
            out.append(m)
        return tuple(out)

    @cached_property
    def wavenumbers(self) -> tuple:
        """Physical frequencies (2*pi/period) * mode along each axis."""
        scale = 2.0 * np.pi / self.period
        out = []
        for m in self.modes:
            k = scale * m
            k.flags.writeable = False
            out.append(k)
        return tuple(out)

    @cached_property
    def wavenumber_sq(self) -> np.ndarray:
        k2 = np.zeros(self.shape)
        for k in self.wavenumbers:
            k2 = k2 + k * k
        k2.flags.writeable = False
        return k2

    @cached_property
    def resolved_mask(self) -> np.ndarray:
        """True where every |mode_i| <= cutoff (Nyquist plane excluded)."""
        mask = np.ones(self.shape, dtype=bool)
        for m in self.modes:
            mask &= np.abs(m) <= self.cutoff
        mask.flags.writeable = False
        return mask

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: True where every |mode_i| <= (2/3)(n/2)."""
        limit = (2.0 / 3.0) * (self.points_per_axis / 2.0)
        mask = np.ones(self.shape, dtype=bool)
        for m in self.modes:
            mask &= np.abs(m) <= limit
        mask.flags.writeable = False
        return mask


def make_grid(dim: int, points_per_axis: int, period: float = 2.0 * np.pi) -> Grid:
    """Build a periodic grid; rejects odd or too-small resolutions."""
    return Grid(dim=dim, points_per_axis=points_per_axis, period=period)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RealField:
    """Real-valued field sampled on a grid; leading axis indexes components."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape == self.grid.shape:
            s = s[np.newaxis]
        if s.shape[1:] != self.grid.shape or s.ndim != self.grid.dim + 1:
            raise ValueError(
                f"samples shape {s.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("field contains NaN or Inf")
        object.__setattr__(self, "samples", _freeze(s))

    @property
    def components(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a field; Nyquist modes are kept at zero."""

    grid: Grid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape == self.grid.shape:
            c = c[np.newaxis]
        if c.shape[1:] != self.grid.shape or c.ndim != self.grid.dim + 1:
            raise ValueError(
                f"coefficients shape {c.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "coefficients", _freeze(c))

    @property
    def components(self) -> int:
        return self.coefficients.shape[0]

    def hermitian_defect(self) -> float:
        """Max |coef(-k) - conj(coef(k))| over resolved modes."""
        c = self.coefficients
        flipped = c.copy()
        for ax in range(1, self.grid.dim + 1):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        return float(np.max(np.abs(flipped.conj() - c)))


@dataclass(frozen=True)
class PhysParams:
    """Physical parameters of the isentropic MHD system.

    ``mu`` and ``lam`` are the shear and bulk viscosities (mu > 0,
    lam + 2 mu > 0), ``nu`` the magnetic diffusivity, the pressure law is
    ``P(rho) = pressure_A * rho**pressure_gamma``, ``rho_bar`` the reference
    density and ``c0_floor`` the positivity floor parameter.
    """

    mu: float = 1.0
    lam: float = 0.0
    nu: float = 1.0
    pressure_A: float = 1.0
    pressure_gamma: float = 1.4
    rho_bar: float = 1.0
    c0_floor: float = 0.5

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lam + 2.0 * self.mu > 0:
            raise ValueError("lam + 2*mu must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.pressure_A > 0:
            raise ValueError("pressure_A must be positive")
        if not self.pressure_gamma >= 1:
            raise ValueError("pressure_gamma must be >= 1")
        if not self.rho_bar > 0:
            raise ValueError("rho_bar must be positive")
        if not 0 < self.c0_floor < 1:
            raise ValueError("c0_floor must lie in (0, 1)")
        # P'(rho_bar) = A*gamma*rho_bar**(gamma-1) > 0 holds automatically
        # for A, gamma, rho_bar in range.

    @property
    def mu_prime(self) -> float:
        return self.lam + self.mu


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def _spatial_axes(grid: Grid) -> tuple:
    return tuple(range(1, grid.dim + 1))


def forward_array(grid: Grid, samples: np.ndarray) -> np.ndarray:
    """FFT of component-stacked samples, Nyquist plane projected out."""
    coef = np.fft.fftn(samples, axes=_spatial_axes(grid), norm="forward")
    coef[:, ~grid.resolved_mask] = 0.0
    return coef


def inverse_array(grid: Grid, coef: np.ndarray) -> np.ndarray:
    out = np.fft.ifftn(coef, axes=_spatial_axes(grid), norm="forward")
    return np.ascontiguousarray(out.real)


def forward(f: RealField) -> SpectralField:
    """Forward transform; coefficients beyond the cutoff are dropped."""
    return SpectralField(f.grid, forward_array(f.grid, f.samples))


def inverse(f: SpectralField) -> RealField:
    """Inverse transform back to physical samples (real part)."""
    return RealField(f.grid, inverse_array(f.grid, f.coefficients))


# ---------------------------------------------------------------------------
# differential operators (exact multipliers)
# ---------------------------------------------------------------------------

def _partial_array(grid: Grid, coef: np.ndarray, axis: int) -> np.ndarray:
    return 1j * grid.wavenumbers[axis] * coef


def partial(f: SpectralField, axis: int) -> SpectralField:
    """d/dx_axis via the exact multiplier i*k_axis."""
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    return SpectralField(f.grid, _partial_array(f.grid, f.coefficients, axis))


def gradient(f: SpectralField) -> SpectralField:
    """Gradient of a scalar field; returns a dim-component field."""
    if f.components != 1:
        raise ValueError("gradient expects a scalar (1-component) field")
    g = f.grid
    out = np.concatenate(
        [_partial_array(g, f.coefficients, ax) for ax in range(g.dim)], axis=0
    )
    return SpectralField(g, out)


def divergence(f: SpectralField) -> SpectralField:
    """Divergence of a dim-component vector field; returns a scalar."""
    g = f.grid
    if f.components != g.dim:
        raise ValueError(
            f"divergence expects {g.dim} components, got {f.components}"
        )
    out = _partial_array(g, f.coefficients[0:1], 0)
    for ax in range(1, g.dim):
        out = out + _partial_array(g, f.coefficients[ax : ax + 1], ax)
    return SpectralField(g, out)


def curl(f: SpectralField) -> SpectralField:
    """Curl of a 3-component field on a 3-d grid."""
    g = f.grid
    if g.dim != 3 or f.components != 3:
        raise ValueError("curl requires a 3-component field on a 3-d grid")
    c = f.coefficients
    o0 = _partial_array(g, c[2:3], 1) - _partial_array(g, c[1:2], 2)
    o1 = _partial_array(g, c[0:1], 2) - _partial_array(g, c[2:3], 0)
    o2 = _partial_array(g, c[1:2], 0) - _partial_array(g, c[0:1], 1)
    return SpectralField(g, np.concatenate([o0, o1, o2], axis=0))


def laplacian(f: SpectralField) -> SpectralField:
    """Laplacian, composed as sum of repeated partials.

    Composing partials (rather than applying a precomputed -|k|^2 table)
    makes div(grad f) == laplacian(f) hold bitwise.
    """
    g = f.grid
    out = None
    for ax in range(g.dim):
        term = _partial_array(g, _partial_array(g, f.coefficients, ax), ax)
        out = term if out is None else out + term
    return SpectralField(g, out)


def differentiate(f: SpectralField, kind: str, axis: int | None = None) -> SpectralField:
    """Dispatch on operator name: gradient | divergence | curl | laplacian | partial."""
    if kind == "gradient":
        return gradient(f)
    if kind == "divergence":
        return divergence(f)
    if kind == "curl":
        return curl(f)
    if kind == "laplacian":
        return laplacian(f)
    if kind == "partial":
        if axis is None:
            raise ValueError("partial requires an axis")
        return partial(f, axis)
    raise ValueError(f"unknown derivative kind {kind!r}")


def jacobian(grid: Grid, coef: np.ndarray) -> np.ndarray:
    """All first partials of a component-stacked coefficient array.

    Returns shape (components, dim) + grid.shape with entry [i, j] equal to
    d(f_i)/dx_j.
    """
    ncomp = coef.shape[0]
    out = np.empty((ncomp, grid.dim) + grid.shape, dtype=complex)
    for j in range(grid.dim):
        out[:, j] = 1j * grid.wavenumbers[j] * coef
    return out


# ---------------------------------------------------------------------------
# norms and products
# ---------------------------------------------------------------------------

def pointwise_magnitude(samples: np.ndarray) -> np.ndarray:
    """Euclidean magnitude across the leading component axis."""
    if samples.shape[0] == 1:
        return np.abs(samples[0])
    return np.sqrt(np.sum(samples * samples, axis=0))


def lp_norm_array(grid: Grid, samples: np.ndarray, p: float) -> float:
    mag = pointwise_magnitude(samples)
    if p == np.inf:
        return float(np.max(mag))
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    w = grid.volume / grid.num_points
    return float((w * np.sum(mag ** p)) ** (1.0 / p))


def lp_norm(f: RealField, p: float) -> float:
    """Lebesgue norm by uniform-lattice quadrature.

    For vector fields the pointwise Euclidean magnitude is used; p = inf
    gives the max norm.
    """
    return lp_norm_array(f.grid, f.samples, p)


def dealias_array(grid: Grid, coef: np.ndarray) -> np.ndarray:
    out = coef.copy()
    out[:, ~grid.dealias_mask] = 0.0
    return out


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with any |k_i| beyond the two-thirds cutoff."""
    return SpectralField(f.grid, dealias_array(f.grid, f.coefficients))


def product_array(grid: Grid, coef_f: np.ndarray, coef_g: np.ndarray) -> np.ndarray:
    """Dealiased physical-space product of two coefficient arrays.

    Inputs are truncated by the two-thirds rule, multiplied pointwise
    (broadcasting over components), and the result is re-truncated.
    """
    cf = dealias_array(grid, coef_f)
    cg = dealias_array(grid, coef_g)
    pf = inverse_array(grid, cf)
    pg = inverse_array(grid, cg)
    prod = pf * pg
    return dealias_array(grid, forward_array(grid, prod))


def dealias_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Two-thirds-rule product; componentwise with broadcasting over scalars."""
    if f.grid != g.grid:
        raise GridMismatchError("operands live on different grids")
    if f.components != g.components and 1 not in (f.components, g.components):
        raise ValueError(
            f"incompatible component counts {f.components} and {g.components}"
        )
    return SpectralField(f.grid, product_array(f.grid, f.coefficients, g.coefficients))
