"""Dyadic frequency decomposition and the Besov-type norm families.

The partition of unity is built from the explicit smooth bump

    psi(s) = h(s) / (h(s) + h(1-s)),   h(s) = exp(-1/s) for s > 0 else 0,
    chi(xi) = psi((4/3 - |xi|) / (4/3 - 3/4)),
    phi(xi) = chi(xi/2) - chi(xi),

so chi == 1 on |xi| <= 3/4, chi == 0 on |xi| >= 4/3, and phi is supported
in the annulus 3/4 <= |xi| <= 8/3.  On the discrete torus the dyadic index
runs over a finite window [j_min, j_max] wide enough that the telescoping
sum equals 1 exactly on every resolved nonzero frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import GridMismatchError
from .spectral import (
    Grid,
    RealField,
    SpectralField,
    forward,
    forward_array,
    inverse_array,
    lp_norm_array,
    product_array,
)

__all__ = [
    "DyadicFamily",
    "BesovSpec",
    "FieldHistory",
    "build_dyadic_family",
    "get_family",
    "dyadic_block",
    "block_lp_norms",
    "besov_norm",
    "hybrid_besov_norm",
    "weight_omega",
    "chemin_lerner_norm",
    "bony_decompose",
    "hs_norm",
]


def _h(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _psi(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    hs = _h(s[mid])
    out[mid] = hs / (hs + _h(1.0 - s[mid]))
    return out


def bump_chi(r: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 on r <= 3/4, 0 on r >= 4/3, smooth between."""
    r = np.asarray(r, dtype=float)
    return _psi((4.0 / 3.0 - r) / (4.0 / 3.0 - 3.0 / 4.0))


@dataclass(frozen=True)
class DyadicFamily:
    """Tabulated shell multipliers phi(2**-j xi) on the resolved frequencies.

    ``phi_table[i]`` is the multiplier for j = j_min + i; ``low_table[i]``
    is the cumulative multiplier sum_{k <= j-1} phi_k (mean mode excluded).
    """

    grid: Grid
    j_min: int
    j_max: int
    phi_table: np.ndarray = field(repr=False)
    low_table: np.ndarray = field(repr=False)

    @property
    def js(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def index(self, j: int) -> int:
        if not self.j_min <= j <= self.j_max:
            raise ValueError(f"j={j} outside tabulated range [{self.j_min}, {self.j_max}]")
        return j - self.j_min

    def phi(self, j: int) -> np.ndarray:
        """Shell multiplier at dyadic index j; zero outside the window."""
        if j < self.j_min or j > self.j_max:
            return np.zeros(self.grid.shape)
        return self.phi_table[self.index(j)]

    def low(self, j: int) -> np.ndarray:
        """Cumulative multiplier sum_{k <= j-1} phi_k (no mean mode)."""
        if j <= self.j_min:
            return np.zeros(self.grid.shape)
        if j > self.j_max + 1:
            j = self.j_max + 1
        return self.low_table[j - self.j_min]


def build_dyadic_family(grid: Grid) -> DyadicFamily:
    """Tabulate the dyadic partition of unity for a grid.

    The window is j_min = -1, j_max = ceil(log2(sqrt(dim) * cutoff)) + 1 for
    the default 2*pi period (for other periods the window is widened so the
    telescoping endpoints stay exact).  Raises if the cutoff is below 3.
    """
    if grid.cutoff < 3:
        raise ValueError(f"grid cutoff {grid.cutoff} too small for dyadic shells")
    xi = np.sqrt(grid.wavenumber_sq)
    xi_nonzero = xi[xi > 0]
    xi_min = float(np.min(xi_nonzero))
    xi_max = float(np.max(xi[grid.resolved_mask]))
    j_min = min(-1, int(np.floor(np.log2(xi_min))) - 1)
    j_max = max(int(np.ceil(np.log2(xi_max))) + 1, j_min + 1)

    njs = j_max - j_min + 1
    chi_vals = np.empty((njs + 1,) + grid.shape)
    for i, j in enumerate(range(j_min, j_max + 2)):
        chi_vals[i] = bump_chi(xi / 2.0 ** j)
    phi = np.clip(chi_vals[1:] - chi_vals[:-1], 0.0, 1.0)
    phi[:, ~grid.resolved_mask] = 0.0

    low = np.zeros((njs + 1,) + grid.shape)
    np.cumsum(phi, axis=0, out=low[1:])
    phi.flags.writeable = False
    low.flags.writeable = False
    return DyadicFamily(grid=grid, j_min=j_min, j_max=j_max, phi_table=phi, low_table=low)


@lru_cache(maxsize=32)
def get_family(grid: Grid) -> DyadicFamily:
    return build_dyadic_family(grid)


def _block_coef(family: DyadicFamily, coef: np.ndarray, j: int, which: str) -> np.ndarray:
    grid = family.grid
    if which == "delta":
        out = coef * family.phi(j)
        out[(slice(None),) + (0,) * grid.dim] = 0.0
        return out
    if which == "s_low":
        out = coef * family.low(j)
        mean_idx = (slice(None),) + (0,) * grid.dim
        out[mean_idx] = coef[mean_idx]
        return out
    raise ValueError(f"unknown block kind {which!r}")


def dyadic_block(family: DyadicFamily, f: SpectralField, j: int, which: str = "delta") -> SpectralField:
    """Apply Delta_j (``delta``) or S_j (``s_low``) to a spectral field."""
    if f.grid != family.grid:
        raise GridMismatchError("field grid differs from family grid")
    return SpectralField(f.grid, _block_coef(family, f.coefficients, j, which))


def block_lp_norms(family: DyadicFamily, f: RealField, p: float) -> np.ndarray:
    """L^p norms of every Delta_j f, j in the tabulated window."""
    grid = family.grid
    coef = forward_array(grid, f.samples)
    out = np.empty(len(family.js))
    for i, j in enumerate(family.js):
        blk = inverse_array(grid, _block_coef(family, coef, j, "delta"))
        out[i] = lp_norm_array(grid, blk, p)
    return out


@dataclass(frozen=True)
class BesovSpec:
    """Norm recipe: homogeneous B^s_{p,r}, optionally weighted per shell.

    ``weights`` carries one factor per dyadic index in the family window,
    applied to each term before the l^r summation.
    """

    s: float
    p: float = 2.0
    r: float = 1.0
    weights: tuple | None = None

    def __post_init__(self):
        if not (self.p >= 1 or self.p == np.inf):
            raise ValueError("p must be >= 1 or inf")
        if not (self.r >= 1 or self.r == np.inf):
            raise ValueError("r must be >= 1 or inf")


def _lr_sum(terms: np.ndarray, r: float) -> float:
    if r == np.inf:
        return float(np.max(terms)) if terms.size else 0.0
    return float(np.sum(terms ** r) ** (1.0 / r))


def besov_norm(f: RealField, spec: BesovSpec) -> float:
    """Homogeneous Besov norm over the tabulated dyadic window."""
    family = get_family(f.grid)
    norms = block_lp_norms(family, f, spec.p)
    js = np.array(list(family.js), dtype=float)
    terms = 2.0 ** (js * spec.s) * norms
    if spec.weights is not None:
        w = np.asarray(spec.weights, dtype=float)
        if w.shape != terms.shape:
            raise ValueError(
                f"weights length {w.shape} does not match dyadic window {terms.shape}"
            )
        terms = terms * w
    return _lr_sum(terms, spec.r)


def hybrid_besov_norm(f: RealField, s: float, t: float, q: float, p: float, R0: int = 0) -> float:
    """Two-regime norm: 2^{ks} L^q blocks up to R0, 2^{kt} L^p blocks above."""
    family = get_family(f.grid)
    low_norms = block_lp_norms(family, f, q)
    high_norms = low_norms if p == q else block_lp_norms(family, f, p)
    total = 0.0
    for i, k in enumerate(family.js):
        if k <= R0:
            total += 2.0 ** (k * s) * low_norms[i]
        else:
            total += 2.0 ** (k * t) * high_norms[i]
    return float(total)


def weight_omega(k: int, t: float, c: float, terms: int = 48) -> float:
    """Initial-layer weight sum_{l >= k} 2^{k-l} (1 - exp(-c 4**l t))**0.5.

    The tail beyond ``terms`` summands is below 2**(1-terms) (each bracket
    is at most 1), under 1e-12 for the default truncation.  Values lie in
    [0, 2] and increase in t.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    ls = k + np.arange(terms)
    brackets = -np.expm1(-c * np.exp2(2.0 * ls) * t)
    return float(np.sum(np.exp2(k - ls.astype(float)) * np.sqrt(brackets)))


@dataclass(frozen=True)
class FieldHistory:
    """Snapshots of one field at strictly increasing times."""

    times: tuple
    fields: tuple

    def __post_init__(self):
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields must have equal length")
        ts = np.asarray(self.times, dtype=float)
        if ts.size >= 2 and not np.all(np.diff(ts) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def max_step(self) -> float:
        """Largest quadrature step; reported alongside every time-integrated norm."""
        ts = np.asarray(self.times, dtype=float)
        return float(np.max(np.diff(ts))) if ts.size >= 2 else 0.0


def chemin_lerner_norm(history: FieldHistory, s: float, p: float, rho_time: float) -> float:
    """Block-first space-time norm: time-integrate per shell, then l^1 sum.

    Finite ``rho_time`` uses the trapezoidal rule on the stored snapshots
    (at least two required); ``rho_time = inf`` takes the per-shell sup.
    """
    if rho_time != np.inf and len(history.fields) < 2:
        raise ValueError("finite rho_time needs at least 2 snapshots")
    if not history.fields:
        return 0.0
    grid = history.fields[0].grid
    family = get_family(grid)
    per_shell = np.stack(
        [block_lp_norms(family, f, p) for f in history.fields]
    )  # (n_times, n_shells)
    if rho_time == np.inf:
        integrated = np.max(per_shell, axis=0)
    else:
        ts = np.asarray(history.times, dtype=float)
        integrated = np.trapezoid(per_shell ** rho_time, ts, axis=0) ** (1.0 / rho_time)
    js = np.array(list(family.js), dtype=float)
    return float(np.sum(2.0 ** (js * s) * integrated))


def bony_decompose(u: RealField, v: RealField):
    """Paraproducts and remainder: u*v = T_u v + T_v u + R(u, v).

    Both inputs should be band-limited to the dealias ball so the shell
    products are exact; the pieces then reconstruct the product up to the
    mean-times-mean mode, which no shell interaction carries.
    """
    if u.grid != v.grid:
        raise GridMismatchError("operands live on different grids")
    grid = u.grid
    family = get_family(grid)
    cu = forward_array(grid, u.samples)
    cv = forward_array(grid, v.samples)

    t_uv = np.zeros_like(cu)
    t_vu = np.zeros_like(cu)
    rem = np.zeros_like(cu)
    for q in family.js:
        low_u = _block_coef(family, cu, q - 1, "s_low")
        low_v = _block_coef(family, cv, q - 1, "s_low")
        del_u = _block_coef(family, cu, q, "delta")
        del_v = _block_coef(family, cv, q, "delta")
        t_uv += product_array(grid, low_u, del_v)
        t_vu += product_array(grid, low_v, del_u)
        tilde_v = sum(
            _block_coef(family, cv, qq, "delta")
            for qq in (q - 1, q, q + 1)
            if family.j_min <= qq <= family.j_max
        )
        rem += product_array(grid, del_u, tilde_v)

    return (
        RealField(grid, inverse_array(grid, t_uv)),
        RealField(grid, inverse_array(grid, t_vu)),
        RealField(grid, inverse_array(grid, rem)),
    )


def hs_norm(f: RealField, sigma: float) -> float:
    """Homogeneous Sobolev norm (volume * sum_{k != 0} |k|^{2 sigma} |coef|^2)^{1/2}."""
    grid = f.grid
    coef = forward_array(grid, f.samples)
    k2 = grid.wavenumber_sq
    nz = k2 > 0
    weight = k2[nz] ** sigma
    total = 0.0
    for c in coef:
        total += np.sum(weight * np.abs(c[nz]) ** 2)
    return float(np.sqrt(grid.volume * total))
