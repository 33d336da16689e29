"""Pseudo-spectral compressible MHD on a periodic box.

Layers, bottom up: ``spectral`` (grids, FFTs, operators), ``littlewood_paley``
(dyadic blocks and Besov-type norms), ``mhd`` (Eulerian system and stepper),
``lagrangian`` (flow maps and coordinate transforms), ``picard`` (local
fixed-point solver), ``energy`` (Hoff-style functionals and balances),
``cli`` (simulate / verify / report front end).
"""

from .spectral import (
    Grid,
    PhysParams,
    RealField,
    SpectralField,
    make_grid,
)

__all__ = ["Grid", "PhysParams", "RealField", "SpectralField", "make_grid"]
__version__ = "0.1.0"
