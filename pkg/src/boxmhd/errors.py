"""Exception hierarchy shared across the package."""


class BoxMHDError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(BoxMHDError):
    """Operands live on different grids."""


class DensityFloorError(BoxMHDError):
    """Density dropped below the configured positivity floor."""


class CFLViolationError(BoxMHDError):
    """Requested time step exceeds the advective CFL bound."""


class FoldError(BoxMHDError):
    """Flow map lost orientation (det DX <= 0 somewhere)."""


class NonConvergenceError(BoxMHDError):
    """Fixed-point iteration diverged (contraction ratios above 1)."""


class CheckpointError(BoxMHDError):
    """Base class for checkpoint I/O failures."""

    code = "checkpoint-error"


class MalformedHeaderError(CheckpointError):
    code = "malformed-header"


class VersionMismatchError(CheckpointError):
    code = "version-mismatch"


class TruncatedBodyError(CheckpointError):
    code = "truncated-body"


class ChecksumError(CheckpointError):
    code = "checksum-mismatch"


class ConfigError(BoxMHDError):
    """Run configuration failed validation."""
