"""Exception types raised across the package."""


class NematicFlowError(Exception):
    """Base class for all package errors."""


class GridError(NematicFlowError, ValueError):
    """Invalid grid geometry (too few cells, non-positive lengths, ...)."""


class GridMismatch(NematicFlowError, ValueError):
    """Two fields or states live on incompatible grids."""


class NonConvergence(NematicFlowError, RuntimeError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class IncompatibleRhs(NematicFlowError, ValueError):
    """Right-hand side of a pure Neumann/periodic problem has nonzero mean."""


class MaxHalvingsExceeded(NematicFlowError, RuntimeError):
    """Picard iteration failed to contract even after the allowed slab halvings.

    ``data_size`` carries the discrete data-size proxy of the slab's initial
    state; large values point at the large-data (local-only) regime.
    """

    def __init__(self, message, data_size=None, report=None):
        super().__init__(message)
        self.data_size = data_size
        self.report = report


class ConfigError(NematicFlowError, ValueError):
    def __init__(self, field, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}: {message}{where}")
        self.field = field
        self.line = line
        self.detail = message


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError, TypeError):
    pass


class RangeError(ConfigError):
    pass
