"""
Custom exceptions for coopadmm.
"""


class CoopAdmmError(Exception):
    """Base exception for the coopadmm package."""

    def __init__(self, message: str, error_code: str | None = None, details: dict | None = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

    def __str__(self):
        if self.error_code:
            return f"[{self.error_code}] {self.message}"
        return self.message


class ConfigError(CoopAdmmError):
    """Exception raised for invalid scenario, solver or runtime configuration."""

    def __init__(self, message: str, error_code: str = "CFG001", details: dict | None = None):
        super().__init__(message, error_code, details)


class DomainError(CoopAdmmError):
    """Exception raised when the vehicle model is evaluated outside its kinematic validity region."""

    def __init__(self, message: str, error_code: str = "DYN001", details: dict | None = None):
        super().__init__(message, error_code, details)


class SolverError(CoopAdmmError):
    """Exception raised for numerical solver failures."""

    def __init__(self, message: str, error_code: str = "SOL001", details: dict | None = None):
        super().__init__(message, error_code, details)


class NotPositiveDefinite(SolverError):
    """Raised when a regularised Q_uu block fails its Cholesky factorization."""

    def __init__(self, message: str, error_code: str = "DDP001", details: dict | None = None):
        super().__init__(message, error_code, details)


class ExtractionFailed(SolverError):
    """Raised when no randomised SDR sample can be repaired into a feasible point."""

    def __init__(self, message: str, error_code: str = "SDR001", details: dict | None = None):
        super().__init__(message, error_code, details)


class BackendFailure(SolverError):
    """Raised when a projection back-end fails; details name the back-end and timestep."""

    def __init__(self, message: str, error_code: str = "PRJ001", details: dict | None = None):
        super().__init__(message, error_code, details)
