"""Exception types shared across the package."""


class MsfsError(Exception):
    """Base class for all package errors."""


class ConfigError(MsfsError, ValueError):
    """Invalid configuration value or unknown configuration key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class IntegrationDiverged(MsfsError, ArithmeticError):
    """A non-finite state appeared during integration."""

    def __init__(self, t):
        super().__init__(f"integration diverged at t={t:g}")
        self.t = t


class OutOfRange(MsfsError, ValueError):
    """A trajectory was sampled outside its domain."""


class InvalidTopology(MsfsError, ValueError):
    pass


class InsufficientData(MsfsError, ValueError):
    """Analysis window too short for the requested measurement."""


class NonConvergence(MsfsError, RuntimeError):
    """No repeated HCA state was found within the cycle budget."""

    def __init__(self, max_cycles, hash_log):
        super().__init__(f"no repeated state within {max_cycles} cycles")
        self.max_cycles = max_cycles
        self.hash_log = hash_log
