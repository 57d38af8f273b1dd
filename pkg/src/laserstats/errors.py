"""Exception hierarchy. Everything raised on a domain failure derives from
:class:`LaserStatsError`, which the CLI maps to exit code 1."""


class LaserStatsError(Exception):
    """Base class for domain errors."""


class InvalidParameters(LaserStatsError, ValueError):
    pass


class NegativeInput(LaserStatsError, ValueError):
    pass


class NonLasingDevice(LaserStatsError):
    """Transparency photon number n_T <= 1/2: the device cannot lase."""


class BelowTransparency(LaserStatsError):
    """Linearization requested below the transparency photon number."""


class UnstableLinearization(LaserStatsError):
    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class NoRootFound(LaserStatsError):
    def __init__(self, message, scan_range=None):
        super().__init__(message)
        self.scan_range = scan_range


class StepTooLarge(LaserStatsError):
    pass


class BudgetExceeded(LaserStatsError):
    def __init__(self, message, estimated_events=None):
        super().__init__(message)
        self.estimated_events = estimated_events


class EmptyWindow(LaserStatsError):
    pass


class InconsistentDeviceFile(LaserStatsError):
    pass


class MultipleRootsWarning(UserWarning):
    """More than one sign change of the noise-threshold condition was found."""
