"""Exception hierarchy shared by the simulator modules and the CLI."""


class KerrDynError(Exception):
    """Base class for every error raised by kerrdyn."""


class OccupationRangeError(KerrDynError, ValueError):
    """An occupation number lies outside the truncated basis."""


class DomainError(KerrDynError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class AssemblyError(KerrDynError):
    """An operator failed an internal consistency check after assembly."""


class SpectralError(KerrDynError):
    """The eigensolver failed or produced an uncertified decomposition."""


class TruncationError(KerrDynError):
    """Too much probability lies beyond the Fock cutoff."""

    def __init__(self, message, weight=None, required_m_cut=None):
        super().__init__(message)
        self.weight = weight
        self.required_m_cut = required_m_cut


class NumericalError(KerrDynError):
    """A numerical invariant was violated beyond tolerance."""


class PhysicalityError(NumericalError):
    """Moments violate the single-mode uncertainty relation."""


class ConfigError(KerrDynError, ValueError):
    """A run configuration is malformed or inconsistent."""
