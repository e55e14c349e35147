"""Exception hierarchy shared by all modules."""


class ForgeError(Exception):
    """Base class for every error raised by isoforge."""


class ValidationError(ForgeError, ValueError):
    """Malformed input: bad permutation, bad subset, non-factorization, ..."""


class DimensionError(ValidationError):
    """Incompatible dimensions, e.g. an isometry whose input is too small."""


class CapacityError(ForgeError):
    """A dense object or enumeration would exceed the configured size cap."""


class PreconditionError(ForgeError):
    """A mathematical precondition of a construction does not hold."""


class ConstructionError(ForgeError):
    """A construction produced an object that failed an internal consistency check."""


class RegistryError(ForgeError, KeyError):
    """Unknown code name or registry entry that failed self-verification."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class FormatError(ForgeError):
    """A state/subspace/recipe file could not be decoded."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
