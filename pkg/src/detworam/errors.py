"""Exception hierarchy shared by every layer of the package."""


class OramError(Exception):
    """Base class for all errors raised by detworam."""


class GeometryError(OramError, ValueError):
    pass


class SealError(OramError, ValueError):
    pass


class IntegrityError(OramError):
    """MAC verification failed: the store was tampered with or slots were swapped."""


class NonceExhausted(OramError):
    pass


class OutOfRange(OramError, IndexError):
    """Physical slot index outside the store."""


class SizeMismatch(OramError, ValueError):
    pass


class ShapeMismatch(OramError, ValueError):
    pass


class AddressOutOfRange(OramError, IndexError):
    """Logical block address outside [0, N)."""


class LifecycleError(OramError, RuntimeError):
    """Preload buffer used out of its Empty -> Loading -> Ready -> Unloading order."""


class InvariantError(OramError, AssertionError):
    """A runtime self-check (holding safety, data-race audit) failed."""


class OutOfMemory(OramError):
    """Virtual page lies beyond the backing store capacity."""


class UnequalWriteCounts(OramError):
    pass


class ConfigError(OramError, ValueError):
    pass


class DomainError(OramError, ValueError):
    pass
