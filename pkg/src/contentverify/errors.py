"""Exception hierarchy shared by every stage of the toolkit."""


class CvsError(Exception):
    """Base class for all content-verification errors."""


class DimensionError(CvsError, ValueError):
    """Arrays or signatures with incompatible shapes."""


class CapacityError(CvsError, ValueError):
    """The host image (or QR version range) cannot hold the payload."""


class SignatureDecodeError(CvsError, ValueError):
    """A signature blob is truncated or inconsistent with its declared dims."""


class PayloadError(CvsError):
    """A framed content-id payload could not be recovered."""


class UncorrectableError(PayloadError):
    """Too many byte errors for the Reed-Solomon parity to repair."""


class FramingError(PayloadError):
    """The corrected payload is not a well-formed ``<content-id>`` frame."""


class QrDecodeError(CvsError):
    """No QR symbol could be located or decoded."""


class ExtractionError(CvsError):
    """The extracted watermark plane carries no usable energy."""


class RegistryError(CvsError):
    """Base class for record store failures."""


class StoreIOError(RegistryError, OSError):
    pass


class StoreVersionError(RegistryError):
    pass


class DuplicateIdError(RegistryError):
    pass


class RecordNotFoundError(RegistryError, KeyError):
    pass


class CorruptRecordError(RegistryError, ValueError):
    pass
