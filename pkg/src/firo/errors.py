"""Exception types shared across the package."""


class FiroError(Exception):
    """Base class for every error raised by firo."""


class ContractError(FiroError):
    """A call violated a documented precondition."""


class ConfigError(FiroError):
    """Inconsistent artifacts, e.g. a model paired with the wrong vocabulary."""


class DataFormatError(FiroError):
    """A file does not conform to its expected format."""


class BadMagicError(DataFormatError):
    """The file does not start with the expected magic bytes."""


class VersionError(DataFormatError):
    """The file's format version is not supported by this build."""


class TruncatedError(DataFormatError):
    """The file ended before all declared content was read."""
