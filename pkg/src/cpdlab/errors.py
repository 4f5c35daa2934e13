"""Exception types raised by cpdlab."""


class CpdlabError(Exception):
    """Base class for all cpdlab errors."""


class InvalidArgumentError(CpdlabError, ValueError):
    pass


class NotRankOneError(CpdlabError, ValueError):
    """A dense tensor is not numerically rank one."""


class UnsupportedFormatError(CpdlabError, ValueError):
    pass


class EmptyDistributionError(CpdlabError, ValueError):
    """No finite samples to build a distribution from."""


class InsufficientDataError(CpdlabError, ValueError):
    """Too few points to fit a tail model."""
