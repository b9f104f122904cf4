"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A kernel, stimulus or model parameter is outside its valid domain."""


class ShapeError(ValueError):
    """Array dimensions do not match what the stage was built for."""


class SequencingError(ValueError):
    """Frames arrived out of order or off the sampling grid."""


class ContractError(ValueError):
    """An input violates a documented precondition."""


class WarmupError(ValueError):
    """A frame inside the filter warm-up period was requested for evaluation."""


class SequenceFormatError(ValueError):
    """A frame sequence on disk is malformed or incomplete."""
