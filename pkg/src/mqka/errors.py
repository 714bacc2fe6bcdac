"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid session, scenario or CLI parameters."""


class ProtocolOrderError(RuntimeError):
    """A protocol step was invoked in the wrong phase."""


class ChannelLoss(Exception):
    """Raised by a hop hook to signal that the quantum channel dropped the sequence."""


class TransportError(RuntimeError):
    """The run was aborted because a sequence was lost in transit."""
