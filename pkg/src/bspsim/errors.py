"""Exception types shared across bspsim modules."""


class BspsimError(Exception):
    """Base class for all bspsim errors."""


class ConfigError(BspsimError):
    """Malformed or inconsistent configuration file."""


class TopologyError(BspsimError):
    """Invalid machine description or out-of-range identifier."""


class RoutingError(TopologyError):
    """A path was requested that the interconnect cannot provide."""


class PlanError(BspsimError):
    """A collective or superstep plan violates a capacity or validity rule."""


class EngineError(BspsimError):
    """Superstep execution failed validation."""


class GoldenDataError(BspsimError):
    """Reference dataset missing, malformed, or queried outside its hull."""


class UnknownExperimentError(BspsimError):
    """Experiment id not present in the registry."""
