"""Exception hierarchy shared across the package."""


class HFlowError(Exception):
    """Base class for package-specific failures."""


class InvalidInput(HFlowError, ValueError):
    """Non-finite or out-of-domain arguments."""


class ConeViolation(HFlowError):
    """Principal curvatures left the Garding cone required by a speed function.

    ``cone_index`` is the largest cone the offending point does belong to,
    ``required`` the cone the caller needed, ``node`` the grid location
    (when raised from a flow kernel).
    """

    def __init__(self, message, cone_index=None, required=None, node=None):
        super().__init__(message)
        self.cone_index = cone_index
        self.required = required
        self.node = node


class NotStarShaped(HFlowError):
    """Shape does not contain the origin / support function not positive."""


class InvalidShape(HFlowError):
    """Shape parameters produce a non-positive or otherwise unusable radius."""


class DegenerateMetric(HFlowError):
    """Discrete induced metric lost positive definiteness."""


class GridResolutionError(HFlowError):
    """Grid too coarse for the requested finite-difference operators."""


class FlowBlowUp(HFlowError):
    """Non-finite values appeared during time stepping.

    ``last_state`` holds the last good :class:`~hflow.flows.FlowState`;
    ``history`` the monitor samples collected up to the failure.
    """

    def __init__(self, message, last_state=None, history=None):
        super().__init__(message)
        self.last_state = last_state
        self.history = history or []


class ConfigError(HFlowError):
    """Run configuration file could not be parsed or validated."""


class NeedsMoreSamples(HFlowError):
    """Monitor history too short for the requested diagnostic."""
