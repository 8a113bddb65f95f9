"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """Invalid physical or configuration parameter."""


class SimulationBlowUp(RuntimeError):
    """Simulation state diverged beyond physical plausibility."""

    def __init__(self, message, element=None, time_s=None, value=None):
        super().__init__(message)
        self.element = element          # 1-based penstock element, if applicable
        self.time_s = time_s
        self.value = value


class ValidityBoxError(ValueError):
    """Characteristic evaluated too close to (or beyond) its validity box."""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis                # "flow", "speed" or "gate"


class ModelBuildError(RuntimeError):
    """Linearized model could not be assembled or is unstable."""


class UndefinedRdiError(ValueError):
    """Relative damage index requested against a zero-damage base case."""


class StateDesyncError(RuntimeError):
    """Shadow-state bookkeeping diverged or received inconsistent data."""


class ScenarioMismatchError(ValueError):
    """Runs with different scenario fingerprints cannot be compared."""
