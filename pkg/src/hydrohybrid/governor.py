"""Standard speed governor producing the unfiltered guide-vane command.

Topology: permanent droop on delivered power, PI regulator (optional
derivative term, off by default), slew-rate limiter and [0, 1] saturation.
The droop feedback uses a calibrated steady-state gate-to-power map, the
digital equivalent of a cam curve, so the droop law

    P = P_ref + rated_power * delta_f / (f0 * R)

holds exactly once the loop settles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import ParameterError
from .parameters import PlantParameters


@dataclass(frozen=True)
class GovernorConfig:
    droop: float = 0.02               # permanent droop R
    proportional_gain: float = 15.0   # per-unit error -> gate
    integral_gain: float = 8.0        # 1/s
    derivative_gain: float = 0.0      # s; kept for completeness
    rate_limit: float = 0.1           # gate fraction per second
    gate_min: float = 0.0
    gate_max: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.droop <= 0.1:
            raise ParameterError("droop must lie in (0, 0.1]")
        if self.rate_limit <= 0.0:
            raise ParameterError("rate_limit must be strictly positive")
        if not self.gate_min < self.gate_max:
            raise ParameterError("gate limits must satisfy min < max")


class Governor:
    """Discrete droop + PI(D) governor with rate limiting and saturation."""

    def __init__(self, config: GovernorConfig, params: PlantParameters,
                 gate_to_power: Callable[[float], float],
                 gate0: float, power_reference0: float):
        self.config = config
        self.params = params
        self.gate_to_power = gate_to_power
        self.omega_nominal = params.nominal_mech_pulsation
        self.integrator = gate0
        self.last_gate = gate0
        self.last_error = self._error(self.omega_nominal, power_reference0, gate0)

    def _error(self, omega_r: float, power_reference: float, gate: float) -> float:
        cfg = self.config
        speed_err = (self.omega_nominal - omega_r) / self.omega_nominal
        power_err = (self.gate_to_power(gate) - power_reference) / self.params.rated_power
        return speed_err - cfg.droop * power_err

    def step(self, omega_r: float, power_reference: float, dt: float) -> float:
        """Advance one control period; returns the commanded gate y*."""
        cfg = self.config
        err = self._error(omega_r, power_reference, self.last_gate)
        self.integrator += cfg.integral_gain * err * dt
        deriv = (err - self.last_error) / dt if dt > 0.0 else 0.0
        raw = cfg.proportional_gain * err + self.integrator \
            + cfg.derivative_gain * deriv

        # Slew-rate limiter, then saturation.
        max_step = cfg.rate_limit * dt
        gate = min(max(raw, self.last_gate - max_step), self.last_gate + max_step)
        gate = min(max(gate, cfg.gate_min), cfg.gate_max)

        # Integrator tracking (anti-windup): keep the integrator consistent
        # with the value actually applied.
        self.integrator = gate - cfg.proportional_gain * err \
            - cfg.derivative_gain * deriv
        self.last_error = err
        self.last_gate = gate
        return gate
