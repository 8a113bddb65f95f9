"""Battery power set-point computation for the hybrid plant.

The battery restores the regulation the turbine gives up when its command
is filtered: its set-point is the difference between two affine torque
estimates, one driven by the unfiltered command and its shadow state (the
counterfactual plant that is never actuated) and one driven by the filtered
command and its own model state, both multiplied by the nominal mechanical
pulsation.  Every quantity involved is available at decision time, so the
policy is causal.

A first-order low-pass filter split is included as the benchmarking
baseline; it reuses the same torque estimator so the two policies are
directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StateDesyncError
from .linearize import CharacteristicDerivatives, LinearPlantModel
from .parameters import PlantParameters

TWO_PI = 2.0 * math.pi
RPM_PER_RAD = 60.0 / TWO_PI

METHOD_MPC = "mpc-split"
METHOD_LPF = "lpf-split"


@dataclass(frozen=True)
class SplitResult:
    p_bess: float               # W, positive = discharge
    p_hpp_hat_star: float       # W, estimated unfiltered plant output
    p_hpp_hat_dagger: float     # W, estimated filtered plant output
    method: str


class TorqueEstimator:
    """Affine torque map driven by the linear model state."""

    def __init__(self, model: LinearPlantModel, params: PlantParameters):
        self.derivs: CharacteristicDerivatives = model.derivs
        self.layout = model.layout
        self.omega_nominal = params.nominal_mech_pulsation   # 2 pi f0 / Pp
        self._n_states = model.layout.n_states

    def torque(self, gate: float, state: np.ndarray) -> float:
        d = self.derivs
        op = d.op
        q_t = state[self.layout.turbine_flow]
        n_rpm = state[self.layout.rotor_speed] * RPM_PER_RAD
        return (d.torque0 + d.torque_flow * (q_t - op.flow)
                + d.torque_speed * (n_rpm - op.speed_rpm)
                + d.torque_gate * (gate - op.gate))

    def power(self, gate: float, state: np.ndarray) -> float:
        return self.torque(gate, state) * self.omega_nominal


def estimate_power(gate: float, state: np.ndarray,
                   estimator: TorqueEstimator) -> float:
    """Estimated plant output: affine torque times nominal pulsation."""
    return estimator.power(gate, state)


def shadow_state_update(state: np.ndarray, gate: float,
                        model: LinearPlantModel) -> np.ndarray:
    """Propagate a (never actuated) model state one control period."""
    state = np.asarray(state, dtype=float)
    if state.shape != (model.layout.n_states,):
        raise StateDesyncError(
            f"shadow state has shape {state.shape}, model expects "
            f"({model.layout.n_states},)")
    new = model.step(state, gate)
    if not np.all(np.isfinite(new)):
        raise StateDesyncError("shadow state became non-finite")
    heads = new[model.layout.heads]
    if np.max(np.abs(heads)) > 100.0 * model.op.head:
        raise StateDesyncError("shadow state diverged beyond plausibility")
    return new


def _split(y_star, y_ctrl, x_star, x_ctrl, estimator, method) -> SplitResult:
    x_star = np.asarray(x_star, dtype=float)
    x_ctrl = np.asarray(x_ctrl, dtype=float)
    if x_star.shape != x_ctrl.shape:
        raise StateDesyncError("shadow state vectors have mismatched shapes")
    p_star = estimator.power(y_star, x_star)
    p_ctrl = estimator.power(y_ctrl, x_ctrl)
    return SplitResult(p_bess=p_star - p_ctrl, p_hpp_hat_star=p_star,
                       p_hpp_hat_dagger=p_ctrl, method=method)


def bess_setpoint_mpc(y_star: float, y_dagger: float, x_star: np.ndarray,
                      x_dagger: np.ndarray,
                      estimator: TorqueEstimator) -> SplitResult:
    """Closed-form battery set-point under the predictive controller."""
    return _split(y_star, y_dagger, x_star, x_dagger, estimator, METHOD_MPC)


def bess_setpoint_lpf(y_star: float, y_filtered: float, x_star: np.ndarray,
                      x_filtered: np.ndarray,
                      estimator: TorqueEstimator) -> SplitResult:
    """Battery set-point for the low-pass-filter baseline policy."""
    return _split(y_star, y_filtered, x_star, x_filtered, estimator, METHOD_LPF)


class LowPassFilter:
    """First-order low-pass filter on the gate command (exact ZOH discretization)."""

    def __init__(self, cutoff_hz: float, initial: float = 0.0):
        if cutoff_hz <= 0.0:
            raise ValueError("cutoff frequency must be positive")
        self.cutoff_hz = cutoff_hz
        self.value = initial

    def step(self, target: float, dt: float) -> float:
        decay = math.exp(-TWO_PI * self.cutoff_hz * dt)
        self.value = decay * self.value + (1.0 - decay) * target
        return self.value
