"""Quasi-static turbine characteristics.

Measured hill-chart characteristics of the real machine are proprietary, so
the simulator ships an analytic surrogate calibrated to reproduce the
name-plate operating point exactly.  The surrogate keeps the qualitative
structure a Francis unit exposes to the conduit and the controller:

* back-head rises with flow squared and falls as the gate opens,
* torque rises with gate opening and flow, falls with over-speed,
* both maps are smooth inside the validity box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ValidityBoxError
from .parameters import PlantParameters


@dataclass(frozen=True)
class ValidityBox:
    """Argument ranges inside which a characteristic is trusted."""

    flow: tuple[float, float]    # m^3/s
    speed: tuple[float, float]   # rpm
    gate: tuple[float, float]    # fraction

    def check(self, flow: float, speed: float, gate: float, margin: float = 0.0):
        for axis, value, (lo, hi) in (
            ("flow", flow, self.flow),
            ("speed", speed, self.speed),
            ("gate", gate, self.gate),
        ):
            if value < lo + margin or value > hi - margin:
                raise ValidityBoxError(
                    f"{axis} value {value:g} outside validity range "
                    f"[{lo:g}, {hi:g}] (margin {margin:g})", axis=axis)


@dataclass(frozen=True)
class TurbineCharacteristic:
    """Head and torque maps H_t(Q, N, y) and T_t(Q, N, y)."""

    head: Callable[[float, float, float], float]     # -> m
    torque: Callable[[float, float, float], float]   # -> N*m
    box: ValidityBox


# Surrogate shape coefficients.  The flow/speed split of the head map sets the
# incremental resistance the conduit sees at the turbine; 0.75/0.25 places it
# just above the penstock surge impedance, so gate steps launch a visible
# quarter-wave oscillation that decays within a few round trips, as observed
# on real medium-head units.
HEAD_FLOW_WEIGHT = 0.75
HEAD_SPEED_WEIGHT = 0.25
TORQUE_GATE_SLOPE = 0.30
TORQUE_GATE_CURV = 0.10
TORQUE_FLOW_SLOPE = 0.25
TORQUE_FLOW_CURV = 0.15
TORQUE_SPEED_SLOPE = 1.00     # torque reaches zero near double speed
GATE_FLOOR = 0.02             # evaluation floor; models leakage at closure


def synthetic_turbine_characteristic(params: PlantParameters) -> TurbineCharacteristic:
    """Analytic surrogate with the rated point as an exact fixed point."""
    h_r = params.rated_head
    q_r = params.rated_discharge
    n_r = params.rated_speed
    rho_g = params.water_density * params.gravity
    # Efficiency at the rated point implied by the name-plate data.
    eta_r = (params.rated_torque * params.rated_mech_speed
             / (rho_g * q_r * h_r))

    def head(flow: float, speed: float, gate: float) -> float:
        y = gate if gate > GATE_FLOOR else GATE_FLOOR
        qn = flow / (y * q_r)
        nn = speed / n_r
        return h_r * (HEAD_FLOW_WEIGHT * qn * qn + HEAD_SPEED_WEIGHT * nn * nn)

    def torque(flow: float, speed: float, gate: float) -> float:
        y = gate if gate > GATE_FLOOR else GATE_FLOOR
        qn = flow / q_r
        nn = speed / n_r
        gate_factor = 1.0 + TORQUE_GATE_SLOPE * (y - 1.0) \
            - TORQUE_GATE_CURV * (y - 1.0) ** 2
        flow_factor = 1.0 + TORQUE_FLOW_SLOPE * (qn - 1.0) \
            - TORQUE_FLOW_CURV * (qn - 1.0) ** 2
        speed_factor = 1.0 - TORQUE_SPEED_SLOPE * (nn - 1.0)
        kappa = eta_r * gate_factor * flow_factor * speed_factor
        omega = speed * 2.0 * math.pi / 60.0
        return rho_g * flow * h_r * kappa / omega

    box = ValidityBox(
        flow=(0.02 * q_r, 1.5 * q_r),
        speed=(0.5 * n_r, 1.5 * n_r),
        gate=(GATE_FLOOR, 1.2),
    )
    return TurbineCharacteristic(head=head, torque=torque, box=box)
