"""Ground-truth nonlinear simulation of the hydropower plant.

The hydraulic circuit is the discretized penstock ladder between the two
reservoir pressure sources, terminated by the turbine (a flow-dependent head
source in series with the unit's water inertia).  The electromechanical side
is a swing equation against an infinite bus with power-angle transfer and
lumped damping.  Integration is fixed-step classical RK4 so that runs are
bit-reproducible.

State layout (flat vector of length 2*I + 3):

    x[0:I]        mid-element heads h_1..h_I            [m]
    x[I:2I+1]     boundary flows Q_1..Q_{I+1}           [m^3/s]
    x[2I+1]       rotor angle vs infinite bus           [electrical rad]
    x[2I+2]       mechanical rotor speed                [rad/s]

The turbine flow Q_t is the last boundary flow Q_{I+1}: the end branch
(half element in series with the turbine) carries it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError, SimulationBlowUp
from .parameters import PlantParameters
from .penstock import PenstockCircuit
from .turbine import TurbineCharacteristic

TWO_PI = 2.0 * math.pi
BLOWUP_HEAD_FACTOR = 10.0


@dataclass
class HydraulicState:
    """Snapshot of the full plant state."""

    heads: np.ndarray        # (I,) m
    flows: np.ndarray        # (I+1,) m^3/s
    rotor_angle: float       # electrical rad
    rotor_speed_rpm: float   # rpm

    @property
    def turbine_flow(self) -> float:
        return float(self.flows[-1])

    @property
    def rotor_speed_rad(self) -> float:
        return self.rotor_speed_rpm * TWO_PI / 60.0

    def copy(self) -> "HydraulicState":
        return HydraulicState(self.heads.copy(), self.flows.copy(),
                              self.rotor_angle, self.rotor_speed_rpm)

    def to_vector(self) -> np.ndarray:
        n = len(self.heads) + len(self.flows) + 2
        x = np.empty(n)
        x[:len(self.heads)] = self.heads
        x[len(self.heads):-2] = self.flows
        x[-2] = self.rotor_angle
        x[-1] = self.rotor_speed_rad
        return x

    @classmethod
    def from_vector(cls, x: np.ndarray, n_elements: int) -> "HydraulicState":
        heads = np.asarray(x[:n_elements], dtype=float).copy()
        flows = np.asarray(x[n_elements:2 * n_elements + 1], dtype=float).copy()
        return cls(heads=heads, flows=flows, rotor_angle=float(x[-2]),
                   rotor_speed_rpm=float(x[-1]) * 60.0 / TWO_PI)


class PlantSimulator:
    """Fixed-step RK4 integrator of the nonlinear plant ODE set."""

    def __init__(self, params: PlantParameters, circuit: PenstockCircuit,
                 characteristic: TurbineCharacteristic):
        self.params = params
        self.circuit = circuit
        self.characteristic = characteristic
        self.n_elements = circuit.n_elements

        # End branches carry half an element; interior branches merge the
        # adjacent halves into one full element.
        self.inv_l_end = 1.0 / (0.5 * circuit.inductance)
        self.inv_l_mid = 1.0 / circuit.inductance
        self.inv_l_turb = 1.0 / (0.5 * circuit.inductance + params.turbine_inductance)
        self.inv_c = 1.0 / circuit.capacitance
        self.cf_full = circuit.friction_coeff
        self.cf_half = 0.5 * circuit.friction_coeff

        self._blowup_head = BLOWUP_HEAD_FACTOR * params.rated_head
        self._time = 0.0

    # -- dynamics ----------------------------------------------------------

    def derivative(self, x: np.ndarray, gate: float, grid_frequency: float) -> np.ndarray:
        p = self.params
        i = self.n_elements
        h = x[:i]
        q = x[i:2 * i + 1]
        delta = x[-2]
        omega = x[-1]

        qa = q * np.abs(q)
        dx = np.empty_like(x)
        # Capacitors: storage balance of each element.
        dx[:i] = (q[:-1] - q[1:]) * self.inv_c
        # First branch: upstream reservoir to first mid-element node.
        dx[i] = (p.upstream_head - h[0] - self.cf_half * qa[0]) * self.inv_l_end
        # Interior branches between adjacent mid-element nodes.
        dx[i + 1:2 * i] = (h[:-1] - h[1:] - self.cf_full * qa[1:-1]) * self.inv_l_mid
        # End branch: last node through the turbine to the tailrace.
        n_rpm = omega * 60.0 / TWO_PI
        q_t = q[-1]
        head_t = self.characteristic.head(q_t, n_rpm, gate)
        dx[2 * i] = (h[-1] - p.downstream_head - self.cf_half * qa[-1]
                     - head_t) * self.inv_l_turb
        # Swing equation against the infinite bus.
        omega_grid_e = TWO_PI * grid_frequency
        torque_t = self.characteristic.torque(q_t, n_rpm, gate)
        torque_em = (p.max_transfer_power * math.sin(delta) / omega
                     + p.generator_damping * (omega - omega_grid_e / p.polar_couples))
        dx[-2] = p.polar_couples * omega - omega_grid_e
        dx[-1] = (torque_t - torque_em) / p.generator_inertia
        return dx

    def rk4_step(self, x: np.ndarray, gate: float, grid_frequency: float,
                 dt: float) -> np.ndarray:
        k1 = self.derivative(x, gate, grid_frequency)
        k2 = self.derivative(x + 0.5 * dt * k1, gate, grid_frequency)
        k3 = self.derivative(x + 0.5 * dt * k2, gate, grid_frequency)
        k4 = self.derivative(x + dt * k3, gate, grid_frequency)
        return x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    def check_state(self, x: np.ndarray, time_s: float):
        heads = x[:self.n_elements]
        if not np.all(np.isfinite(x)):
            bad = int(np.argmax(~np.isfinite(heads))) + 1 if not np.all(
                np.isfinite(heads)) else None
            raise SimulationBlowUp(
                f"non-finite state at t = {time_s:.6f} s", element=bad,
                time_s=time_s)
        worst = int(np.argmax(np.abs(heads)))
        if abs(heads[worst]) > self._blowup_head:
            raise SimulationBlowUp(
                f"head diverged at element {worst + 1}: "
                f"{heads[worst]:.1f} m at t = {time_s:.6f} s",
                element=worst + 1, time_s=time_s, value=float(heads[worst]))

    def step_state(self, state: HydraulicState, gate: float,
                   grid_frequency: float, dt: float) -> HydraulicState:
        """Advance a state snapshot by one RK4 step of length dt."""
        if not 0.0 < dt <= 0.010:
            raise ParameterError("integration step must lie in (0, 10 ms]")
        if not 0.0 <= gate <= 1.0:
            raise ParameterError("gate command must lie in [0, 1]")
        x = self.step_vector(state.to_vector(), gate, grid_frequency, dt)
        return HydraulicState.from_vector(x, self.n_elements)

    def step_vector(self, x: np.ndarray, gate: float, grid_frequency: float,
                    dt: float) -> np.ndarray:
        x1 = self.rk4_step(x, gate, grid_frequency, dt)
        self._time += dt
        self.check_state(x1, self._time)
        return x1

    # -- observables ---------------------------------------------------------

    def electromagnetic_torque(self, x: np.ndarray, grid_frequency: float) -> float:
        p = self.params
        omega = x[-1]
        return (p.max_transfer_power * math.sin(x[-2]) / omega
                + p.generator_damping
                * (omega - TWO_PI * grid_frequency / p.polar_couples))

    def turbine_torque(self, x: np.ndarray, gate: float) -> float:
        n_rpm = x[-1] * 60.0 / TWO_PI
        return self.characteristic.torque(x[2 * self.n_elements], n_rpm, gate)


def electrical_power(state: HydraulicState, torque: float) -> float:
    """Generator electrical power for a given electromagnetic torque."""
    return torque * state.rotor_speed_rad


# -- steady state ------------------------------------------------------------

def steady_flow(params: PlantParameters, characteristic: TurbineCharacteristic,
                gate: float, grid_frequency: float | None = None) -> float:
    """Settled discharge for a constant gate, from the static head balance."""
    if grid_frequency is None:
        grid_frequency = params.nominal_grid_frequency
    n_sync = 60.0 * grid_frequency / params.polar_couples
    h_avail = params.upstream_head - params.downstream_head

    def residual(q):
        return (h_avail - params.friction_head_loss(q)
                - characteristic.head(q, n_sync, gate))

    q_hi = 2.0 * params.rated_discharge
    q_lo = 1e-6
    if residual(q_lo) <= 0.0:
        return 0.0
    return brentq(residual, q_lo, q_hi, xtol=1e-12, rtol=1e-15)


def steady_state(params: PlantParameters, circuit: PenstockCircuit,
                 characteristic: TurbineCharacteristic, gate: float,
                 grid_frequency: float | None = None) -> HydraulicState:
    """Exact fixed point of the plant ODEs for a constant gate command."""
    if grid_frequency is None:
        grid_frequency = params.nominal_grid_frequency
    p = params
    i = circuit.n_elements
    q = steady_flow(params, characteristic, gate, grid_frequency)
    # Heads interpolate from the reservoir down the friction gradient;
    # mid-element node i sits (i - 1/2) elements into the conduit.
    loss_elem = circuit.friction_coeff * q * abs(q)
    heads = p.upstream_head - loss_elem * (np.arange(1, i + 1) - 0.5)
    flows = np.full(i + 1, q)

    omega = TWO_PI * grid_frequency / p.polar_couples
    n_rpm = omega * 60.0 / TWO_PI
    torque_t = characteristic.torque(q, n_rpm, gate)
    ratio = torque_t * omega / p.max_transfer_power
    if not -1.0 < ratio < 1.0:
        raise ParameterError("operating point exceeds generator pull-out power")
    delta = math.asin(ratio)
    return HydraulicState(heads=heads, flows=flows, rotor_angle=delta,
                          rotor_speed_rpm=n_rpm)


def steady_power(params: PlantParameters,
                 characteristic: TurbineCharacteristic, gate: float,
                 grid_frequency: float | None = None) -> float:
    """Settled electrical power for a constant gate command."""
    if grid_frequency is None:
        grid_frequency = params.nominal_grid_frequency
    q = steady_flow(params, characteristic, gate, grid_frequency)
    omega = TWO_PI * grid_frequency / params.polar_couples
    n_rpm = omega * 60.0 / TWO_PI
    return characteristic.torque(q, n_rpm, gate) * omega


def gate_for_power(params: PlantParameters,
                   characteristic: TurbineCharacteristic, power: float,
                   grid_frequency: float | None = None) -> float:
    """Inverse of the steady gate-to-power map."""
    lo, hi = 0.05, 1.0
    p_lo = steady_power(params, characteristic, lo, grid_frequency)
    p_hi = steady_power(params, characteristic, hi, grid_frequency)
    if not p_lo <= power <= p_hi:
        raise ParameterError(
            f"target power {power:.4g} W outside the steady range "
            f"[{p_lo:.4g}, {p_hi:.4g}] W")
    return brentq(
        lambda y: steady_power(params, characteristic, y, grid_frequency) - power,
        lo, hi, xtol=1e-12, rtol=1e-15)


def make_gate_power_map(params: PlantParameters,
                        characteristic: TurbineCharacteristic,
                        n_points: int = 200):
    """Tabulated steady gate-to-power map used by the governor droop."""
    gates = np.linspace(0.02, 1.0, n_points)
    powers = np.array([steady_power(params, characteristic, y) for y in gates])

    def gate_to_power(gate: float) -> float:
        return float(np.interp(gate, gates, powers))

    return gate_to_power
