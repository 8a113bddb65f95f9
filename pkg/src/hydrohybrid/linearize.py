"""Discrete-time affine state-space model of the plant around an operating point.

The turbine characteristics are replaced by first-order Taylor expansions
(partial derivatives taken by central finite differences), the pipe friction
is frozen at the operating flow, and the resulting linear ODE set is
discretized by an exact affine zero-order hold.  The model is expressed in
absolute coordinates,

    x[k+1] = A x[k] + B y[k] + c,

so head limits can be imposed directly and the operating point is an exact
fixed point by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .errors import ModelBuildError, ParameterError
from .parameters import PlantParameters
from .penstock import PenstockCircuit
from .plant import HydraulicState, PlantSimulator, steady_state
from .turbine import TurbineCharacteristic

TWO_PI = 2.0 * math.pi
RPM_PER_RAD = 60.0 / TWO_PI
STEADY_TOL = 1e-4
DEFAULT_EPS_REL = 1e-3


# -- finite differences --------------------------------------------------------

def numeric_partial(func: Callable[[float], float], point: float, eps: float) -> float:
    """Central difference (f(p + eps) - f(p - eps)) / (2 eps)."""
    if eps <= 0.0:
        raise ParameterError("finite-difference step must be positive")
    return (func(point + eps) - func(point - eps)) / (2.0 * eps)


@dataclass(frozen=True)
class OperatingPoint:
    """Steady operating point the model is expanded around."""

    gate: float
    grid_frequency: float    # Hz
    flow: float              # m^3/s, turbine flow Q_t0
    speed_rpm: float         # N_0
    head: float              # m, turbine head at the point
    torque: float            # N*m
    state: HydraulicState


def find_operating_point(params: PlantParameters, circuit: PenstockCircuit,
                         characteristic: TurbineCharacteristic, gate: float,
                         grid_frequency: float | None = None,
                         simulator: PlantSimulator | None = None) -> OperatingPoint:
    """Locate the steady state at the given gate and verify it is one."""
    if grid_frequency is None:
        grid_frequency = params.nominal_grid_frequency
    state = steady_state(params, circuit, characteristic, gate, grid_frequency)
    sim = simulator or PlantSimulator(params, circuit, characteristic)
    rate = sim.derivative(state.to_vector(), gate, grid_frequency)
    if np.max(np.abs(rate)) > STEADY_TOL:
        raise ModelBuildError(
            f"candidate operating point is not steady: max |dx/dt| = "
            f"{np.max(np.abs(rate)):.3g}")
    q = state.turbine_flow
    n = state.rotor_speed_rpm
    return OperatingPoint(
        gate=gate, grid_frequency=grid_frequency, flow=q, speed_rpm=n,
        head=characteristic.head(q, n, gate),
        torque=characteristic.torque(q, n, gate),
        state=state)


@dataclass(frozen=True)
class CharacteristicDerivatives:
    """Partial derivatives of the head and torque maps at the operating point."""

    head_flow: float     # m per m^3/s
    head_speed: float    # m per rpm
    head_gate: float     # m per unit gate
    torque_flow: float   # N*m per m^3/s
    torque_speed: float  # N*m per rpm
    torque_gate: float   # N*m per unit gate
    eps_flow: float
    eps_speed: float
    eps_gate: float
    head0: float
    torque0: float
    op: OperatingPoint


def characteristic_derivatives(char: TurbineCharacteristic, op: OperatingPoint,
                               params: PlantParameters,
                               eps_rel: float = DEFAULT_EPS_REL) -> CharacteristicDerivatives:
    """Six central-difference partials, step scaled per-unit on each axis."""
    eps_q = eps_rel * params.rated_discharge
    eps_n = eps_rel * params.rated_speed
    eps_y = eps_rel
    q0, n0, y0 = op.flow, op.speed_rpm, op.gate
    # The differenced points must stay inside the characteristic's trust box.
    char.box.check(q0 - eps_q, n0 - eps_n, y0 - eps_y)
    char.box.check(q0 + eps_q, n0 + eps_n, y0 + eps_y)

    d = {}
    for name, func, point, eps in (
        ("hq", lambda v: char.head(v, n0, y0), q0, eps_q),
        ("hn", lambda v: char.head(q0, v, y0), n0, eps_n),
        ("hy", lambda v: char.head(q0, n0, v), y0, eps_y),
        ("tq", lambda v: char.torque(v, n0, y0), q0, eps_q),
        ("tn", lambda v: char.torque(q0, v, y0), n0, eps_n),
        ("ty", lambda v: char.torque(q0, n0, v), y0, eps_y),
    ):
        d[name] = numeric_partial(func, point, eps)

    return CharacteristicDerivatives(
        head_flow=d["hq"], head_speed=d["hn"], head_gate=d["hy"],
        torque_flow=d["tq"], torque_speed=d["tn"], torque_gate=d["ty"],
        eps_flow=eps_q, eps_speed=eps_n, eps_gate=eps_y,
        head0=char.head(q0, n0, y0), torque0=char.torque(q0, n0, y0), op=op)


def linearize_head(char: TurbineCharacteristic, op: OperatingPoint,
                   params: PlantParameters, eps_rel: float = DEFAULT_EPS_REL):
    """First-order Taylor expansion of the head map; exact at the point."""
    d = characteristic_derivatives(char, op, params, eps_rel)

    def affine_head(flow: float, speed: float, gate: float) -> float:
        return (d.head0 + d.head_flow * (flow - op.flow)
                + d.head_speed * (speed - op.speed_rpm)
                + d.head_gate * (gate - op.gate))

    return affine_head


def linearize_torque(char: TurbineCharacteristic, op: OperatingPoint,
                     params: PlantParameters, eps_rel: float = DEFAULT_EPS_REL):
    """First-order Taylor expansion of the torque map; exact at the point."""
    d = characteristic_derivatives(char, op, params, eps_rel)

    def affine_torque(flow: float, speed: float, gate: float) -> float:
        return (d.torque0 + d.torque_flow * (flow - op.flow)
                + d.torque_speed * (speed - op.speed_rpm)
                + d.torque_gate * (gate - op.gate))

    return affine_torque


# -- state-space assembly ------------------------------------------------------

@dataclass(frozen=True)
class StateLayout:
    """Index map of the flat model state."""

    n_elements: int

    @property
    def n_states(self) -> int:
        return 2 * self.n_elements + 3

    @property
    def heads(self) -> slice:
        return slice(0, self.n_elements)

    @property
    def flows(self) -> slice:
        return slice(self.n_elements, 2 * self.n_elements + 1)

    @property
    def turbine_flow(self) -> int:
        return 2 * self.n_elements

    @property
    def rotor_angle(self) -> int:
        return 2 * self.n_elements + 1

    @property
    def rotor_speed(self) -> int:
        return 2 * self.n_elements + 2

    def head_index(self, element: int) -> int:
        """0-based state index of 1-based element's mid head."""
        return element - 1

    def flow_index(self, boundary: int) -> int:
        """0-based state index of 1-based boundary flow."""
        return self.n_elements + boundary - 1


@dataclass
class LinearPlantModel:
    """x[k+1] = a_d x[k] + b_d y[k] + c_d, sampled every dt seconds."""

    a_d: np.ndarray
    b_d: np.ndarray
    c_d: np.ndarray
    dt: float
    layout: StateLayout
    op: OperatingPoint
    derivs: CharacteristicDerivatives

    def step(self, x: np.ndarray, gate: float) -> np.ndarray:
        return self.a_d @ x + self.b_d * gate + self.c_d

    def x0(self) -> np.ndarray:
        return self.op.state.to_vector()

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.a_d))))

    def pole_frequencies_hz(self) -> np.ndarray:
        """Damped frequencies of the discrete poles."""
        eig = np.linalg.eigvals(self.a_d)
        return np.abs(np.angle(eig)) / (TWO_PI * self.dt)


def build_linear_model(circuit: PenstockCircuit,
                       derivs: CharacteristicDerivatives,
                       op: OperatingPoint, dt: float,
                       params: PlantParameters) -> LinearPlantModel:
    """Assemble and ZOH-discretize the affine model around the point."""
    if dt <= 0.0 or dt > 0.050:
        raise ParameterError("model sampling time must lie in (0, 50 ms]")
    p = params
    i = circuit.n_elements
    layout = StateLayout(i)
    n = layout.n_states
    x0 = op.state.to_vector()
    y0 = op.gate

    inv_c = 1.0 / circuit.capacitance
    inv_l_end = 1.0 / (0.5 * circuit.inductance)
    inv_l_mid = 1.0 / circuit.inductance
    inv_l_turb = 1.0 / (0.5 * circuit.inductance + p.turbine_inductance)
    # Constant pipe resistance, frozen at the tangent slope of the quadratic
    # loss at the operating flows (d/dQ of R(Q)*Q = 2*cf*|Q|); the secant
    # value R(Q_op) would leave a first-order model error in the flow.
    q_op = x0[layout.flows]
    r_full = 2.0 * circuit.friction_coeff * np.abs(q_op)
    r_half = 0.5 * r_full

    a = np.zeros((n, n))
    b = np.zeros(n)

    # Capacitor rows.
    for k in range(i):
        a[k, layout.flow_index(k + 1)] = inv_c
        a[k, layout.flow_index(k + 2)] = -inv_c
    # First branch.
    r0 = layout.flow_index(1)
    a[r0, layout.head_index(1)] = -inv_l_end
    a[r0, r0] = -r_half[0] * inv_l_end
    # Interior branches.
    for j in range(2, i + 1):
        rj = layout.flow_index(j)
        a[rj, layout.head_index(j - 1)] = inv_l_mid
        a[rj, layout.head_index(j)] = -inv_l_mid
        a[rj, rj] = -r_full[j - 1] * inv_l_mid
    # Turbine branch with the linearized head source.
    rt = layout.flow_index(i + 1)
    a[rt, layout.head_index(i)] = inv_l_turb
    a[rt, rt] = -(r_half[i] + derivs.head_flow) * inv_l_turb
    a[rt, layout.rotor_speed] = -derivs.head_speed * RPM_PER_RAD * inv_l_turb
    b[rt] = -derivs.head_gate * inv_l_turb

    # Rotor angle and swing equation.
    omega0 = x0[layout.rotor_speed]
    delta0 = x0[layout.rotor_angle]
    a[layout.rotor_angle, layout.rotor_speed] = p.polar_couples
    j_inv = 1.0 / p.generator_inertia
    a[layout.rotor_speed, layout.turbine_flow] = derivs.torque_flow * j_inv
    a[layout.rotor_speed, layout.rotor_angle] = \
        -p.max_transfer_power * math.cos(delta0) / omega0 * j_inv
    a[layout.rotor_speed, layout.rotor_speed] = (
        derivs.torque_speed * RPM_PER_RAD
        + p.max_transfer_power * math.sin(delta0) / omega0 ** 2
        - p.generator_damping) * j_inv
    b[layout.rotor_speed] = derivs.torque_gate * j_inv

    # Affine offset pins the operating point as the exact fixed point.
    c = -(a @ x0) - b * y0

    # Exact zero-order hold on the augmented affine system.
    aug = np.zeros((n + 2, n + 2))
    aug[:n, :n] = a
    aug[:n, n] = b
    aug[:n, n + 1] = c
    try:
        phi = expm(aug * dt)
    except Exception as exc:  # pragma: no cover - scipy raises rarely here
        raise ModelBuildError(f"discretization failed: {exc}") from exc
    a_d = phi[:n, :n]
    b_d = phi[:n, n]
    c_d = phi[:n, n + 1]
    if not np.all(np.isfinite(a_d)):
        raise ModelBuildError("discretized dynamics are not finite")

    model = LinearPlantModel(a_d=a_d, b_d=b_d, c_d=c_d, dt=dt, layout=layout,
                             op=op, derivs=derivs)
    radius = model.spectral_radius()
    if radius > 1.0 + 1e-9:
        raise ModelBuildError(f"unstable discretized model: rho = {radius:.12f}")
    return model


def linearize_at_gate(params: PlantParameters, circuit: PenstockCircuit,
                      char: TurbineCharacteristic, gate: float, dt: float,
                      grid_frequency: float | None = None,
                      eps_rel: float = DEFAULT_EPS_REL) -> LinearPlantModel:
    """Convenience: operating point, derivatives and model in one call."""
    op = find_operating_point(params, circuit, char, gate, grid_frequency)
    derivs = characteristic_derivatives(char, op, params, eps_rel)
    return build_linear_model(circuit, derivs, op, dt, params)


def should_relinearize(gate: float, model: LinearPlantModel,
                       threshold: float | None = 0.05) -> bool:
    """Drift policy: rebuild once the gate strays from the expansion point."""
    if threshold is None:
        return False
    return abs(gate - model.op.gate) > threshold


# -- plain-text serialization --------------------------------------------------

def save_model(model: LinearPlantModel, path):
    """Write the model in a line-oriented plain-text format."""
    n = model.layout.n_states
    lines = ["# linear plant model, plain-text format v1"]
    lines.append(f"dt {model.dt!r}")
    lines.append(f"n_elements {model.layout.n_elements}")
    lines.append(f"op_gate {model.op.gate!r}")
    lines.append(f"op_grid_frequency {model.op.grid_frequency!r}")
    for name, arr in (("A", model.a_d.reshape(-1)), ("B", model.b_d),
                      ("c", model.c_d), ("x0", model.x0())):
        lines.append(name)
        lines.extend(f"{v!r}" for v in arr)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path, params: PlantParameters, circuit: PenstockCircuit,
               char: TurbineCharacteristic) -> LinearPlantModel:
    """Rebuild a model from the plain-text format written by save_model."""
    with open(path) as fh:
        tokens = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = {}
    idx = 0
    while idx < len(tokens) and " " in tokens[idx]:
        key, value = tokens[idx].split(None, 1)
        header[key] = value
        idx += 1
    dt = float(header["dt"])
    n_elem = int(header["n_elements"])
    layout = StateLayout(n_elem)
    n = layout.n_states
    arrays = {}
    while idx < len(tokens):
        name = tokens[idx]
        count = n * n if name == "A" else n
        vals = np.array([float(t) for t in tokens[idx + 1: idx + 1 + count]])
        arrays[name] = vals
        idx += 1 + count
    op = find_operating_point(params, circuit, char,
                              gate=float(header["op_gate"]),
                              grid_frequency=float(header["op_grid_frequency"]))
    derivs = characteristic_derivatives(char, op, params)
    return LinearPlantModel(a_d=arrays["A"].reshape(n, n), b_d=arrays["B"],
                            c_d=arrays["c"], dt=dt, layout=layout, op=op,
                            derivs=derivs)
