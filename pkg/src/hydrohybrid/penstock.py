"""Equivalent-circuit discretization of the penstock.

The conduit is split into ``n_elements`` identical sections.  Each section
contributes a hydraulic inertance L, a storage capacitance C and a
flow-dependent friction resistance R(Q); cascading the sections yields the
classic ladder whose capacitor voltages are the mid-element heads and whose
inductor currents are the boundary flows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .parameters import PlantParameters


@dataclass(frozen=True)
class PenstockCircuit:
    """Per-element circuit parameters of the discretized conduit."""

    n_elements: int
    element_length: float     # m
    inductance: float         # s^2/m^2 per element, dx/(g*A)
    capacitance: float        # m^2 per element, g*A*dx/a^2
    friction_coeff: float     # R(Q) = friction_coeff * |Q|, per element
    pipe_area: float          # m^2

    def __post_init__(self):
        if self.n_elements < 2:
            raise ParameterError("penstock must have at least 2 elements")
        if self.inductance <= 0.0 or self.capacitance <= 0.0:
            raise ParameterError("element L and C must be strictly positive")
        if self.friction_coeff < 0.0:
            raise ParameterError("friction coefficient must be non-negative")

    def resistance(self, discharge: float) -> float:
        """Head-loss coefficient R(Q) of one element; R(Q)*Q is the loss."""
        return self.friction_coeff * abs(discharge)

    @property
    def wave_speed_recovered(self) -> float:
        """Wave speed implied by the discretization, dx/sqrt(L*C)."""
        return self.element_length / math.sqrt(self.inductance * self.capacitance)

    @property
    def total_inductance(self) -> float:
        return self.n_elements * self.inductance


def build_penstock_circuit(params: PlantParameters, n_elements: int) -> PenstockCircuit:
    """Compute per-element R, L, C from the penstock physical properties."""
    if n_elements < 2:
        raise ParameterError("n_elements must be >= 2")
    if params.penstock_diameter <= 0.0 or params.penstock_length <= 0.0:
        raise ParameterError("penstock geometry must be strictly positive")

    area = params.pipe_area
    dx = params.penstock_length / n_elements
    g = params.gravity
    inductance = dx / (g * area)
    capacitance = g * area * dx / params.wave_speed ** 2
    friction_coeff = (params.friction_factor * dx
                      / (2.0 * g * params.penstock_diameter * area * area))

    circuit = PenstockCircuit(
        n_elements=n_elements,
        element_length=dx,
        inductance=inductance,
        capacitance=capacitance,
        friction_coeff=friction_coeff,
        pipe_area=area,
    )
    recovered = circuit.wave_speed_recovered
    if abs(recovered - params.wave_speed) > 0.01 * params.wave_speed:
        raise ParameterError(
            f"discretization does not recover the wave speed: {recovered:.1f}"
            f" m/s vs {params.wave_speed:.1f} m/s")
    return circuit
