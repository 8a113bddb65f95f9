"""Physical plant constants for the hybridized medium-head hydropower case study.

The default parameter set describes a 230 MW Francis plant with an open-air
1100 m penstock.  Values not fixed by the machine's name-plate data (wall
thickness, friction factor, generator constants) carry engineering defaults
and are overridable through the plain-text config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .errors import ParameterError

GRAVITY = 9.81          # m/s^2
WATER_DENSITY = 1000.0  # kg/m^3


@dataclass(frozen=True)
class PlantParameters:
    """Name-plate and geometric constants of the plant.

    Units are SI throughout; rotational speed is in rpm.
    """

    rated_power: float = 230e6        # W
    rated_head: float = 315.0         # m
    rated_discharge: float = 85.3     # m^3/s
    rated_speed: float = 375.0        # rpm
    rated_torque: float = 5.86e6      # N*m
    penstock_length: float = 1100.0   # m
    penstock_diameter: float = 5.0    # m
    wave_speed: float = 1100.0        # m/s
    wall_thickness: float = 0.05      # m, plausible for a 5 m steel penstock
    friction_factor: float = 0.012    # Darcy, smooth steel
    upstream_head: float = -1.0       # m; < 0 means "derive from rated point"
    downstream_head: float = 0.0      # m (datum)
    water_density: float = WATER_DENSITY
    gravity: float = GRAVITY
    generator_inertia: float = 1.0e6  # kg*m^2, generator + shaft + runner
    polar_couples: int = 8            # 375 rpm on a 50 Hz grid
    nominal_grid_frequency: float = 50.0   # Hz
    turbine_inductance: float = 0.15  # s^2/m^2, water inertia inside the unit
    # Quasi-static generator model: power-angle transfer plus lumped damping.
    max_transfer_power: float = 4.6e8     # W, pull-out power vs infinite bus
    generator_damping: float = 4.6e6      # N*m*s/rad on mechanical slip

    def __post_init__(self):
        positive = [
            "rated_power", "rated_head", "rated_discharge", "rated_speed",
            "rated_torque", "penstock_length", "penstock_diameter",
            "wave_speed", "wall_thickness", "water_density", "gravity",
            "generator_inertia", "nominal_grid_frequency",
            "turbine_inductance", "max_transfer_power",
        ]
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be strictly positive")
        if self.friction_factor < 0.0:
            raise ParameterError("friction_factor must be non-negative")
        if self.generator_damping < 0.0:
            raise ParameterError("generator_damping must be non-negative")
        if self.polar_couples < 1:
            raise ParameterError("polar_couples must be >= 1")
        if self.downstream_head < 0.0:
            raise ParameterError("downstream_head must be non-negative")
        # Name-plate consistency: P ~= T * omega within 5 %.
        p_check = self.rated_torque * self.rated_mech_speed
        if abs(p_check - self.rated_power) > 0.05 * self.rated_power:
            raise ParameterError(
                "rated power, torque and speed are inconsistent: "
                f"T*omega = {p_check:.4g} W vs P = {self.rated_power:.4g} W")
        if self.upstream_head < 0.0:
            # Choose the reservoir level so the net head at rated flow equals
            # the rated head after distributed friction losses.
            h_u = (self.rated_head + self.downstream_head
                   + self.friction_head_loss(self.rated_discharge))
            object.__setattr__(self, "upstream_head", h_u)
        if self.upstream_head <= self.downstream_head:
            raise ParameterError("upstream_head must exceed downstream_head")

    # -- derived quantities ------------------------------------------------

    @property
    def pipe_area(self) -> float:
        """Penstock cross section pi*D^2/4 in m^2."""
        return math.pi * self.penstock_diameter ** 2 / 4.0

    @property
    def rated_mech_speed(self) -> float:
        """Rated mechanical speed in rad/s."""
        return self.rated_speed * 2.0 * math.pi / 60.0

    @property
    def nominal_mech_pulsation(self) -> float:
        """Mechanical pulsation 2*pi*f0/Pp locked to the nominal grid."""
        return 2.0 * math.pi * self.nominal_grid_frequency / self.polar_couples

    @property
    def synchronous_speed_rpm(self) -> float:
        return 60.0 * self.nominal_grid_frequency / self.polar_couples

    @property
    def head_to_stress(self) -> float:
        """Pa of hoop stress per metre of head: k*D/(2e) with k = g*rho."""
        k = self.gravity * self.water_density
        return k * self.penstock_diameter / (2.0 * self.wall_thickness)

    def friction_head_loss(self, discharge: float) -> float:
        """Darcy-Weisbach loss over the whole penstock at the given flow."""
        a = self.pipe_area
        return (self.friction_factor * self.penstock_length * discharge
                * abs(discharge)
                / (2.0 * self.gravity * self.penstock_diameter * a * a))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def default_parameters(**overrides) -> PlantParameters:
    """The 230 MW medium-head case-study plant."""
    return PlantParameters(**overrides)
