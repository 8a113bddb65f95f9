"""Plain-text configuration: one `key = value` per line, `#` comments.

``defaults()`` returns the shipped configuration (the 230 MW case-study
plant with the desk-scale regulation scenario); ``dump_defaults()`` prints
it with the documentation of every key.  Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict

from .errors import ParameterError

# key -> (default, comment)
_SCHEMA: "OrderedDict[str, tuple]" = OrderedDict([
    # plant name-plate and geometry
    ("rated_power_w", (230e6, "nominal electrical power [W]")),
    ("rated_head_m", (315.0, "nominal net head [m]")),
    ("rated_discharge_m3s", (85.3, "nominal discharge [m3/s]")),
    ("rated_speed_rpm", (375.0, "nominal rotational speed [rpm]")),
    ("rated_torque_nm", (5.86e6, "nominal torque [N m]")),
    ("penstock_length_m", (1100.0, "penstock length [m]")),
    ("penstock_diameter_m", (5.0, "penstock diameter [m]")),
    ("wave_speed_ms", (1100.0, "pressure wave speed [m/s]")),
    ("wall_thickness_m", (0.05, "penstock wall thickness [m]")),
    ("friction_factor", (0.012, "Darcy friction factor [-]")),
    ("upstream_head_m", (-1.0, "upstream reservoir level [m]; -1 derives it "
                               "from the rated point")),
    ("downstream_head_m", (0.0, "tailrace level [m] (datum)")),
    ("water_density_kgm3", (1000.0, "water density [kg/m3]")),
    ("gravity_ms2", (9.81, "gravitational acceleration [m/s2]")),
    ("generator_inertia_kgm2", (1.0e6, "rotating inertia [kg m2]")),
    ("polar_couples", (8, "generator pole pairs [-]")),
    ("nominal_grid_frequency_hz", (50.0, "nominal grid frequency [Hz]")),
    ("turbine_inductance", (0.15, "turbine water inertia [s2/m2]")),
    ("max_transfer_power_w", (4.6e8, "generator pull-out power [W]")),
    ("generator_damping_nms", (4.6e6, "lumped electromechanical damping "
                                      "[N m s/rad]")),
    # governor
    ("governor_droop", (0.02, "permanent droop R [-]")),
    ("governor_kp", (15.0, "proportional gain [-]")),
    ("governor_ki", (8.0, "integral gain [1/s]")),
    ("governor_kd", (0.0, "derivative gain [s]")),
    ("governor_rate_limit", (0.2, "guide-vane slew limit [1/s]")),
    # co-simulation rates
    ("n_elements", (20, "penstock discretization elements [-]")),
    ("sim_dt_s", (0.004, "plant integration step [s]")),
    ("control_period_s", (0.05, "controller cycle [s]")),
    # predictive controller
    ("mpc_horizon_steps", (0, "prediction horizon; 0 = two wave round trips")),
    ("stress_band_fraction", (0.03, "fatigue band as a fraction of rated "
                                    "head on each side")),
    ("relinearize_threshold", (0.0, "gate drift that triggers relinearization;"
                                    " 0 disables")),
    # low-pass-filter baseline
    ("lpf_cutoff_hz", (1.46, "cut-off frequency of the baseline filter [Hz]")),
    # SN curve / damage model
    ("sn_exponent", (3.0, "Wohler slope m [-]")),
    ("sn_reference_stress_pa", (40e6, "stress amplitude at the reference "
                                      "cycle count [Pa]")),
    ("sn_reference_cycles", (2e6, "reference cycle count [-]")),
    ("sn_endurance_limit_pa", (-1.0, "endurance amplitude [Pa]; -1 ties it "
                                     "to half the fatigue band")),
    # scenario
    ("duration_s", (600.0, "simulated duration [s]")),
    ("initial_power_w", (170e6, "initial plant set-point [W]")),
    ("controller", ("none", "one of none, mpc, lpf")),
    ("seed", (1, "random seed of the synthetic frequency trace")),
    ("freq_source", ("synthetic", "synthetic or csv")),
    ("freq_csv_path", ("", "input trace (columns t_s,f_hz) when source=csv")),
    ("freq_sigma_slow_hz", (0.05, "stationary std of the slow component [Hz]")),
    ("freq_tau_slow_s", (100.0, "mean-reversion time of the slow component [s]")),
    ("freq_sigma_fast_hz", (0.012, "stationary std of the fast component [Hz]")),
    ("freq_tau_fast_s", (1.5, "mean-reversion time of the fast component [s]")),
    ("freq_events", ("120:-0.20:40,330:0.18:40",
                     "step disturbances time:delta_hz:recovery_tau, "
                     "comma separated; empty for none")),
    ("write_traces", (True, "write the full plant trace CSVs")),
])


def defaults() -> dict:
    return {k: v for k, (v, _) in _SCHEMA.items()}


def dump_defaults() -> str:
    lines = ["# hybrid hydropower toolkit configuration",
             "# one `key = value` per line; `#` starts a comment", ""]
    for key, (value, comment) in _SCHEMA.items():
        lines.append(f"# {comment}")
        lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def _coerce(key: str, raw: str):
    default = _SCHEMA[key][0]
    raw = raw.strip()
    if isinstance(default, bool):
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ParameterError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        try:
            return int(raw)
        except ValueError as exc:
            raise ParameterError(f"{key}: expected an integer, got {raw!r}") from exc
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ParameterError(f"{key}: expected a number, got {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict:
    """Parse config text into a full config dict (defaults + overrides)."""
    cfg = defaults()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParameterError(f"line {lineno}: expected `key = value`")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _SCHEMA:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        cfg[key] = _coerce(key, raw)
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def config_fingerprint(cfg: dict) -> str:
    """Hash of everything that influences the simulation result."""
    skip = {"write_traces"}
    canon = "\n".join(f"{k}={cfg[k]!r}" for k in _SCHEMA if k not in skip)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
