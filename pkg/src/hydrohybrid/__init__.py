"""Battery-hybridized medium-head hydropower plant: simulation, predictive
fatigue-limiting gate control, battery set-point splitting and penstock
damage assessment."""

from .errors import (ModelBuildError, ParameterError, ScenarioMismatchError,
                     SimulationBlowUp, StateDesyncError, UndefinedRdiError,
                     ValidityBoxError)
from .fatigue import (CycleHistogram, DamageReport, SnCurve, miner_damage,
                      rainflow, relative_damage_index)
from .governor import Governor, GovernorConfig
from .harness import (RunResult, RunSummary, Scenario, SyntheticFrequency,
                      compare_report, run_scenario, synthesize_frequency)
from .linearize import (CharacteristicDerivatives, LinearPlantModel,
                        OperatingPoint, build_linear_model,
                        characteristic_derivatives, find_operating_point,
                        linearize_at_gate, linearize_head, linearize_torque,
                        numeric_partial)
from .mpc import (MpcConfig, MpcController, MpcSolution, StressLimits,
                  critical_element, head_bounds, persistent_forecast,
                  stress_from_head)
from .parameters import PlantParameters, default_parameters
from .penstock import PenstockCircuit, build_penstock_circuit
from .plant import (HydraulicState, PlantSimulator, electrical_power,
                    gate_for_power, make_gate_power_map, steady_power,
                    steady_state)
from .qp import AdmmQpSolver, QpProblem, QpSolution, SolverOptions, solve
from .splitting import (LowPassFilter, SplitResult, TorqueEstimator,
                        bess_setpoint_lpf, bess_setpoint_mpc, estimate_power,
                        shadow_state_update)
from .turbine import TurbineCharacteristic, synthetic_turbine_characteristic

__version__ = "0.1.0"
