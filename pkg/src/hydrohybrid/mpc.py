"""Receding-horizon fatigue-limiting controller for the guide vane.

Each control cycle the controller condenses the affine plant model over the
prediction horizon, turns the penstock stress band into head limits on every
element at every step, and solves the resulting box-and-inequality QP for
the gate trajectory closest to the governor's command.  Only the first
element of the optimized trajectory is actuated.

For speed, constraint rows that provably cannot bind this cycle (their
reachable range over all admissible gate trajectories stays inside the
band) are dropped before the QP is formed; this leaves the feasible set,
and hence the solution, unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .linearize import LinearPlantModel
from .parameters import PlantParameters
from .qp import (STATUS_MAX_ITER, STATUS_OPTIMAL, AdmmQpSolver, QpProblem,
                 SolverOptions)

DEFAULT_BAND_FRACTION = 0.08    # +-8 % of rated head unless configured


def stress_from_head(head_m: float, params: PlantParameters) -> float:
    """Hoop stress sigma = h * k * D / (2 e), k = g * rho, in Pa."""
    return head_m * params.head_to_stress


def head_bounds(sigma_nominal: float, stress_band: float,
                params: PlantParameters) -> tuple[float, float]:
    """Invert the stress law over the band sigma_nom +- band/2."""
    if stress_band <= 0.0:
        raise ParameterError("stress band must be strictly positive")
    scale = params.head_to_stress
    return ((sigma_nominal - 0.5 * stress_band) / scale,
            (sigma_nominal + 0.5 * stress_band) / scale)


@dataclass(frozen=True)
class StressLimits:
    """Stress band and the head limits it induces."""

    sigma_nominal: float     # Pa
    stress_band: float       # Pa, peak-to-peak fatigue band
    head_lower: float        # m
    head_upper: float        # m

    @classmethod
    def from_band(cls, sigma_nominal: float, stress_band: float,
                  params: PlantParameters) -> "StressLimits":
        lo, hi = head_bounds(sigma_nominal, stress_band, params)
        return cls(sigma_nominal=sigma_nominal, stress_band=stress_band,
                   head_lower=lo, head_upper=hi)

    @classmethod
    def around_head(cls, nominal_head: float, stress_band: float,
                    params: PlantParameters) -> "StressLimits":
        return cls.from_band(stress_from_head(nominal_head, params),
                             stress_band, params)

    def __post_init__(self):
        if self.head_lower >= self.head_upper:
            raise ParameterError("head band is empty")

    @property
    def band_width(self) -> float:
        return self.head_upper - self.head_lower

    def bounds_arrays(self, n_elements: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-element bound vectors (uniform band)."""
        return (np.full(n_elements, self.head_lower),
                np.full(n_elements, self.head_upper))


def persistent_forecast(y_now: float, horizon: int) -> np.ndarray:
    """Naive predictor: hold the current command over the horizon."""
    return np.full(horizon + 1, y_now)


@dataclass(frozen=True)
class MpcConfig:
    horizon: int                       # T; decision vector has T+1 entries
    control_period: float              # s
    limits: StressLimits
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(
        eps_abs=1e-7, eps_rel=1e-9))
    binding_tol_fraction: float = 1e-6   # "active" when slack < frac * band
    # First prediction step whose heads are constrained.  The heads one step
    # ahead are dominated by waves already in flight, which no admissible
    # gate trajectory can influence; hard-bounding them makes the program
    # infeasible whenever the measured state grazes the band.
    enforce_from_step: int = 2

    def validate(self, params: PlantParameters):
        if self.control_period <= 0.0:
            raise ParameterError("control period must be positive")
        if self.enforce_from_step < 1:
            raise ParameterError("enforce_from_step must be >= 1")
        round_trip = 2.0 * params.penstock_length / params.wave_speed
        min_horizon = math.ceil(round_trip / self.control_period)
        if self.horizon < min_horizon:
            raise ParameterError(
                f"horizon {self.horizon} shorter than one wave round trip "
                f"({min_horizon} steps)")


def default_horizon(params: PlantParameters, control_period: float) -> int:
    """Two wave round trips, the default prediction span."""
    round_trip = 2.0 * params.penstock_length / params.wave_speed
    return int(math.ceil(2.0 * round_trip / control_period))


@dataclass
class MpcSolution:
    y_trajectory: np.ndarray      # (T+1,)
    applied: float                # first element (or held value on fallback)
    predicted_heads: np.ndarray   # (T+1, I) heads at steps t+1 .. t+T+1
    status: str
    fallback: bool
    iterations: int
    primal_residual: float
    dual_residual: float
    min_slack: float              # m, distance of predictions to the band
    max_head_pred: float          # m
    binding_element: int          # 1-based; 0 when nothing is near a bound


class MpcController:
    """Receding-horizon QP controller bound to one linear model."""

    def __init__(self, model: LinearPlantModel, config: MpcConfig,
                 params: PlantParameters):
        if abs(model.dt - config.control_period) > 1e-12:
            raise ParameterError(
                "model sampling time must equal the control period")
        config.validate(params)
        self.model = model
        self.config = config
        self.params = params
        self.n_elements = model.layout.n_elements
        self.horizon = config.horizon
        self._last_applied = model.op.gate
        self._warm_z = None
        self._duals_by_row = None
        self._working = None
        self._build_condensation()

    def _build_condensation(self):
        m = self.model
        t_steps = self.horizon + 1
        k_from = self.config.enforce_from_step
        i = self.n_elements
        heads = m.layout.heads
        n = m.layout.n_states

        # Impulse responses of the head rows: contribution of y at step j to
        # heads at step k is S A^(k-1-j) B.
        impulse = np.empty((t_steps, i))
        vec = m.b_d.copy()
        impulse[0] = vec[heads]
        for j in range(1, t_steps):
            vec = m.a_d @ vec
            impulse[j] = vec[heads]

        n_enf = t_steps - (k_from - 1)              # enforced steps k_from..T+1
        g_head = np.zeros((n_enf * i, t_steps))
        for k in range(k_from, t_steps + 1):
            rows = slice((k - k_from) * i, (k - k_from + 1) * i)
            for j in range(k):
                g_head[rows, j] = impulse[k - 1 - j]
        self._g_head = g_head                       # heads(t+k) = offset + G z
        self._n_enforced = n_enf

        # Zero-input propagators: heads(t+k) = obs_k x0 + off_k, k enforced.
        obs = np.empty((n_enf * i, n))
        off = np.empty(n_enf * i)
        a_pow = np.linalg.matrix_power(m.a_d, k_from)
        c_acc = m.c_d.copy()
        for _ in range(k_from - 1):
            c_acc = m.a_d @ c_acc + m.c_d
        for k in range(n_enf):
            rows = slice(k * i, (k + 1) * i)
            obs[rows] = a_pow[heads]
            off[rows] = c_acc[heads]
            if k + 1 < n_enf:
                c_acc = m.a_d @ c_acc + m.c_d
                a_pow = m.a_d @ a_pow
        self._obs = obs
        self._off = off

    def _head_offsets(self, x0: np.ndarray) -> np.ndarray:
        """Zero-input head predictions o_k for k = 1..T+1, flattened."""
        return self._obs @ x0 + self._off

    def solve_step(self, state_vector: np.ndarray, y_star: float,
                   forecast: np.ndarray | None = None) -> MpcSolution:
        """One receding-horizon cycle; caller actuates ``solution.applied``.

        The full constraint set (every element, every step, both sides) is
        enforced lazily: the QP is solved on a working set of rows, the
        candidate trajectory is checked against all rows at once, violated
        rows are added, and the process repeats.  On termination the
        trajectory is feasible for the complete set and optimal for a
        superset of its active rows, hence optimal for the full problem.
        """
        cfg = self.config
        t_steps = self.horizon + 1
        n_rows = self._n_enforced * self.n_elements
        z_ref = persistent_forecast(y_star, self.horizon) if forecast is None \
            else np.asarray(forecast, dtype=float)
        if z_ref.size != t_steps:
            raise ParameterError("forecast length must equal horizon + 1")

        offsets = self._head_offsets(np.asarray(state_vector, dtype=float))
        hi = cfg.limits.head_upper - offsets       # G z <= hi
        lo = offsets - cfg.limits.head_lower       # -G z <= lo
        rhs_full = np.concatenate([hi, lo])        # rows: [upper; lower]
        feas_tol = 1e-6                            # metres

        def violations(z):
            gz = self._g_head @ z
            return np.concatenate([gz, -gz]) - rhs_full

        z = np.clip(z_ref, 0.0, 1.0)
        viol = violations(z)
        if viol.max() <= feas_tol:
            # The box-clipped target is feasible, hence globally optimal.
            self._warm_z = z.copy()
            return self._finish(z, offsets, STATUS_OPTIMAL, False, 0, 0.0, 0.0)

        working = self._working if self._working is not None \
            else np.zeros(2 * n_rows, dtype=bool)
        working = working.copy()
        warm = None
        if self._warm_z is not None:
            warm = np.concatenate([self._warm_z[1:], self._warm_z[-1:]])
        duals_by_row = self._duals_by_row
        qp_iterations = 0
        r_prim = r_dual = np.inf
        status = STATUS_MAX_ITER
        duals = np.zeros(0)
        rows = np.zeros(0, dtype=int)
        for _ in range(60):
            new_rows = np.where((viol > feas_tol) & ~working)[0]
            working[new_rows] = True
            rows = np.where(working)[0]
            signs = np.where(rows < n_rows, 1.0, -1.0)
            base = np.where(rows < n_rows, rows, rows - n_rows)
            g_mat = self._g_head[base] * signs[:, None]
            g_rhs = rhs_full[rows]
            scale = np.maximum(np.max(np.abs(g_mat), axis=1), 1e-12)
            problem = QpProblem(
                hessian=2.0 * np.eye(t_steps), linear=-2.0 * z_ref,
                lower=np.zeros(t_steps), upper=np.ones(t_steps),
                ineq_matrix=g_mat / scale[:, None], ineq_rhs=g_rhs / scale)
            warm_duals = None
            if duals_by_row is not None:
                warm_duals = np.concatenate([
                    np.zeros(t_steps),
                    np.array([duals_by_row.get(int(r), 0.0) for r in rows])])
            qp_sol = AdmmQpSolver(problem, cfg.solver).solve(
                warm_start=warm, warm_duals=warm_duals)
            qp_iterations += qp_sol.iterations
            if qp_sol.status != STATUS_OPTIMAL:
                # Degraded mode: hold the last actuated command.  A subset
                # being infeasible certifies the full problem is.
                self._working = working
                hold = np.full(t_steps, self._last_applied)
                return self._finish(hold, offsets, qp_sol.status, True,
                                    qp_iterations, qp_sol.primal_residual,
                                    qp_sol.dual_residual)
            z = qp_sol.z
            r_prim, r_dual = qp_sol.primal_residual, qp_sol.dual_residual
            duals = qp_sol.duals[t_steps:]
            duals_by_row = {int(r): float(d) for r, d in zip(rows, duals)}
            viol = violations(z)
            if not np.any((viol > feas_tol) & ~working):
                status = STATUS_OPTIMAL
                break

        # Keep only rows that are near-binding or carry a multiplier, so the
        # working set stays small across cycles.
        if rows.size:
            drop = (viol[rows] < -0.05 * cfg.limits.band_width) \
                & (np.abs(duals) < 1e-10)
            working[rows[drop]] = False
        self._working = working
        self._warm_z = z.copy()
        self._duals_by_row = duals_by_row
        fallback = status != STATUS_OPTIMAL
        if fallback:
            z = np.full(t_steps, self._last_applied)
        else:
            z = np.clip(z, 0.0, 1.0)
        return self._finish(z, offsets, status, fallback, qp_iterations,
                            r_prim, r_dual)

    def _finish(self, z, offsets, status, fallback, iterations,
                r_prim, r_dual) -> MpcSolution:
        cfg = self.config
        heads = (offsets + self._g_head @ z).reshape(self._n_enforced,
                                                     self.n_elements)
        slack_up = cfg.limits.head_upper - heads
        slack_lo = heads - cfg.limits.head_lower
        min_slack = float(min(slack_up.min(), slack_lo.min()))
        binding = 0
        if min_slack < cfg.binding_tol_fraction * cfg.limits.band_width:
            stacked = np.minimum(slack_up, slack_lo)
            binding = int(np.unravel_index(np.argmin(stacked), stacked.shape)[1]) + 1
        applied = float(z[0])
        self._last_applied = applied
        return MpcSolution(
            y_trajectory=z.copy() if isinstance(z, np.ndarray) else z,
            applied=applied, predicted_heads=heads, status=status,
            fallback=fallback, iterations=iterations, primal_residual=r_prim,
            dual_residual=r_dual, min_slack=min_slack,
            max_head_pred=float(heads.max()), binding_element=binding)


def critical_element(model: LinearPlantModel, horizon: int | None = None) -> int:
    """Element with the largest head excursion per unit gate step (1-based)."""
    layout = model.layout
    steps = horizon if horizon is not None else max(
        1, int(round(4.0 * 2.0 / model.dt)))   # a few round trips
    x = model.x0()
    h0 = x[layout.heads].copy()
    gate = model.op.gate + 1.0
    peak = np.zeros(layout.n_elements)
    for _ in range(steps):
        x = model.step(x, gate)
        peak = np.maximum(peak, np.abs(x[layout.heads] - h0))
    return int(np.argmax(peak)) + 1
