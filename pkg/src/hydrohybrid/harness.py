"""Scenario orchestration: closed-loop co-simulation and reporting.

A scenario runs the nonlinear plant at the integration step and the chosen
controller (none / mpc / lpf) at the control period, with zero-order hold
between controller updates.  Because the control period is not an integer
multiple of the 4 ms integration step, each cycle is integrated as twelve
4 ms steps plus one 2 ms completion step; both rates are honored exactly
and runs stay bit-reproducible.

For the filtered controllers an unfiltered twin plant (same frequency
trace, same initial state, its own governor) is co-simulated to provide the
ground-truth regulation power that the splitting policy is supposed to
restore, and to serve as the damage base case.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import config as cfgmod
from .errors import ParameterError, ScenarioMismatchError, SimulationBlowUp
from .fatigue import (DamageReport, SnCurve, StreamingTurningPoints,
                      attach_rdi, damage_per_element, write_damage_report)
from .governor import Governor, GovernorConfig
from .linearize import linearize_at_gate
from .mpc import MpcConfig, MpcController, StressLimits, default_horizon
from .parameters import PlantParameters
from .penstock import build_penstock_circuit
from .plant import PlantSimulator, gate_for_power, make_gate_power_map
from .splitting import (METHOD_LPF, METHOD_MPC, LowPassFilter, TorqueEstimator,
                        bess_setpoint_lpf, bess_setpoint_mpc,
                        shadow_state_update)
from .turbine import synthetic_turbine_characteristic

__version__ = "0.1.0"

CONTROLLERS = ("none", "mpc", "lpf")
FLUSH_CYCLES = 400
SETTLE_MARGIN_S = 10.0     # post-episode window still counted as "episode"


# -- synthetic grid frequency --------------------------------------------------

@dataclass(frozen=True)
class FrequencyEvent:
    time_s: float
    delta_hz: float
    recovery_tau_s: float


def parse_events(spec: str) -> tuple[FrequencyEvent, ...]:
    events = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        if len(fields) != 3:
            raise ParameterError(
                f"bad frequency event {part!r}; expected time:delta:tau")
        events.append(FrequencyEvent(float(fields[0]), float(fields[1]),
                                     float(fields[2])))
    return tuple(events)


@dataclass(frozen=True)
class SyntheticFrequency:
    """Mean-reverting two-component disturbance around the nominal frequency."""

    mean_hz: float = 50.0
    sigma_slow_hz: float = 0.05
    tau_slow_s: float = 100.0
    sigma_fast_hz: float = 0.012
    tau_fast_s: float = 1.5
    events: tuple[FrequencyEvent, ...] = ()


def synthesize_frequency(cfg: SyntheticFrequency, seed: int, duration_s: float,
                         period_s: float) -> np.ndarray:
    """Frequency per control cycle; deterministic for a given seed."""
    if duration_s <= 0.0:
        raise ParameterError("duration must be positive")
    n = int(round(duration_s / period_s))
    rng = np.random.default_rng(seed)
    trace = np.full(n, cfg.mean_hz)
    for sigma, tau in ((cfg.sigma_slow_hz, cfg.tau_slow_s),
                       (cfg.sigma_fast_hz, cfg.tau_fast_s)):
        if sigma <= 0.0:
            rng.standard_normal(n + 1)   # keep the stream layout stable
            continue
        phi = math.exp(-period_s / tau)
        noise = rng.standard_normal(n + 1)
        x = sigma * noise[0]
        scale = sigma * math.sqrt(1.0 - phi * phi)
        for k in range(n):
            trace[k] += x
            x = phi * x + scale * noise[k + 1]
    t = np.arange(n) * period_s
    for ev in cfg.events:
        mask = t >= ev.time_s
        trace[mask] += ev.delta_hz * np.exp(-(t[mask] - ev.time_s)
                                            / ev.recovery_tau_s)
    return trace


def load_frequency_csv(path, duration_s: float, period_s: float) -> np.ndarray:
    """Resample a `t_s,f_hz` trace onto the control grid (previous-value hold)."""
    frame = pd.read_csv(path)
    if list(frame.columns[:2]) != ["t_s", "f_hz"]:
        raise ParameterError("frequency CSV must have columns t_s,f_hz")
    t = frame["t_s"].to_numpy(float)
    f = frame["f_hz"].to_numpy(float)
    if t.size < 2:
        raise ParameterError("frequency CSV needs at least two samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9:
        raise ParameterError("frequency CSV must be uniformly sampled")
    n = int(round(duration_s / period_s))
    grid = np.arange(n) * period_s
    if grid[-1] > t[-1] + 1e-9:
        raise ParameterError("frequency CSV shorter than the scenario")
    idx = np.minimum(np.searchsorted(t, grid + 1e-12, side="right") - 1, t.size - 1)
    return f[np.maximum(idx, 0)]


# -- scenario ------------------------------------------------------------------

@dataclass
class Scenario:
    """Typed view of one run's configuration."""

    cfg: dict
    output_dir: Path

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if self.cfg["controller"] not in CONTROLLERS:
            raise ParameterError(
                f"controller must be one of {CONTROLLERS}")
        if self.cfg["sim_dt_s"] <= 0 or self.cfg["sim_dt_s"] > 0.010:
            raise ParameterError("sim_dt_s must lie in (0, 10 ms]")

    @classmethod
    def from_config(cls, cfg: dict, output_dir) -> "Scenario":
        return cls(cfg=dict(cfg), output_dir=Path(output_dir))

    @property
    def fingerprint(self) -> str:
        return cfgmod.config_fingerprint(self.cfg)

    def plant_parameters(self) -> PlantParameters:
        c = self.cfg
        return PlantParameters(
            rated_power=c["rated_power_w"], rated_head=c["rated_head_m"],
            rated_discharge=c["rated_discharge_m3s"],
            rated_speed=c["rated_speed_rpm"], rated_torque=c["rated_torque_nm"],
            penstock_length=c["penstock_length_m"],
            penstock_diameter=c["penstock_diameter_m"],
            wave_speed=c["wave_speed_ms"], wall_thickness=c["wall_thickness_m"],
            friction_factor=c["friction_factor"],
            upstream_head=c["upstream_head_m"],
            downstream_head=c["downstream_head_m"],
            water_density=c["water_density_kgm3"], gravity=c["gravity_ms2"],
            generator_inertia=c["generator_inertia_kgm2"],
            polar_couples=c["polar_couples"],
            nominal_grid_frequency=c["nominal_grid_frequency_hz"],
            turbine_inductance=c["turbine_inductance"],
            max_transfer_power=c["max_transfer_power_w"],
            generator_damping=c["generator_damping_nms"])

    def governor_config(self) -> GovernorConfig:
        c = self.cfg
        return GovernorConfig(
            droop=c["governor_droop"], proportional_gain=c["governor_kp"],
            integral_gain=c["governor_ki"], derivative_gain=c["governor_kd"],
            rate_limit=c["governor_rate_limit"])

    def substep_pattern(self) -> list[float]:
        dt = self.cfg["sim_dt_s"]
        period = self.cfg["control_period_s"]
        n_full = int(period / dt)
        rem = period - n_full * dt
        pattern = [dt] * n_full
        if rem > 1e-12:
            pattern.append(rem)
        return pattern


@dataclass
class RunSummary:
    controller: str
    seed: int
    fingerprint: str
    duration_s: float
    n_cycles: int
    tracking_correlation: float
    max_rel_tracking_error: float
    max_rel_tracking_error_quiet: float
    peak_bess_power_w: float
    bess_energy_wh: float
    head_band_lower_m: float
    head_band_upper_m: float
    max_band_violation_m: float
    violation_time_fraction: float
    base_max_band_violation_m: float
    rdi_critical: float | None
    critical_element: int
    damage_critical: float
    damage_base_critical: float
    n_fallback_cycles: int
    max_kkt_residual: float
    median_solve_ms: float
    max_solve_ms: float
    wall_clock_s: float

    def to_json(self) -> str:
        payload = {k: (None if isinstance(v, float) and not np.isfinite(v)
                       else v) for k, v in self.__dict__.items()}
        return json.dumps(payload, indent=2, sort_keys=True)


@dataclass
class RunResult:
    summary: RunSummary
    scenario: Scenario
    # control-grid arrays
    t: np.ndarray
    frequency_hz: np.ndarray
    y_star: np.ndarray
    y_applied: np.ndarray
    p_hpp_w: np.ndarray
    p_twin_w: np.ndarray
    p_bess_w: np.ndarray
    p_hybrid_w: np.ndarray
    min_slack_m: np.ndarray
    fallback: np.ndarray
    kkt_residuals: np.ndarray
    solve_ms: np.ndarray
    episode_mask: np.ndarray
    damage: DamageReport
    damage_base: DamageReport
    limits: StressLimits | None
    paths: dict = field(default_factory=dict)


class _TraceWriter:
    """Chunked CSV writer; all numbers rendered with %.10g."""

    def __init__(self, path: Path | None, columns: list[str]):
        self.path = path
        self.columns = columns
        self._buffer: list[np.ndarray] = []
        self._wrote_header = False
        self.row_count = 0

    def add(self, rows: np.ndarray):
        self.row_count += rows.shape[0]
        if self.path is not None:
            self._buffer.append(rows)

    def flush(self):
        if self.path is None or not self._buffer:
            return
        chunk = np.vstack(self._buffer)
        self._buffer.clear()
        frame = pd.DataFrame(chunk, columns=self.columns)
        frame.to_csv(self.path, mode="a" if self._wrote_header else "w",
                     header=not self._wrote_header, index=False,
                     float_format="%.10g")
        self._wrote_header = True

    def close(self):
        self.flush()
        if self.path is not None and not self._wrote_header:
            pd.DataFrame(columns=self.columns).to_csv(self.path, index=False)


def _plant_columns(n_elements: int) -> list[str]:
    cols = ["t", "y"]
    cols += [f"h_{i}" for i in range(1, n_elements + 1)]
    cols += [f"Q_{i}" for i in range(1, n_elements + 2)]
    cols += ["Q_t", "N", "P_hpp"]
    return cols


class _PlantTrack:
    """One simulated plant plus its trace, violation and fatigue bookkeeping."""

    def __init__(self, sim: PlantSimulator, x0: np.ndarray, writer: _TraceWriter,
                 limits: StressLimits | None, n_elements: int):
        self.sim = sim
        self.x = x0.copy()
        self.writer = writer
        self.limits = limits
        self.n_elements = n_elements
        self.tps = StreamingTurningPoints(n_elements)
        self.max_violation = 0.0
        self.violating_steps = 0
        self.total_steps = 0
        self.recent = deque(maxlen=2600)   # blow-up diagnostics, ~10 s
        self._rows: list[np.ndarray] = []

    def advance_cycle(self, t0: float, gate: float, f_hz: float,
                      pattern: list[float]):
        i = self.n_elements
        t = t0
        for dt in pattern:
            self.x = self.sim.step_vector(self.x, gate, f_hz, dt)
            t += dt
            row = np.empty(2 * i + 6)
            row[0] = t
            row[1] = gate
            row[2:2 + i] = self.x[:i]
            row[2 + i:3 + 2 * i] = self.x[i:2 * i + 1]
            row[3 + 2 * i] = self.x[2 * i]
            row[4 + 2 * i] = self.x[-1] * 60.0 / (2.0 * math.pi)
            row[5 + 2 * i] = self.sim.electromagnetic_torque(self.x, f_hz) \
                * self.x[-1]
            self._rows.append(row)
            self.recent.append(row)
            if self.limits is not None:
                heads = self.x[:i]
                over = max(float(np.max(heads - self.limits.head_upper)),
                           float(np.max(self.limits.head_lower - heads)))
                if over > 0.0:
                    self.violating_steps += 1
                    self.max_violation = max(self.max_violation, over)
            self.total_steps += 1

    def electrical_power(self, f_hz: float) -> float:
        return self.sim.electromagnetic_torque(self.x, f_hz) * self.x[-1]

    def flush(self):
        if not self._rows:
            return
        chunk = np.vstack(self._rows)
        self._rows.clear()
        self.writer.add(chunk)
        self.writer.flush()
        self.tps.feed(chunk[:, 2:2 + self.n_elements])

    def dump_diagnostics(self, path: Path):
        if not self.recent:
            return
        chunk = np.vstack(list(self.recent))
        pd.DataFrame(chunk, columns=self.writer.columns).to_csv(
            path, index=False, float_format="%.10g")


def run_scenario(scenario: Scenario) -> RunResult:
    """Closed-loop co-simulation of one scenario; writes all trace files."""
    cfg = scenario.cfg
    controller = cfg["controller"]
    outdir = scenario.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()

    params = scenario.plant_parameters()
    circuit = build_penstock_circuit(params, cfg["n_elements"])
    char = synthetic_turbine_characteristic(params)
    n_elem = cfg["n_elements"]
    period = cfg["control_period_s"]
    duration = cfg["duration_s"]
    n_cycles = int(round(duration / period))
    pattern = scenario.substep_pattern()

    # Frequency input.
    if cfg["freq_source"] == "csv":
        freq = load_frequency_csv(cfg["freq_csv_path"], duration, period)
    elif cfg["freq_source"] == "synthetic":
        synth = SyntheticFrequency(
            mean_hz=cfg["nominal_grid_frequency_hz"],
            sigma_slow_hz=cfg["freq_sigma_slow_hz"],
            tau_slow_s=cfg["freq_tau_slow_s"],
            sigma_fast_hz=cfg["freq_sigma_fast_hz"],
            tau_fast_s=cfg["freq_tau_fast_s"],
            events=parse_events(cfg["freq_events"]))
        freq = synthesize_frequency(synth, cfg["seed"], duration, period)
    else:
        raise ParameterError("freq_source must be synthetic or csv")
    t_grid = np.arange(n_cycles) * period
    pd.DataFrame({"t_s": t_grid, "f_hz": freq}).to_csv(
        outdir / "freq_hz.csv", index=False, float_format="%.10g")

    # Initial operating point and controller stack.
    p_ref = cfg["initial_power_w"]
    gate0 = gate_for_power(params, char, p_ref)
    gmap = make_gate_power_map(params, char)
    model = linearize_at_gate(params, circuit, char, gate0, period)
    x0 = model.x0()

    band_pa = 2.0 * cfg["stress_band_fraction"] * params.rated_head \
        * params.head_to_stress
    h_nom = x0[model.layout.head_index(n_elem)]
    limits = StressLimits.around_head(h_nom, band_pa, params)

    sim = PlantSimulator(params, circuit, char)
    gov = Governor(scenario.governor_config(), params, gmap, gate0, p_ref)

    write = bool(cfg["write_traces"])
    plant_cols = _plant_columns(n_elem)
    main = _PlantTrack(sim, x0, _TraceWriter(
        outdir / "plant_trace.csv" if write else None, plant_cols),
        limits, n_elem)

    twin = None
    twin_gov = None
    mpc_ctrl = None
    lpf = None
    estimator = None
    x_star_shadow = None
    x_ctrl_shadow = None
    if controller in ("mpc", "lpf"):
        twin_sim = PlantSimulator(params, circuit, char)
        twin = _PlantTrack(twin_sim, x0, _TraceWriter(
            outdir / "twin_trace.csv" if write else None, plant_cols),
            limits, n_elem)
        twin_gov = Governor(scenario.governor_config(), params, gmap,
                            gate0, p_ref)
        estimator = TorqueEstimator(model, params)
        x_star_shadow = x0.copy()
        x_ctrl_shadow = x0.copy()
    if controller == "mpc":
        horizon = cfg["mpc_horizon_steps"] or default_horizon(params, period)
        mpc_cfg = MpcConfig(horizon=horizon, control_period=period,
                            limits=limits)
        mpc_ctrl = MpcController(model, mpc_cfg, params)
    if controller == "lpf":
        lpf = LowPassFilter(cfg["lpf_cutoff_hz"], initial=gate0)

    relin_threshold = cfg["relinearize_threshold"] or None

    # Control-grid logs.
    y_star_log = np.empty(n_cycles)
    y_applied_log = np.empty(n_cycles)
    p_hpp_log = np.empty(n_cycles)
    p_twin_log = np.empty(n_cycles)
    p_bess_log = np.zeros(n_cycles)
    p_hat_star_log = np.zeros(n_cycles)
    p_hat_ctrl_log = np.zeros(n_cycles)
    min_slack_log = np.full(n_cycles, np.inf)
    fallback_log = np.zeros(n_cycles, dtype=bool)
    kkt_log = np.zeros(n_cycles)
    solve_ms_log = np.zeros(n_cycles)
    status_log = [""] * n_cycles
    max_head_pred_log = np.zeros(n_cycles)
    binding_log = np.zeros(n_cycles, dtype=int)

    y_applied = gate0
    try:
        for cyc in range(n_cycles):
            t = cyc * period
            f_hz = float(freq[cyc])
            p_meas = main.electrical_power(f_hz)
            y_star = gov.step(main.x[-1], p_ref, period)

            if controller == "mpc":
                if relin_threshold and abs(y_applied - mpc_ctrl.model.op.gate) \
                        > relin_threshold:
                    model = linearize_at_gate(params, circuit, char,
                                              y_applied, period)
                    h_nom = model.x0()[model.layout.head_index(n_elem)]
                    limits = StressLimits.around_head(h_nom, band_pa, params)
                    mpc_cfg = MpcConfig(horizon=mpc_ctrl.config.horizon,
                                        control_period=period, limits=limits)
                    mpc_ctrl = MpcController(model, mpc_cfg, params)
                    estimator = TorqueEstimator(model, params)
                t_solve = time.perf_counter()
                sol = mpc_ctrl.solve_step(main.x, y_star)
                solve_ms_log[cyc] = (time.perf_counter() - t_solve) * 1e3
                y_applied = sol.applied
                min_slack_log[cyc] = sol.min_slack
                fallback_log[cyc] = sol.fallback
                kkt_log[cyc] = max(sol.primal_residual, sol.dual_residual)
                status_log[cyc] = sol.status
                max_head_pred_log[cyc] = sol.max_head_pred
                binding_log[cyc] = sol.binding_element
            elif controller == "lpf":
                y_applied = lpf.step(y_star, period)
            else:
                y_applied = y_star

            if controller in ("mpc", "lpf"):
                split_fn = bess_setpoint_mpc if controller == "mpc" \
                    else bess_setpoint_lpf
                split = split_fn(y_star, y_applied, x_star_shadow,
                                 x_ctrl_shadow, estimator)
                p_bess_log[cyc] = split.p_bess
                p_hat_star_log[cyc] = split.p_hpp_hat_star
                p_hat_ctrl_log[cyc] = split.p_hpp_hat_dagger
                x_star_shadow = shadow_state_update(x_star_shadow, y_star, model)
                x_ctrl_shadow = shadow_state_update(x_ctrl_shadow, y_applied,
                                                    model)

            y_star_log[cyc] = y_star
            y_applied_log[cyc] = y_applied
            p_hpp_log[cyc] = p_meas

            main.advance_cycle(t, y_applied, f_hz, pattern)
            if twin is not None:
                p_twin_log[cyc] = twin.electrical_power(f_hz)
                y_twin = twin_gov.step(twin.x[-1], p_ref, period)
                twin.advance_cycle(t, y_twin, f_hz, pattern)
            else:
                p_twin_log[cyc] = p_meas

            if (cyc + 1) % FLUSH_CYCLES == 0:
                main.flush()
                if twin is not None:
                    twin.flush()
    except SimulationBlowUp:
        main.dump_diagnostics(outdir / "blowup_diagnostics.csv")
        raise

    main.flush()
    main.writer.close()
    if twin is not None:
        twin.flush()
        twin.writer.close()

    # Controller logs.
    if controller == "mpc":
        mpc_frame = pd.DataFrame({
            "t": t_grid, "y_star": y_star_log, "y_dagger": y_applied_log,
            "status": status_log, "fallback": fallback_log.astype(int),
            "max_head_pred": max_head_pred_log, "binding_element": binding_log})
        mpc_frame.to_csv(outdir / "mpc_log.csv", index=False,
                         float_format="%.10g")
        pd.DataFrame({"t": t_grid, "min_slack_m": min_slack_log,
                      "kkt_residual": kkt_log}).to_csv(
            outdir / "mpc_diag.csv", index=False, float_format="%.10g")
    if controller in ("mpc", "lpf"):
        method = METHOD_MPC if controller == "mpc" else METHOD_LPF
        pd.DataFrame({
            "t": t_grid, "P_bess": p_bess_log,
            "P_hpp_hat_star": p_hat_star_log,
            "P_hpp_hat_dagger": p_hat_ctrl_log,
            "method": [method] * n_cycles}).to_csv(
            outdir / "split_log.csv", index=False, float_format="%.10g")

    # Fatigue assessment: this run against its own unfiltered twin.
    sn = _sn_curve(cfg, band_pa)
    scale = params.head_to_stress
    main_tps = [tp * scale for tp in main.tps.finish()]
    damage = damage_per_element(main_tps, sn)
    damage.scenario = f"{controller}-{scenario.fingerprint}"
    if twin is not None:
        twin_tps = [tp * scale for tp in twin.tps.finish()]
        damage_base = damage_per_element(twin_tps, sn)
    else:
        damage_base = DamageReport(damage=damage.damage.copy(),
                                   n_cycles=damage.n_cycles.copy(), rdi=None)
    damage_base.scenario = f"base-{scenario.fingerprint}"
    attach_rdi(damage, damage_base)
    write_damage_report(outdir / "damage_report.csv", damage)

    # Summary statistics from the logged arrays.
    p_hybrid = p_hpp_log + p_bess_log
    episode = np.abs(y_star_log - y_applied_log) > 1e-6
    episode_mask = _dilate_forward(episode, int(SETTLE_MARGIN_S / period))
    rel_err = np.abs(p_hybrid - p_twin_log) / np.maximum(np.abs(p_twin_log), 1.0)
    quiet = ~episode_mask
    corr = 1.0
    if np.std(p_hybrid) > 0.0 and np.std(p_twin_log) > 0.0:
        corr = float(np.corrcoef(p_hybrid, p_twin_log)[0, 1])
    rdi_critical = None
    if twin is not None and damage_base.total_damage > 0.0:
        rdi_critical = float(damage.headline_rdi(damage_base))
    elif twin is None:
        rdi_critical = 1.0 if damage.total_damage > 0.0 else None

    solve_samples = solve_ms_log if controller == "mpc" else np.zeros(0)
    summary = RunSummary(
        controller=controller, seed=cfg["seed"],
        fingerprint=scenario.fingerprint, duration_s=duration,
        n_cycles=n_cycles, tracking_correlation=corr,
        max_rel_tracking_error=float(rel_err.max()) if n_cycles else 0.0,
        max_rel_tracking_error_quiet=float(rel_err[quiet].max())
        if quiet.any() else 0.0,
        peak_bess_power_w=float(np.max(np.abs(p_bess_log))),
        bess_energy_wh=float(np.sum(np.abs(p_bess_log)) * period / 3600.0),
        head_band_lower_m=limits.head_lower, head_band_upper_m=limits.head_upper,
        max_band_violation_m=main.max_violation,
        violation_time_fraction=main.violating_steps / max(main.total_steps, 1),
        base_max_band_violation_m=twin.max_violation if twin is not None
        else main.max_violation,
        rdi_critical=rdi_critical,
        critical_element=damage_base.critical_element,
        damage_critical=float(
            damage.damage[damage_base.critical_element - 1])
        if damage.damage.size else 0.0,
        damage_base_critical=damage_base.total_damage,
        n_fallback_cycles=int(fallback_log.sum()),
        max_kkt_residual=float(kkt_log.max()) if controller == "mpc" else 0.0,
        median_solve_ms=float(np.median(solve_samples)) if solve_samples.size
        else 0.0,
        max_solve_ms=float(solve_samples.max()) if solve_samples.size else 0.0,
        wall_clock_s=time.perf_counter() - t_start)

    (outdir / "summary.json").write_text(summary.to_json() + "\n")
    manifest = {
        "seed": cfg["seed"], "fingerprint": scenario.fingerprint,
        "config_sha256": cfgmod.config_fingerprint(cfg),
        "version": __version__, "controller": controller,
        "duration_s": duration, "n_cycles": n_cycles,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    config_text = "\n".join(f"{k} = {cfg[k]}" for k in cfg) + "\n"
    (outdir / "config.txt").write_text(config_text)

    return RunResult(
        summary=summary, scenario=scenario, t=t_grid, frequency_hz=freq,
        y_star=y_star_log, y_applied=y_applied_log, p_hpp_w=p_hpp_log,
        p_twin_w=p_twin_log, p_bess_w=p_bess_log, p_hybrid_w=p_hybrid,
        min_slack_m=min_slack_log, fallback=fallback_log, kkt_residuals=kkt_log,
        solve_ms=solve_ms_log, episode_mask=episode_mask, damage=damage,
        damage_base=damage_base, limits=limits,
        paths={"dir": outdir})


def _sn_curve(cfg: dict, band_pa: float) -> SnCurve:
    endurance = cfg["sn_endurance_limit_pa"]
    if endurance < 0.0:
        endurance = 0.5 * band_pa   # zero-damage threshold tied to the band
    return SnCurve(reference_stress=cfg["sn_reference_stress_pa"],
                   exponent=cfg["sn_exponent"],
                   reference_cycles=cfg["sn_reference_cycles"],
                   endurance_limit=endurance)


def _dilate_forward(mask: np.ndarray, n: int) -> np.ndarray:
    out = mask.copy()
    idx = np.where(mask)[0]
    for i in idx:
        out[i:i + n + 1] = True
    return out


# -- comparison ----------------------------------------------------------------

def compare_report(results: list[RunResult], output_dir) -> pd.DataFrame:
    """Comparison table across runs sharing one scenario fingerprint."""
    if not results:
        raise ParameterError("nothing to compare")
    fp = _scenario_part(results[0])
    for r in results[1:]:
        if _scenario_part(r) != fp:
            raise ScenarioMismatchError(
                "runs were produced from different scenarios: "
                f"{_scenario_part(r)} vs {fp}")

    base = next((r for r in results if r.summary.controller == "none"), None)
    rows = []
    rdi_columns = {}
    for r in results:
        s = r.summary
        if base is not None and base is not r:
            base_damage = base.damage
        else:
            base_damage = r.damage_base
        if base_damage.total_damage > 0.0:
            rdi = float(r.damage.headline_rdi(base_damage))
        else:
            rdi = np.nan
        rows.append({
            "controller": s.controller,
            "tracking_correlation": s.tracking_correlation,
            "max_rel_tracking_error": s.max_rel_tracking_error,
            "peak_bess_mw": s.peak_bess_power_w / 1e6,
            "bess_energy_wh": s.bess_energy_wh,
            "max_band_violation_m": s.max_band_violation_m,
            "rdi_critical": rdi,
        })
        with np.errstate(divide="ignore", invalid="ignore"):
            per_elem = np.where(base_damage.damage > 0.0,
                                r.damage.damage / base_damage.damage, np.nan)
        rdi_columns[s.controller] = per_elem

    frame = pd.DataFrame(rows)
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(outdir / "comparison.csv", index=False, float_format="%.6g")

    n_elem = results[0].damage.damage.size
    per_elem_frame = pd.DataFrame({"element": np.arange(1, n_elem + 1)})
    for name, col in rdi_columns.items():
        per_elem_frame[f"rdi_{name}"] = col
    per_elem_frame.to_csv(outdir / "rdi_per_element.csv", index=False,
                          float_format="%.6g")

    md = ["| controller | corr | max err | peak BESS [MW] | energy [Wh] | "
          "violation [m] | RDI |",
          "|---|---|---|---|---|---|---|"]
    for row in rows:
        md.append("| {controller} | {tracking_correlation:.4f} | "
                  "{max_rel_tracking_error:.4f} | {peak_bess_mw:.2f} | "
                  "{bess_energy_wh:.1f} | {max_band_violation_m:.3f} | "
                  "{rdi_critical:.4f} |".format(**row))
    (outdir / "comparison.md").write_text("\n".join(md) + "\n")
    return frame


def _scenario_part(result: RunResult) -> str:
    """Fingerprint ignoring the controller choice."""
    cfg = dict(result.scenario.cfg)
    cfg["controller"] = "none"
    return cfgmod.config_fingerprint(cfg)
