"""Penstock fatigue assessment from stress traces.

Pipeline: head trace -> hoop stress -> turning points -> rainflow cycle
counting (four-point method, residual counted as half cycles) -> SN-curve
lookup -> Miner's-rule damage accumulation -> relative damage index against
an uncontrolled base case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UndefinedRdiError
from .parameters import PlantParameters


def turning_points(series: np.ndarray) -> np.ndarray:
    """Local extrema of the series, endpoints included; plateaus collapsed."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        return x.copy()
    dedup = x[np.insert(np.diff(x) != 0.0, 0, True)]
    if dedup.size < 3:
        return dedup
    d = np.diff(dedup)
    keep = np.empty(dedup.size, dtype=bool)
    keep[0] = keep[-1] = True
    keep[1:-1] = d[:-1] * d[1:] < 0.0
    return dedup[keep]


@dataclass
class CycleHistogram:
    """Rainflow cycles: parallel arrays of amplitude, mean and count."""

    amplitudes: np.ndarray = field(default_factory=lambda: np.empty(0))
    means: np.ndarray = field(default_factory=lambda: np.empty(0))
    counts: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if np.any(self.amplitudes < 0.0):
            raise ParameterError("cycle amplitudes must be non-negative")
        if self.counts.size and not np.all(
                np.isin(self.counts, (0.5, 1.0))):
            raise ParameterError("cycle counts must be 0.5 or 1.0")

    @property
    def n_cycles(self) -> float:
        return float(self.counts.sum())

    @property
    def total_half_cycles(self) -> float:
        return float((self.counts * 2.0).sum())

    def scaled(self, factor: float) -> "CycleHistogram":
        return CycleHistogram(self.amplitudes * factor, self.means * factor,
                              self.counts.copy())


def rainflow(series: np.ndarray) -> CycleHistogram:
    """Four-point rainflow counting; the residual yields half cycles."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        return CycleHistogram()
    if not np.all(np.isfinite(x)):
        raise ParameterError("stress series contains non-finite samples")
    tps = turning_points(x)

    amps, means, counts = [], [], []
    stack: list[float] = []
    for point in tps:
        stack.append(point)
        while len(stack) >= 4:
            r_prev = abs(stack[-4] - stack[-3])
            r_mid = abs(stack[-3] - stack[-2])
            r_next = abs(stack[-2] - stack[-1])
            if r_mid <= r_prev and r_mid <= r_next:
                amps.append(r_mid / 2.0)
                means.append((stack[-3] + stack[-2]) / 2.0)
                counts.append(1.0)
                del stack[-3:-1]
            else:
                break
    for a, b in zip(stack[:-1], stack[1:]):
        amps.append(abs(a - b) / 2.0)
        means.append((a + b) / 2.0)
        counts.append(0.5)
    return CycleHistogram(np.array(amps), np.array(means), np.array(counts))


@dataclass(frozen=True)
class SnCurve:
    """Basquin curve N(sigma) = N_ref (sigma_ref / sigma)^m with an endurance cutoff."""

    reference_stress: float      # Pa
    exponent: float              # m, wohler slope
    reference_cycles: float
    endurance_limit: float       # Pa amplitude; at or below: no damage

    def __post_init__(self):
        if min(self.reference_stress, self.exponent,
               self.reference_cycles) <= 0.0:
            raise ParameterError("SN curve parameters must be positive")
        if self.endurance_limit < 0.0:
            raise ParameterError("endurance limit must be non-negative")

    def cycles_to_failure(self, amplitude: float) -> float:
        if amplitude <= self.endurance_limit:
            return math.inf
        return self.reference_cycles * (self.reference_stress / amplitude) \
            ** self.exponent


def default_sn_curve(stress_band: float) -> SnCurve:
    """Welded-steel slope, endurance tied to the controller's fatigue band."""
    return SnCurve(reference_stress=40e6, exponent=3.0, reference_cycles=2e6,
                   endurance_limit=0.5 * stress_band)


def miner_damage(hist: CycleHistogram, sn: SnCurve) -> float:
    """Linear damage accumulation; endurance cycles contribute nothing."""
    if hist.counts.size == 0:
        return 0.0
    n_fail = np.array([sn.cycles_to_failure(a) for a in hist.amplitudes])
    with np.errstate(divide="ignore"):
        return float(np.sum(hist.counts / n_fail))


def relative_damage_index(damage_controlled: float, damage_base: float) -> float:
    """Controlled-case damage divided by base-case damage."""
    if damage_base <= 0.0:
        raise UndefinedRdiError(
            "base case accumulated no damage; report absolute values instead")
    return damage_controlled / damage_base


@dataclass
class DamageReport:
    """Per-element damage of one run, optionally relative to a base run."""

    damage: np.ndarray            # (I,)
    n_cycles: np.ndarray          # (I,) rainflow cycle counts
    rdi: np.ndarray | None        # (I,), nan where base damage is zero
    scenario: str = ""

    @property
    def total_damage(self) -> float:
        return float(self.damage.max()) if self.damage.size else 0.0

    @property
    def critical_element(self) -> int:
        return int(np.argmax(self.damage)) + 1 if self.damage.size else 0

    def headline_rdi(self, base: "DamageReport") -> float:
        """RDI at the base case's most damaged element."""
        idx = base.critical_element - 1
        return relative_damage_index(float(self.damage[idx]),
                                     float(base.damage[idx]))


def damage_per_element(stress_tps: list[np.ndarray], sn: SnCurve) -> DamageReport:
    """Damage from per-element stress turning-point arrays."""
    damage = np.zeros(len(stress_tps))
    cycles = np.zeros(len(stress_tps))
    for i, tps in enumerate(stress_tps):
        hist = rainflow(tps)
        damage[i] = miner_damage(hist, sn)
        cycles[i] = hist.n_cycles
    return DamageReport(damage=damage, n_cycles=cycles, rdi=None)


def attach_rdi(report: DamageReport, base: DamageReport) -> DamageReport:
    rdi = np.full(report.damage.size, np.nan)
    for i in range(report.damage.size):
        if base.damage[i] > 0.0:
            rdi[i] = report.damage[i] / base.damage[i]
        elif report.damage[i] == base.damage[i]:
            rdi[i] = 1.0
    report.rdi = rdi
    return report


def write_damage_report(path, report: DamageReport):
    lines = ["element,n_cycles,D,RDI"]
    for i in range(report.damage.size):
        rdi = "" if report.rdi is None or not np.isfinite(report.rdi[i]) \
            else f"{report.rdi[i]:.10g}"
        lines.append(f"{i + 1},{report.n_cycles[i]:.10g},"
                     f"{report.damage[i]:.10g},{rdi}")
    lines.append(f"# scenario,{report.scenario}")
    lines.append(f"# critical_element,{report.critical_element}")
    lines.append(f"# total_damage,{report.total_damage:.10g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def stress_trace(heads_m: np.ndarray, params: PlantParameters) -> np.ndarray:
    """Hoop stress trace from a head trace."""
    return np.asarray(heads_m, dtype=float) * params.head_to_stress


class StreamingTurningPoints:
    """Per-column turning-point extraction over chunked 2-D traces.

    Carries only (previous value, previous direction) per column, so memory
    stays constant in the trace length; the emitted sequences equal what
    ``turning_points`` returns on the concatenated trace.
    """

    def __init__(self, n_columns: int):
        self._parts: list[list[np.ndarray]] = [[] for _ in range(n_columns)]
        self._prev = np.full(n_columns, np.nan)
        self._dir = np.zeros(n_columns)
        self._started = False

    def feed(self, chunk: np.ndarray):
        chunk = np.atleast_2d(np.asarray(chunk, dtype=float))
        if not self._started:
            self._prev = chunk[0].copy()
            for col in range(chunk.shape[1]):
                self._parts[col].append(chunk[0, col:col + 1].copy())
            chunk = chunk[1:]
            self._started = True
        if chunk.shape[0] == 0:
            return
        for col in range(chunk.shape[1]):
            col_vals = chunk[:, col]
            arr = np.concatenate([[self._prev[col]], col_vals])
            arr = arr[np.insert(np.diff(arr) != 0.0, 0, True)]
            if arr.size < 2:
                continue
            d = np.sign(np.diff(arr))
            tps = []
            if self._dir[col] != 0.0 and d[0] != self._dir[col]:
                tps.append(arr[0:1])       # carried point was an extremum
            flips = np.where(d[:-1] != d[1:])[0]
            if flips.size:
                tps.append(arr[flips + 1])
            if tps:
                self._parts[col].append(np.concatenate(tps))
            self._prev[col] = arr[-1]
            self._dir[col] = d[-1]

    def finish(self) -> list[np.ndarray]:
        out = []
        for col, parts in enumerate(self._parts):
            tail = []
            if self._started and self._dir[col] != 0.0:
                tail = [np.array([self._prev[col]])]
            series = np.concatenate(parts + tail) if parts or tail else np.empty(0)
            out.append(series)
        return out
