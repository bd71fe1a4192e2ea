"""Scenario configuration, execution, parameter sweeps and reports.

Scenarios are YAML documents with unit-suffixed keys::

    name: worst-case
    circuit:
      v_rms_v: 220            # or v_peak_v
      f0_hz: 50
      source_r_ohm: 1.0
      source_l_h: 0.005
      limiter_r_ohm: 10
      ...
    nameplate: {...}
    core: {knee_pu: 1.15, sat_ratio: 0.0882, remnant_pu: 0.8}
    controller: {...}          # omit for an uncontrolled run
    simulation: {duration_s: 0.3, dt_s: 5.0e-6, record_rate_hz: 100000}
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
import yaml

from .circuit import CircuitParams, SimulationError, run
from .controller import ControllerConfig, SsiclController, three_phase_run
from .core import NameplateParams, SaturableCore, core_from_nameplate
from .waveform import WaveformRecord

# Core calibration reproducing a ~25 A unlimited first peak for the
# zero-crossing, 0.8 pu remnant case (see calibrate_sat_ratio).
CALIBRATED_KNEE_PU = 1.15
CALIBRATED_SAT_RATIO = 0.0882
DEFAULT_I_TH = 0.8

FIRST_PEAK_CYCLES = 2
SETTLE_BAND = 0.05


class ScenarioError(ValueError):
    """Invalid scenario document; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


class ScenarioParseError(ScenarioError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__([f"parse error{where}: {message}"])


@dataclass(frozen=True)
class CoreCalibration:
    knee_pu: float = CALIBRATED_KNEE_PU
    sat_ratio: float = CALIBRATED_SAT_RATIO
    remnant_pu: float = 0.0


LAB_NAMEPLATE = NameplateParams(
    rated_va=2300.0, v_primary=220.0, v_secondary=380.0,
    series_z_real=1.13, series_z_imag=2.2, x_m=169.0, r_c=2290.0, f0=50.0,
)


@dataclass(frozen=True)
class Scenario:
    circuit: CircuitParams
    nameplate: NameplateParams = LAB_NAMEPLATE
    core_calibration: CoreCalibration = CoreCalibration()
    controller: ControllerConfig | None = None
    duration: float = 0.3
    dt: float = 5e-6
    record_rate: float = 100e3
    seed: int = 0
    noise_rms: float = 0.0
    name: str = "scenario"

    @property
    def core(self) -> SaturableCore:
        c = self.core_calibration
        return core_from_nameplate(self.nameplate, c.knee_pu, c.sat_ratio, c.remnant_pu)

    def with_(self, angle_deg: float | None = None, remnant_pu: float | None = None,
              limiter_r: float | None = None, controller: "ControllerConfig | None | bool" = True) -> "Scenario":
        """Copy with the energization angle, remnant, limiter or controller replaced.

        ``controller=False`` drops the controller; ``True`` keeps the current one.
        """
        s = self
        if angle_deg is not None:
            s = replace(s, circuit=replace(s.circuit, energize_angle=math.radians(angle_deg)))
        if limiter_r is not None:
            s = replace(s, circuit=replace(s.circuit, limiter_r=limiter_r))
        if remnant_pu is not None:
            s = replace(s, core_calibration=replace(s.core_calibration, remnant_pu=remnant_pu))
        if controller is False:
            s = replace(s, controller=None)
        elif controller is not True:
            s = replace(s, controller=controller)
        return s


def lab_scenario(angle_deg: float = 0.0, remnant_pu: float = 0.8, controlled: bool = True, **kw) -> Scenario:
    """The laboratory system of the prototype with the calibrated core."""
    np_ = LAB_NAMEPLATE
    circuit = CircuitParams(
        v_peak=math.sqrt(2.0) * 220.0, f0=50.0, source_r=1.0, source_l=5e-3,
        winding_r=np_.series_z_real, winding_l=np_.winding_l, limiter_r=10.0,
        snubber_r=15.0, snubber_c=47e-9, energize_angle=math.radians(angle_deg),
    )
    ctl = ControllerConfig(i_th=DEFAULT_I_TH) if controlled else None
    return Scenario(
        circuit=circuit, nameplate=np_,
        core_calibration=CoreCalibration(remnant_pu=remnant_pu),
        controller=ctl, **kw,
    )


# ---------------------------------------------------------------- loading

_CIRCUIT_KEYS = {
    "f0_hz": "f0", "source_r_ohm": "source_r", "source_l_h": "source_l",
    "winding_r_ohm": "winding_r", "winding_l_h": "winding_l", "limiter_r_ohm": "limiter_r",
    "snubber_r_ohm": "snubber_r", "snubber_c_f": "snubber_c", "mov_clamp_v": "mov_clamp_v",
    "mov_ref_a": "mov_ref_i", "mov_alpha": "mov_alpha", "switch_on_r_ohm": "switch_on_r",
}
_CIRCUIT_REQUIRED = ("source_r_ohm", "source_l_h", "limiter_r_ohm", "snubber_r_ohm", "snubber_c_f")
_NAMEPLATE_KEYS = {
    "rated_va": "rated_va", "v_primary_v": "v_primary", "v_secondary_v": "v_secondary",
    "series_z_real_ohm": "series_z_real", "series_z_imag_ohm": "series_z_imag",
    "x_m_ohm": "x_m", "r_c_ohm": "r_c", "f0_hz": "f0",
}
_CORE_KEYS = {"knee_pu": "knee_pu", "sat_ratio": "sat_ratio", "remnant_pu": "remnant_pu"}
_CONTROLLER_KEYS = {
    "i_th_a": "i_th", "lpf_cutoff_hz": "lpf_cutoff", "sample_rate_hz": "sample_rate",
    "bypass_cycles": "bypass_cycles", "kf_q": "kf_q", "kf_r": "kf_r", "kf_sigma_a": "kf_sigma",
}
_SIM_KEYS = {
    "duration_s": "duration", "dt_s": "dt", "record_rate_hz": "record_rate",
    "seed": "seed", "noise_rms_a": "noise_rms",
}


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def section(self, doc: dict, name: str, required: bool = True) -> dict | None:
        sec = doc.get(name)
        if sec is None:
            if required:
                self.errors.append(f"{name}: missing section")
            return None
        if not isinstance(sec, dict):
            self.errors.append(f"{name}: expected a mapping")
            return None
        return sec

    def numbers(self, sec: dict, prefix: str, keymap: dict, required=(), integer=()) -> dict:
        out = {}
        for key in sec:
            if key not in keymap:
                self.errors.append(f"{prefix}.{key}: unknown key")
        for key, attr in keymap.items():
            if key not in sec:
                if key in required:
                    self.errors.append(f"{prefix}.{key}: required value missing")
                continue
            value = sec[key]
            if isinstance(value, str):
                # YAML 1.1 reads "5e-6" (no dot) as a string
                try:
                    value = float(value)
                except ValueError:
                    pass
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.errors.append(f"{prefix}.{key}: expected a number, got {value!r}")
                continue
            if key in integer and not float(value).is_integer():
                self.errors.append(f"{prefix}.{key}: expected an integer, got {value!r}")
                continue
            if not math.isfinite(value):
                self.errors.append(f"{prefix}.{key}: must be finite")
                continue
            out[attr] = int(value) if key in integer else float(value)
        return out

    def positive(self, values: dict, prefix: str, keymap: dict, allow_zero=()):
        inverse = {v: k for k, v in keymap.items()}
        for attr, value in values.items():
            key = inverse[attr]
            if key in allow_zero:
                if value < 0:
                    self.errors.append(f"{prefix}.{key}: must be >= 0, got {value!r}")
            elif not value > 0:
                self.errors.append(f"{prefix}.{key}: must be > 0, got {value!r}")


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioParseError` (with line/column) for malformed
    YAML and :class:`ScenarioError` listing every validation failure.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ScenarioParseError(str(exc.problem or exc), line, col) from exc
    except yaml.YAMLError as exc:
        raise ScenarioParseError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise ScenarioError(["document: expected a mapping at top level"])

    c = _Collector()
    for key in doc:
        if key not in ("name", "circuit", "nameplate", "core", "controller", "simulation"):
            c.errors.append(f"{key}: unknown section")

    # nameplate
    np_sec = c.section(doc, "nameplate")
    nameplate = None
    if np_sec is not None:
        vals = c.numbers(np_sec, "nameplate", _NAMEPLATE_KEYS, required=tuple(k for k in _NAMEPLATE_KEYS if k != "f0_hz"))
        c.positive(vals, "nameplate", _NAMEPLATE_KEYS)
        if len(vals) == len(_NAMEPLATE_KEYS) or (len(vals) == len(_NAMEPLATE_KEYS) - 1 and "f0" not in vals):
            try:
                nameplate = NameplateParams(**vals)
            except ValueError as exc:
                c.errors.append(f"nameplate: {exc}")

    # circuit
    circuit = None
    c_sec = c.section(doc, "circuit")
    if c_sec is not None:
        c_sec = dict(c_sec)
        v_peak = None
        has_rms, has_peak = "v_rms_v" in c_sec, "v_peak_v" in c_sec
        if has_rms == has_peak:
            c.errors.append("circuit.v_rms_v: give exactly one of v_rms_v or v_peak_v")
        else:
            key = "v_rms_v" if has_rms else "v_peak_v"
            raw = c_sec.pop(key)
            if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not raw > 0:
                c.errors.append(f"circuit.{key}: must be a positive number, got {raw!r}")
            else:
                v_peak = float(raw) * (math.sqrt(2.0) if has_rms else 1.0)
        c_sec.pop("v_rms_v", None)
        c_sec.pop("v_peak_v", None)
        angle = c_sec.pop("energize_angle_deg", 0.0)
        if isinstance(angle, bool) or not isinstance(angle, (int, float)) or not math.isfinite(angle):
            c.errors.append(f"circuit.energize_angle_deg: expected a number, got {angle!r}")
            angle = 0.0
        vals = c.numbers(c_sec, "circuit", _CIRCUIT_KEYS, required=_CIRCUIT_REQUIRED)
        c.positive(vals, "circuit", _CIRCUIT_KEYS, allow_zero=("switch_on_r_ohm",))
        if "mov_alpha" in vals and vals["mov_alpha"] < 1:
            c.errors.append("circuit.mov_alpha: must be >= 1")
        if nameplate is not None:
            vals.setdefault("winding_r", nameplate.series_z_real)
            vals.setdefault("winding_l", nameplate.winding_l)
            vals.setdefault("f0", nameplate.f0)
        if v_peak is not None and all(k in c_sec for k in _CIRCUIT_REQUIRED) and not c.errors:
            try:
                circuit = CircuitParams(v_peak=v_peak, energize_angle=math.radians(angle), **vals)
            except ValueError as exc:
                c.errors.append(f"circuit: {exc}")

    # core calibration
    calib = CoreCalibration()
    core_sec = c.section(doc, "core", required=False)
    if core_sec is not None:
        vals = c.numbers(core_sec, "core", _CORE_KEYS)
        if "knee_pu" in vals and not vals["knee_pu"] >= 1:
            c.errors.append("core.knee_pu: must be >= 1")
        if "sat_ratio" in vals and not 0 < vals["sat_ratio"] <= 1:
            c.errors.append("core.sat_ratio: must lie in (0, 1]")
        calib = replace(calib, **vals)
        if abs(calib.remnant_pu) > calib.knee_pu:
            c.errors.append("core.remnant_pu: |remnant_pu| must not exceed knee_pu")

    # controller
    controller = None
    ctl_sec = c.section(doc, "controller", required=False)
    if ctl_sec is not None:
        vals = c.numbers(ctl_sec, "controller", _CONTROLLER_KEYS, integer=("bypass_cycles",))
        if circuit is not None:
            vals["f0"] = circuit.f0
        try:
            controller = ControllerConfig(**vals)
        except ValueError as exc:
            for msg in str(exc).split("; "):
                c.errors.append(f"controller: {msg}")

    # simulation
    sim = {}
    sim_sec = c.section(doc, "simulation", required=False)
    if sim_sec is not None:
        sim = c.numbers(sim_sec, "simulation", _SIM_KEYS, integer=("seed",))
        c.positive({k: v for k, v in sim.items() if k != "seed"}, "simulation", _SIM_KEYS, allow_zero=("noise_rms_a",))

    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        c.errors.append("name: expected a string")
        name = "scenario"

    if circuit is not None:
        c.errors.extend(_check_timing(circuit, controller, sim.get("duration", 0.3), sim.get("dt", 5e-6), sim.get("record_rate", 100e3)))
    if c.errors:
        raise ScenarioError(c.errors)
    return Scenario(
        circuit=circuit, nameplate=nameplate, core_calibration=calib, controller=controller,
        name=name, **sim,
    )


def _check_timing(circuit, controller, duration, dt, record_rate) -> list[str]:
    errors = []
    period = 1.0 / circuit.f0
    if not dt > 0:
        return errors  # reported by the positivity check
    if dt > period / 50:
        errors.append(f"simulation.dt_s: must not exceed 1/(50 f0) = {period / 50:g} s")
    if duration < 5 * period - 1e-12:
        errors.append(f"simulation.duration_s: must cover at least 5 cycles ({5 * period:g} s)")
    if record_rate < 10e3:
        errors.append("simulation.record_rate_hz: must be >= 10 kHz")
    if record_rate * dt > 1 + 1e-12 or not _is_multiple(1.0 / record_rate, dt):
        errors.append("simulation.record_rate_hz: 1/record_rate must be an integer multiple of dt")
    if controller is not None and not _is_multiple(1.0 / controller.sample_rate, dt):
        errors.append("controller.sample_rate_hz: 1/sample_rate must be an integer multiple of dt")
    return errors


def _is_multiple(a: float, b: float) -> bool:
    n = round(a / b)
    return n >= 1 and abs(n * b - a) <= 1e-9 * a


def dump_scenario(s: Scenario) -> str:
    """Serialize a scenario back to the YAML layout read by :func:`load_scenario`."""
    c = s.circuit
    doc = {
        "name": s.name,
        "circuit": {
            "v_peak_v": c.v_peak, "f0_hz": c.f0,
            "source_r_ohm": c.source_r, "source_l_h": c.source_l,
            "winding_r_ohm": c.winding_r, "winding_l_h": c.winding_l,
            "limiter_r_ohm": c.limiter_r, "snubber_r_ohm": c.snubber_r, "snubber_c_f": c.snubber_c,
            "mov_clamp_v": c.mov_clamp_v, "mov_ref_a": c.mov_ref_i, "mov_alpha": c.mov_alpha,
            "energize_angle_deg": math.degrees(c.energize_angle), "switch_on_r_ohm": c.switch_on_r,
        },
        "nameplate": {k: getattr(s.nameplate, a) for k, a in _NAMEPLATE_KEYS.items()},
        "core": {k: getattr(s.core_calibration, a) for k, a in _CORE_KEYS.items()},
        "simulation": {k: getattr(s, a) for k, a in _SIM_KEYS.items()},
    }
    if s.controller is not None:
        doc["controller"] = {k: getattr(s.controller, a) for k, a in _CONTROLLER_KEYS.items()}
    return yaml.safe_dump(doc, sort_keys=False)


# ---------------------------------------------------------------- running

@dataclass
class RunMetrics:
    first_peak: float
    steady_peak: float
    limiting_ratio: float | None = None
    bypass_time: float | None = None
    settle_time: float | None = None
    limiter_energy: float = 0.0


def compute_metrics(rec: WaveformRecord, f0: float, limiter_r: float) -> RunMetrics:
    period = 1.0 / f0
    i = rec["line_current"]
    duration = len(rec) / rec.sample_rate
    first = i[rec.window(0.0, FIRST_PEAK_CYCLES * period)]
    last = i[rec.window(duration - period, duration)]
    first_peak = float(np.max(np.abs(first))) if len(first) else 0.0
    steady_peak = float(np.max(np.abs(last))) if len(last) else 0.0

    bypass_time = settle_time = None
    if "vcb" in rec.channels:
        closed = np.nonzero(rec["vcb"] > 0.5)[0]
        bypass_time = float(closed[0] / rec.sample_rate) if len(closed) else None
        err = np.abs(rec["estimate"] - rec["filtered"])
        outside = np.nonzero(err >= SETTLE_BAND * steady_peak)[0]
        if len(outside) == 0:
            settle_time = 0.0
        elif outside[-1] + 1 < len(err):
            settle_time = float((outside[-1] + 1) / rec.sample_rate)
    i_lim = rec["limiter_current"]
    energy = float(np.trapezoid(limiter_r * i_lim * i_lim, dx=1.0 / rec.sample_rate)) if len(i_lim) > 1 else 0.0
    return RunMetrics(first_peak, steady_peak, None, bypass_time, settle_time, energy)


def run_scenario(s: Scenario) -> tuple[WaveformRecord, RunMetrics]:
    """Simulate one scenario and extract its metrics.

    Deterministic for a given scenario (the seed drives the measurement
    noise only).
    """
    gate = SsiclController(s.controller, s.noise_rms, s.seed) if s.controller is not None else True
    meta = dict(
        scenario=s.name,
        remnant_pu=s.core_calibration.remnant_pu,
        limiter_r=s.circuit.limiter_r,
        controlled=s.controller is not None,
        seed=s.seed,
    )
    try:
        rec = run(s.circuit, s.core, gate, s.duration, s.dt, s.record_rate, metadata=meta)
    except SimulationError as exc:
        raise SimulationError(f"scenario {s.name!r}: {exc}") from exc
    return rec, compute_metrics(rec, s.circuit.f0, s.circuit.limiter_r)


@dataclass
class PairedResult:
    limited: RunMetrics
    unlimited: RunMetrics

    @property
    def limiting_ratio(self) -> float:
        if self.limited.first_peak == 0:
            return math.inf
        return self.unlimited.first_peak / self.limited.first_peak


def run_paired(s: Scenario, controller: ControllerConfig | None = None) -> tuple[PairedResult, WaveformRecord, WaveformRecord]:
    """Run the same plant and initial conditions with and without the controller."""
    ctl = controller or s.controller or ControllerConfig(i_th=DEFAULT_I_TH, f0=s.circuit.f0)
    rec_l, m_l = run_scenario(s.with_(controller=ctl))
    rec_u, m_u = run_scenario(s.with_(controller=False))
    pair = PairedResult(m_l, m_u)
    m_l.limiting_ratio = pair.limiting_ratio
    return pair, rec_l, rec_u


@dataclass
class SweepCell:
    angle_deg: float
    remnant_pu: float
    limited: RunMetrics | None = None
    unlimited: RunMetrics | None = None
    error: str | None = None

    @property
    def limiting_ratio(self) -> float | None:
        if self.limited is None or self.unlimited is None:
            return None
        if self.limited.first_peak == 0:
            return math.inf
        return self.unlimited.first_peak / self.limited.first_peak


@dataclass
class SweepReport:
    cells: list[SweepCell] = field(default_factory=list)
    paired: bool = True

    @property
    def min_limiting_ratio(self) -> float | None:
        ratios = [c.limiting_ratio for c in self.cells if c.limiting_ratio is not None]
        return min(ratios) if ratios else None

    @property
    def failures(self) -> int:
        return sum(c.error is not None for c in self.cells)


def _sweep_cell(args) -> SweepCell:
    s, angle, remnant, paired = args
    cell = SweepCell(angle, remnant)
    base = s.with_(angle_deg=angle, remnant_pu=remnant)
    try:
        if paired:
            pair, _, _ = run_paired(base)
            cell.limited, cell.unlimited = pair.limited, pair.unlimited
        elif base.controller is not None:
            cell.limited = run_scenario(base)[1]
        else:
            cell.unlimited = run_scenario(base)[1]
    except (SimulationError, ValueError, ArithmeticError) as exc:
        cell.error = f"{type(exc).__name__}: {exc}"
    return cell


def sweep(s: Scenario, angles, remnants, paired: bool = True, workers: int = 1) -> SweepReport:
    """Evaluate every (angle, remnant) cell; failures are recorded, not raised.

    Cells are ordered angle-major regardless of ``workers``.
    """
    angles, remnants = list(angles), list(remnants)
    if not angles or not remnants:
        raise ValueError("sweep grids must be non-empty")
    jobs = [(s, float(a), float(r), paired) for a in angles for r in remnants]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_sweep_cell, jobs))
    else:
        cells = [_sweep_cell(j) for j in jobs]
    return SweepReport(cells, paired)


def parse_grid(text: str) -> list[float]:
    """``"a0:a1:n"`` -> n evenly spaced values from a0 to a1 inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} must look like start:stop:count")
    a0, a1, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("grid count must be >= 1")
    return [float(v) for v in np.linspace(a0, a1, n)]


def three_phase_scenarios(s: Scenario) -> list[Scenario]:
    """Phase a, b, c copies of ``s`` with sources shifted by 0, -120 and +120 degrees."""
    base = math.degrees(s.circuit.energize_angle)
    return [s.with_(angle_deg=base + shift) for shift in (0.0, -120.0, 120.0)]


def run_three_phase(scenarios, configs=None, paired: bool = False):
    """Independent closed loops for three phases (results in phase order)."""
    scenarios = list(scenarios)
    configs = list(configs) if configs is not None else [sc.controller for sc in scenarios]

    def one(config, scenario):
        scenario = scenario.with_(controller=config)
        if paired:
            return run_paired(scenario)
        return run_scenario(scenario)

    return three_phase_run(one, configs, scenarios)


def calibrate_sat_ratio(s: Scenario, target_peak: float = 25.0, lo: float = 0.01, hi: float = 0.5) -> float:
    """Saturated/unsaturated inductance ratio giving ``target_peak`` unlimited first peak.

    Uses the scenario's knee, remnant and energization angle with the
    controller removed; the first peak decreases monotonically with the ratio.
    """
    from scipy.optimize import brentq

    short = replace(s, duration=max(FIRST_PEAK_CYCLES / s.circuit.f0, 5 / s.circuit.f0), controller=None)

    def err(ratio):
        t = replace(short, core_calibration=replace(short.core_calibration, sat_ratio=ratio))
        return run_scenario(t)[1].first_peak - target_peak

    return float(brentq(err, lo, hi, xtol=1e-5))


# ---------------------------------------------------------------- reports

METRIC_COLUMNS = (
    "name", "angle_deg", "remnant_pu", "first_peak_a", "steady_peak_a", "limiting_ratio",
    "bypass_time_s", "settle_time_s", "limiter_energy_j",
)
SWEEP_COLUMNS = (
    "angle_deg", "remnant_pu", "limited_first_peak_a", "unlimited_first_peak_a", "limiting_ratio",
    "limited_steady_peak_a", "unlimited_steady_peak_a", "bypass_time_s", "settle_time_s",
    "limiter_energy_j", "error",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_row(m: RunMetrics, name: str = "", angle_deg: float | None = None, remnant_pu: float | None = None) -> dict:
    return {
        "name": name, "angle_deg": angle_deg, "remnant_pu": remnant_pu,
        "first_peak_a": m.first_peak, "steady_peak_a": m.steady_peak,
        "limiting_ratio": m.limiting_ratio, "bypass_time_s": m.bypass_time,
        "settle_time_s": m.settle_time, "limiter_energy_j": m.limiter_energy,
    }


def _sweep_rows(report: SweepReport) -> list[dict]:
    rows = []
    for c in report.cells:
        lim, unl = c.limited, c.unlimited
        rows.append({
            "angle_deg": c.angle_deg, "remnant_pu": c.remnant_pu,
            "limited_first_peak_a": lim.first_peak if lim else None,
            "unlimited_first_peak_a": unl.first_peak if unl else None,
            "limiting_ratio": c.limiting_ratio,
            "limited_steady_peak_a": lim.steady_peak if lim else None,
            "unlimited_steady_peak_a": unl.steady_peak if unl else None,
            "bypass_time_s": lim.bypass_time if lim else None,
            "settle_time_s": lim.settle_time if lim else None,
            "limiter_energy_j": lim.limiter_energy if lim else None,
            "error": c.error,
        })
    return rows


def emit_report(obj, fmt: str = "csv") -> str:
    """Render a :class:`RunMetrics`, a list of metric rows, or a :class:`SweepReport`.

    ``fmt`` is ``"csv"`` or ``"table"``. Sweep CSVs end with ``#``-prefixed
    aggregate lines.
    """
    if fmt not in ("csv", "table"):
        raise ValueError(f"unknown report format {fmt!r}")
    footer: list[str] = []
    if isinstance(obj, SweepReport):
        columns, rows = SWEEP_COLUMNS, _sweep_rows(obj)
        if obj.cells:
            footer = [
                f"cells={len(obj.cells)}",
                f"failures={obj.failures}",
                f"min_limiting_ratio={_fmt(obj.min_limiting_ratio)}",
            ]
    else:
        if isinstance(obj, RunMetrics):
            obj = [metrics_row(obj)]
        columns, rows = METRIC_COLUMNS, list(obj)

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
        for line in footer:
            buf.write(f"# {line}\n")
        return buf.getvalue()

    cells = [[_table_fmt(row.get(c)) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[j]) for r in cells]) for j, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    lines += footer
    return "\n".join(lines) + "\n"


def _table_fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def load_report(text: str) -> tuple[list[dict], dict]:
    """Parse a CSV report back into typed rows plus the footer key/values."""
    footer = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            footer[key] = value
        elif line:
            body.append(line)
    rows = []
    for raw in csv.DictReader(body):
        row = {}
        for k, v in raw.items():
            if v == "":
                row[k] = None
            elif k in ("name", "error"):
                row[k] = v
            else:
                row[k] = float(v)
        rows.append(row)
    return rows, footer
