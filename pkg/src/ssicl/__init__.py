"""Transient simulation and Kalman-filter control of a solid-state inrush current limiter."""

from .circuit import (
    CircuitParams,
    SimState,
    SimulationError,
    closed_form_off_current,
    closed_form_on_current,
    mov_current,
    run,
    step,
)
from .controller import (
    ControllerConfig,
    ControllerState,
    SsiclController,
    controller_step,
    lpf_step,
    size_limiter_resistor,
    three_phase_run,
)
from .core import (
    NameplateParams,
    SaturableCore,
    core_from_nameplate,
    incremental_inductance,
    magnetizing_current,
)
from .kalman import FilterError, KfModel, KfState, kf_run, kf_update, residual
from .scenario import (
    RunMetrics,
    Scenario,
    ScenarioError,
    emit_report,
    load_report,
    load_scenario,
    run_paired,
    run_scenario,
    sweep,
    lab_scenario,
)
from .waveform import WaveformRecord

__version__ = "0.1.0"
