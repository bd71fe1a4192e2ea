"""Fixed-step transient simulation of the single-phase energization circuit.

Topology (unloaded transformer)::

    source --R_src--L_src--[ SSICL ]--R_w--L_w--+-- core (flux-driven)
                                                 +-- R_c

The SSICL block is an ideal bidirectional switch in parallel with the
limiter resistor, an R-C snubber and a varistor. A vacuum breaker can
bypass the whole block once it latches.

Integration is the implicit trapezoidal rule applied to the line current,
core flux and snubber capacitor voltage. On every step the nonlinear
system is linear on each piece of the core characteristic, so it is solved
exactly per piece; only the varistor needs a short Newton loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .core import SaturableCore, magnetizing_current
from .waveform import WaveformRecord


class SimulationError(RuntimeError):
    """Integrator blow-up or a step that could not be solved."""

    def __init__(self, message: str, t: float | None = None):
        if t is not None:
            message = f"{message} (t = {t:.9f} s)"
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class CircuitParams:
    """Source, series impedance and SSICL component values."""

    v_peak: float = 220.0 * math.sqrt(2.0)
    f0: float = 50.0
    source_r: float = 1.0
    source_l: float = 5e-3
    winding_r: float = 1.13
    winding_l: float = 2.2 / (2.0 * math.pi * 50.0)
    limiter_r: float = 10.0
    snubber_r: float = 15.0
    snubber_c: float = 47e-9
    mov_clamp_v: float = 270.0
    mov_ref_i: float = 1e-3
    mov_alpha: float = 25.0
    energize_angle: float = 0.0
    switch_on_r: float = 0.0

    def __post_init__(self):
        if not self.v_peak >= 0:
            raise ValueError(f"v_peak must be non-negative, got {self.v_peak}")
        positive = (
            "f0", "source_r", "source_l", "winding_r", "winding_l",
            "limiter_r", "snubber_r", "snubber_c", "mov_clamp_v", "mov_ref_i",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.mov_alpha >= 1:
            raise ValueError(f"mov_alpha must be >= 1, got {self.mov_alpha}")
        if not self.switch_on_r >= 0:
            raise ValueError("switch_on_r must be non-negative")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f0

    @property
    def period(self) -> float:
        return 1.0 / self.f0

    @property
    def series_r(self) -> float:
        return self.source_r + self.winding_r

    @property
    def series_l(self) -> float:
        return self.source_l + self.winding_l

    def impedance(self, r: float, l: float) -> tuple[float, float]:
        """Return ``(Z, phi)`` of a series R-L at the supply frequency."""
        x = self.omega * l
        return math.hypot(r, x), math.atan2(x, r)

    def source_voltage(self, t: float) -> float:
        """Supply voltage ``t`` seconds after the energizing switch closes."""
        return self.v_peak * math.sin(self.omega * t + self.energize_angle)


@dataclass(frozen=True)
class SimState:
    """Integrator state.

    ``ssicl_v`` (voltage across the SSICL block) and ``mag_v`` (voltage
    across the magnetizing branch) are algebraic values the trapezoidal
    history terms need; they are carried so nothing is recomputed.
    """

    t: float = 0.0
    core_flux: float = 0.0
    line_current: float = 0.0
    snubber_v: float = 0.0
    switch_closed: bool = True
    ssicl_v: float = 0.0
    mag_v: float = 0.0
    bypassed: bool = False

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (
            self.t, self.core_flux, self.line_current, self.snubber_v, self.ssicl_v, self.mag_v,
        ))


def initial_state(params: CircuitParams, core: SaturableCore) -> SimState:
    """State at the energization instant: zero line current, remnant flux.

    The single-valued core draws ``magnetizing_current(remnant)`` even at
    zero line current, so that current initially circulates through the
    core-loss resistor.
    """
    i_mag = magnetizing_current(core, core.remnant_flux)
    mag_v = -core.core_loss_r * i_mag if math.isfinite(core.core_loss_r) else 0.0
    return SimState(t=0.0, core_flux=core.remnant_flux, mag_v=mag_v)


def mov_current(params: CircuitParams, v: float) -> float:
    """Varistor current at terminal voltage ``v`` (power-law clamp)."""
    if v == 0.0:
        return 0.0
    return math.copysign(params.mov_ref_i * (abs(v) / params.mov_clamp_v) ** params.mov_alpha, v)


def _mov_conductance(params: CircuitParams, v: float) -> float:
    a = abs(v)
    if a == 0.0:
        return 0.0
    return params.mov_alpha * params.mov_ref_i * (a / params.mov_clamp_v) ** (params.mov_alpha - 1.0) / params.mov_clamp_v


def snubber_current(params: CircuitParams, state: SimState) -> float:
    return (state.ssicl_v - state.snubber_v) / params.snubber_r


def branch_currents(params: CircuitParams, state: SimState) -> dict[str, float]:
    """Split of the line current over the SSICL branches.

    ``line == switch + limiter + snubber + mov + bypass`` holds exactly in
    the conducting modes and to solver tolerance in the blocking mode.
    """
    i = state.line_current
    i_sn = snubber_current(params, state)
    if state.bypassed:
        return dict(switch=0.0, limiter=0.0, snubber=i_sn, mov=0.0, bypass=i - i_sn)
    if state.switch_closed:
        return dict(switch=i - i_sn, limiter=0.0, snubber=i_sn, mov=0.0, bypass=0.0)
    v = state.ssicl_v
    return dict(
        switch=0.0,
        limiter=v / params.limiter_r,
        snubber=i_sn,
        mov=mov_current(params, v),
        bypass=0.0,
    )


class _Stepper:
    """Per-run constants of the trapezoidal companion model.

    ``advance`` works on the raw tuple ``(i, flux, ssicl_v, mag_v, snubber_v)``
    so the inner loop avoids building state objects.
    """

    def __init__(self, params: CircuitParams, core: SaturableCore, dt: float):
        if not (dt > 0 and dt <= 1.0 / (50.0 * params.f0)):
            raise ValueError(f"dt must lie in (0, 1/(50 f0)], got {dt}")
        self.params, self.core, self.dt = params, core, dt
        self.h2 = h2 = 0.5 * dt
        self.r_eq = params.snubber_r + h2 / params.snubber_c
        self.rc_finite = math.isfinite(core.core_loss_r)
        self.k_c = 2.0 / (dt * core.core_loss_r) if self.rc_finite else 0.0
        self.g_fixed = 1.0 / params.limiter_r + 1.0 / self.r_eq
        self.w, self.phase, self.vm = params.omega, params.energize_angle, params.v_peak

    def advance(self, t0: float, t1: float, x: tuple, conducting: bool, bypassed: bool) -> tuple:
        p, core, h2, dt = self.params, self.core, self.h2, self.dt
        i0, lam0, vs0, vm0, vc0 = x
        r_ser = p.series_r + (p.switch_on_r if conducting and not bypassed else 0.0)
        v0 = self.vm * math.sin(self.w * t0 + self.phase)
        v1 = self.vm * math.sin(self.w * t1 + self.phase)

        # snubber companion: i_sn1 = (vs1 - hist_c) / r_eq
        r_eq = self.r_eq
        isn0 = (vs0 - vc0) / p.snubber_r
        hist_c = vc0 + h2 / p.snubber_c * isn0

        # core-loss companion: i1 = i_mag(lam1) + k_c * lam1 - hist_m
        k_c = self.k_c
        hist_m = (2.0 * lam0 / dt + vm0) / core.core_loss_r if self.rc_finite else 0.0

        # KVL with the flux equation folded in:
        # lam1 + (l_ser + h2 r_ser) i1 + h2 vs1 = rhs
        rhs = lam0 + p.series_l * i0 + h2 * (v0 + v1 - r_ser * i0 - vs0)
        l_eff = p.series_l + h2 * r_ser

        if conducting:
            lam1 = _solve_flux(core, lam0, l_eff, rhs, k_c, hist_m)
            i1 = magnetizing_current(core, lam1) + k_c * lam1 - hist_m
            vs1 = 0.0
        else:
            vs1 = 0.0
            for _ in range(60):
                # blocking: vs1 = (i1 - i_off) / g_lin with the varistor linearized at vs1
                g_mov = _mov_conductance(p, vs1)
                g_lin = self.g_fixed + g_mov
                i_off = mov_current(p, vs1) - g_mov * vs1 - hist_c / r_eq
                lam1 = _solve_flux(core, lam0, l_eff + h2 / g_lin, rhs + h2 * i_off / g_lin, k_c, hist_m)
                i1 = magnetizing_current(core, lam1) + k_c * lam1 - hist_m
                vs1 = (i1 - i_off) / g_lin
                kcl = i1 - (vs1 / p.limiter_r + (vs1 - hist_c) / r_eq + mov_current(p, vs1))
                if abs(kcl) < 1e-12 * max(1.0, abs(i1)):
                    break
            else:
                raise SimulationError("varistor iteration did not converge", t1)

        isn1 = (vs1 - hist_c) / r_eq
        vc1 = vc0 + h2 / p.snubber_c * (isn0 + isn1)
        vm1 = 2.0 * (lam1 - lam0) / dt - vm0
        out = (i1, lam1, vs1, vm1, vc1)
        if not all(map(math.isfinite, out)):
            raise SimulationError("integrator produced a non-finite state", t1)
        return out


def step(
    params: CircuitParams,
    core: SaturableCore,
    state: SimState,
    dt: float,
    gate_on: bool,
    bypassed: bool = False,
) -> SimState:
    """Advance the circuit by one trapezoidal step of length ``dt``.

    ``gate_on`` shorts the SSICL through the (ideal) switch; otherwise the
    line current is shared by the limiter, snubber and varistor. ``bypassed``
    models the closed vacuum breaker and overrides the gate.
    """
    if not state.is_finite():
        raise SimulationError("non-finite state", state.t)
    stepper = _Stepper(params, core, dt)
    x = (state.line_current, state.core_flux, state.ssicl_v, state.mag_v, state.snubber_v)
    t1 = state.t + dt
    i1, lam1, vs1, vm1, vc1 = stepper.advance(state.t, t1, x, gate_on or bypassed, bypassed)
    return SimState(
        t=t1,
        core_flux=lam1,
        line_current=i1,
        snubber_v=vc1,
        switch_closed=bool(gate_on) and not bypassed,
        ssicl_v=vs1,
        mag_v=vm1,
        bypassed=bypassed,
    )


def _solve_flux(core: SaturableCore, lam0: float, l_tot: float, rhs: float, k_c: float, hist_m: float) -> float:
    """Solve ``lam + l_tot * (i_mag(lam) + k_c lam - hist_m) = rhs`` exactly.

    The left side is continuous, piecewise linear and strictly increasing,
    so exactly one piece holds the root.
    """
    knee = core.flux_knee
    first = 0 if abs(lam0) <= knee else (1 if lam0 > 0 else -1)
    for seg in (first, 0, 1, -1):
        if seg == 0:
            a, b = 1.0 / core.l_unsat, 0.0
        else:
            a, b = core.segment(seg * 2.0 * knee)
        lam = (rhs - l_tot * (b - hist_m)) / (1.0 + l_tot * (a + k_c))
        tol = 1e-12 * knee
        if seg == 0 and abs(lam) <= knee + tol:
            return lam
        if seg == 1 and lam >= knee - tol:
            return lam
        if seg == -1 and lam <= -knee + tol:
            return lam
    raise SimulationError("no consistent core segment for the step")


GateSource = Union[bool, Callable[[float], bool], "object"]


STANDARD_CHANNELS = (
    "source_v", "line_current", "switch_current", "limiter_current", "snubber_current",
    "mov_current", "bypass_current", "core_flux", "mag_v", "ssicl_v", "gate",
)
CONTROL_CHANNELS = ("filtered", "estimate", "residual", "vcb")


def _ratio(a: float, b: float, what: str) -> int:
    n = round(a / b)
    if n < 1 or abs(n * b - a) > 1e-9 * a:
        raise ValueError(f"{what}: {a} is not an integer multiple of {b}")
    return int(n)


def run(
    params: CircuitParams,
    core: SaturableCore,
    gate: GateSource = True,
    duration: float = 0.1,
    dt: float = 5e-6,
    sample_rate: float = 100e3,
    metadata: dict | None = None,
) -> WaveformRecord:
    """Simulate ``duration`` seconds and record every channel.

    ``gate`` is a constant, a function of time returning the gate command,
    or a controller exposing ``sample_rate`` and ``sample(current)``; the
    controller is polled at its own rate and its command is held between
    polls. Samples are taken at ``k / sample_rate`` for
    ``k < round(duration * sample_rate)``.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if sample_rate * dt > 1.0 + 1e-12:
        raise ValueError("sample_rate must not exceed 1/dt")
    rec_every = _ratio(1.0 / sample_rate, dt, "recorder interval")
    n_samples = int(round(duration * sample_rate))
    n_steps = n_samples * rec_every

    controller = gate if hasattr(gate, "sample") else None
    ctrl_every = _ratio(1.0 / controller.sample_rate, dt, "controller interval") if controller else 0
    channels = STANDARD_CHANNELS + (CONTROL_CHANNELS if controller else ())
    data = {name: np.zeros(n_samples) for name in channels}

    state = initial_state(params, core)
    stepper = _Stepper(params, core, dt)
    x = (state.line_current, state.core_flux, state.ssicl_v, state.mag_v, state.snubber_v)
    gate_on, vcb = True, False
    # branch split follows the mode the current state was integrated under
    mode = (True, False)
    diag = dict(filtered=0.0, estimate=0.0, residual=0.0)
    cols = [data[name] for name in STANDARD_CHANNELS]
    k = 0
    for n in range(n_steps + 1):
        t = n * dt
        if controller is not None:
            if n % ctrl_every == 0:
                gate_on, vcb, diag = controller.sample(x[0])
        elif callable(gate):
            gate_on = bool(gate(t))
        else:
            gate_on = bool(gate)
        if n % rec_every == 0 and k < n_samples:
            # record before stepping so the gate channel is the command for the next interval
            i, lam, vs, vm, vc = x
            st = SimState(t, lam, i, vc, mode[0] and not mode[1], vs, vm, mode[1])
            br = branch_currents(params, st)
            row = (
                params.source_voltage(t), i, br["switch"], br["limiter"], br["snubber"],
                br["mov"], br["bypass"], lam, vm, vs, 1.0 if gate_on else 0.0,
            )
            for col, value in zip(cols, row):
                col[k] = value
            if controller is not None:
                data["filtered"][k] = diag["filtered"]
                data["estimate"][k] = diag["estimate"]
                data["residual"][k] = diag["residual"]
                data["vcb"][k] = 1.0 if vcb else 0.0
            k += 1
        if n == n_steps:
            break
        x = stepper.advance(t, t + dt, x, gate_on or vcb, vcb)
        mode = (gate_on or vcb, vcb)

    meta = dict(dt=dt, f0=params.f0, energize_angle=params.energize_angle)
    if metadata:
        meta.update(metadata)
    return WaveformRecord(sample_rate=sample_rate, channels=data, metadata=meta)


def closed_form_on_current(params: CircuitParams, t: float, t0: float, r: float | None = None, l: float | None = None) -> float:
    """Line current with the switch conducting, energized at ``t0`` from zero.

    ``r`` and ``l`` are the total series resistance and inductance; they
    default to the source plus winding values. The source is taken as
    ``v_peak * sin(omega t)`` in absolute time.
    """
    r = params.series_r if r is None else r
    l = params.series_l if l is None else l
    z, phi = params.impedance(r, l)
    w = params.omega
    amp = params.v_peak / z
    return -amp * math.sin(w * t0 - phi) * math.exp(-(r / l) * (t - t0)) + amp * math.sin(w * t - phi)


def closed_form_off_current(params: CircuitParams, t: float, t2: float, i1: float, r: float | None = None, l: float | None = None) -> float:
    """Line current after the switch opens at ``t2`` carrying ``i1``.

    ``r`` defaults to the series resistance plus the limiter resistor.
    """
    r = params.series_r + params.limiter_r if r is None else r
    l = params.series_l if l is None else l
    z, phi = params.impedance(r, l)
    w = params.omega
    amp = params.v_peak / z
    return (i1 - amp * math.sin(w * t2 - phi)) * math.exp(-(r / l) * (t - t2)) + amp * math.sin(w * t - phi)
