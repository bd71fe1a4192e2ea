"""Residual-threshold control law for the solid-state inrush limiter.

Per controller sample: low-pass the measured current, estimate its
fundamental with a deliberately slow Kalman filter, and gate the switch
on while the residual (filtered minus estimate) stays within the
threshold. Enough consecutive quiet cycles latch the bypass breaker.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .kalman import KfModel, KfState, kf_update, residual


@dataclass(frozen=True)
class ControllerConfig:
    i_th: float = 0.37
    lpf_cutoff: float = 1000.0
    sample_rate: float = 10e3
    bypass_cycles: int = 3
    f0: float = 50.0
    kf_q: float = 2e-7
    kf_r: float = 1.0
    kf_sigma: float = 25.0

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self) -> list[str]:
        errors = []
        if not self.i_th > 0:
            errors.append("i_th must be positive")
        if not 0 < self.lpf_cutoff < self.sample_rate / 2:
            errors.append("lpf_cutoff must lie in (0, sample_rate/2)")
        if not (isinstance(self.bypass_cycles, int) and self.bypass_cycles >= 1):
            errors.append("bypass_cycles must be an integer >= 1")
        if not self.f0 > 0:
            errors.append("f0 must be positive")
        if not self.kf_q >= 0 or not self.kf_r > 0:
            errors.append("kf_q must be >= 0 and kf_r > 0")
        if not self.kf_sigma > 0:
            errors.append("kf_sigma must be positive")
        return errors

    @property
    def kf_model(self) -> KfModel:
        return KfModel.for_frequency(self.f0, self.sample_rate, self.kf_q, self.kf_r)

    @property
    def lpf_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Second-order Butterworth, bilinear transform, normalized to unit DC gain."""
        b, a = signal.butter(2, self.lpf_cutoff, btype="low", fs=self.sample_rate)
        b = b * (a.sum() / b.sum())
        return b, a

    @property
    def quiet_samples_needed(self) -> int:
        return int(round(self.bypass_cycles * self.sample_rate / self.f0))


@dataclass(frozen=True)
class ControllerState:
    lpf_state: tuple[float, float] = (0.0, 0.0)
    kf_state: KfState = field(default_factory=KfState)
    gate_on: bool = True
    vcb_closed: bool = False
    quiet_samples: int = 0

    @classmethod
    def initial(cls, config: ControllerConfig) -> "ControllerState":
        return cls(kf_state=KfState.initial(config.kf_sigma))


def lpf_step(config: ControllerConfig, state: ControllerState, raw: float, coeffs=None) -> tuple[ControllerState, float]:
    """One sample of the anti-noise low-pass filter (transposed direct form II)."""
    b, a = coeffs if coeffs is not None else config.lpf_coefficients
    z1, z2 = state.lpf_state
    y = b[0] * raw + z1
    z1 = b[1] * raw - a[1] * y + z2
    z2 = b[2] * raw - a[2] * y
    return replace(state, lpf_state=(float(z1), float(z2))), float(y)


def gate_decision(abs_residual: float, i_th: float, vcb_closed: bool) -> bool:
    # ties conduct
    return vcb_closed or abs_residual <= i_th


def controller_step(config: ControllerConfig, state: ControllerState, raw: float, coeffs=None, model=None):
    """Advance the control law by one sample of the measured current.

    Returns ``(state, gate_on, vcb_closed, diagnostics)`` where diagnostics
    holds the filtered sample, the estimate and the residual.
    """
    state, filtered = lpf_step(config, state, raw, coeffs)
    kf_state, estimate = kf_update(model or config.kf_model, state.kf_state, filtered)
    res = residual(filtered, estimate)
    quiet = abs(res) <= config.i_th
    quiet_samples = state.quiet_samples + 1 if quiet else 0
    vcb = state.vcb_closed or quiet_samples >= config.quiet_samples_needed
    gate_on = gate_decision(abs(res), config.i_th, vcb)
    state = replace(state, kf_state=kf_state, gate_on=gate_on, vcb_closed=vcb, quiet_samples=quiet_samples)
    return state, gate_on, vcb, dict(filtered=filtered, estimate=estimate, residual=res)


class SsiclController:
    """Stateful wrapper that :func:`ssicl.circuit.run` polls at ``sample_rate``.

    Optional white measurement noise of ``noise_rms`` amperes is added to
    every raw sample, drawn from a generator seeded with ``seed``.
    """

    def __init__(self, config: ControllerConfig, noise_rms: float = 0.0, seed: int = 0):
        self.config = config
        self.state = ControllerState.initial(config)
        self.noise_rms = noise_rms
        self._rng = np.random.default_rng(seed)
        self._coeffs = config.lpf_coefficients
        self._model = config.kf_model

    @property
    def sample_rate(self) -> float:
        return self.config.sample_rate

    def sample(self, current: float):
        raw = current
        if self.noise_rms > 0:
            raw += self.noise_rms * float(self._rng.standard_normal())
        self.state, gate_on, vcb, diag = controller_step(
            self.config, self.state, raw, self._coeffs, self._model
        )
        return gate_on, vcb, diag


def size_limiter_resistor(l_total: float, k: float, period: float, v_peak: float, z: float, i2: float) -> float:
    """Limiter resistance from the analytic sizing rule ``(L/kT) ln(Vm / (Z i2 - Vm))``.

    Advisory only: the rule returns zero at ``i2 = 2 Vm/Z`` and negative
    values above it, so any sizing must be confirmed by simulation.
    """
    if not 0 < k <= 1:
        raise ValueError(f"k must lie in (0, 1], got {k}")
    if not z * i2 > v_peak:
        raise ValueError(f"sizing rule undefined for i2 = {i2}: requires Z*i2 > V_m")
    r = l_total / (k * period) * math.log(v_peak / (z * i2 - v_peak))
    if r <= 0:
        warnings.warn(f"sizing rule gives non-positive resistance {r:.4g} ohm", RuntimeWarning, stacklevel=2)
    return r


def three_phase_run(run_phase, configs, scenarios, parallel: bool = True):
    """Run three independent single-phase closed loops.

    ``run_phase(config, scenario)`` executes one phase. Results come back
    in input order; an exception in one phase is returned in its slot and
    does not stop the others.
    """
    configs, scenarios = list(configs), list(scenarios)
    if len(configs) != 3 or len(scenarios) != 3:
        raise ValueError("three_phase_run needs exactly three configs and three scenarios")

    def one(pair):
        try:
            return run_phase(*pair)
        except Exception as exc:  # reported per phase
            return exc

    pairs = list(zip(configs, scenarios))
    if not parallel:
        return [one(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=3) as pool:
        return list(pool.map(one, pairs))
