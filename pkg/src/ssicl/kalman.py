"""Kalman filter for the fundamental component of a sampled current.

The fundamental ``s_n = a cos(w0 n + phase)`` obeys the recursion
``s_{n+1} = 2 cos(w0) s_n - s_{n-1}``; the filter state is
``[s_n, s_{n-1}]`` with process noise entering the first component only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class FilterError(ArithmeticError):
    """The innovation variance became non-positive (corrupted covariance)."""


@dataclass(frozen=True)
class KfModel:
    """Sinusoid state-space model.

    Only the ratio ``q / r`` shapes the estimate; a larger ratio gives a
    faster, more measurement-driven filter.
    """

    omega0: float
    q: float
    r: float = 1.0
    sample_rate: float = 10e3

    def __post_init__(self):
        if not 0 < self.omega0 < math.pi:
            raise ValueError(f"omega0 must lie in (0, pi), got {self.omega0}")
        if not self.q >= 0:
            raise ValueError("q must be non-negative")
        if not self.r > 0:
            raise ValueError("r must be positive")

    @classmethod
    def for_frequency(cls, f0: float, sample_rate: float, q: float, r: float = 1.0) -> "KfModel":
        return cls(omega0=2.0 * math.pi * f0 / sample_rate, q=q, r=r, sample_rate=sample_rate)

    @property
    def m(self) -> np.ndarray:
        return np.array([[2.0 * math.cos(self.omega0), -1.0], [1.0, 0.0]])

    @property
    def b(self) -> np.ndarray:
        return np.array([1.0, 0.0])

    @property
    def h(self) -> np.ndarray:
        return np.array([1.0, 0.0])


@dataclass(frozen=True)
class KfState:
    """A-priori state estimate and covariance for the next measurement."""

    x_hat: np.ndarray = field(default_factory=lambda: np.zeros(2))
    p: np.ndarray = field(default_factory=lambda: np.eye(2))

    @classmethod
    def initial(cls, sigma: float) -> "KfState":
        """Zero state with an isotropic prior of standard deviation ``sigma``."""
        return cls(np.zeros(2), sigma * sigma * np.eye(2))


def kf_update(model: KfModel, state: KfState, y: float, joseph: bool = False) -> tuple[KfState, float]:
    """Consume measurement ``y``; return the projected state and the estimate.

    The estimate is the a-posteriori fundamental sample. ``joseph`` selects
    the Joseph-form covariance update instead of ``P - K h' P``.
    """
    x0, x1 = float(state.x_hat[0]), float(state.x_hat[1])
    p00, p01, p10, p11 = (float(v) for v in state.p.ravel())
    s = p00 + model.r
    if not s > 0:
        raise FilterError(f"innovation variance {s!r} is not positive")
    k0 = p00 / s
    k1 = p10 / s
    innov = y - x0
    x0 += k0 * innov
    x1 += k1 * innov
    if joseph:
        # (I - K h') P (I - K h')' + r K K'
        a00, a10 = 1.0 - k0, -k1
        t00 = a00 * p00
        t01 = a00 * p01
        t10 = a10 * p00 + p10
        t11 = a10 * p01 + p11
        q00 = t00 * a00 + model.r * k0 * k0
        q01 = t00 * a10 + t01 + model.r * k0 * k1
        q11 = t10 * a10 + t11 + model.r * k1 * k1
    else:
        q00 = p00 - k0 * p00
        q01 = 0.5 * ((p01 - k0 * p01) + (p10 - k1 * p00))
        q11 = p11 - k1 * p01
    estimate = x0

    c = 2.0 * math.cos(model.omega0)
    nx0 = c * x0 - x1
    nx1 = x0
    # M P M' + q b b'
    n00 = c * c * q00 - 2.0 * c * q01 + q11 + model.q
    n01 = c * q00 - q01
    n11 = q00
    new = KfState(np.array([nx0, nx1]), np.array([[n00, n01], [n01, n11]]))
    return new, estimate


def kf_run(model: KfModel, samples, state: KfState | None = None) -> np.ndarray:
    """Estimates after each sample of ``samples`` (same length)."""
    if state is None:
        state = KfState()
    samples = np.asarray(samples, dtype=float)
    out = np.empty(len(samples))
    for n, y in enumerate(samples):
        try:
            state, out[n] = kf_update(model, state, float(y))
        except FilterError as exc:
            raise FilterError(f"sample {n}: {exc}") from exc
    return out


def residual(s_f: float, estimate: float) -> float:
    """Filtered measurement minus its fundamental estimate."""
    return s_f - estimate


def steady_gain(model: KfModel, tol: float = 1e-14, max_iter: int = 1_000_000) -> np.ndarray:
    """Converged filter gain, by iterating the covariance recursion."""
    p = np.eye(2)
    st = KfState(np.zeros(2), p)
    k = np.zeros(2)
    for _ in range(max_iter):
        k_new = st.p[:, 0] / (st.p[0, 0] + model.r)
        st, _ = kf_update(model, st, 0.0)
        if np.max(np.abs(k_new - k)) < tol:
            return k_new
        k = k_new
    return k
