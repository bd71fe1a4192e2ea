"""Independent reference computations used to check the main build.

Nothing here calls into the integrator or the production filter. The
closed-form currents are re-derived locally and the Kalman reference uses
plain matrix products so it shares no code with :mod:`ssicl.kalman`.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

ORACLE_VERSION = "1"


@dataclass
class OracleCase:
    name: str
    inputs: dict
    expected: np.ndarray
    tolerance: float = 1e-9
    meta: dict = field(default_factory=dict)

    @property
    def input_hash(self) -> str:
        blob = json.dumps(self.inputs, sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _rl_segment(v_peak, omega, r, l, t, ts, i_start):
    z = math.hypot(r, omega * l)
    phi = math.atan2(omega * l, r)
    a = v_peak / z
    return (i_start - a * np.sin(omega * ts - phi)) * np.exp(-(r / l) * (t - ts)) + a * np.sin(omega * t - phi)


def eq1_eq2_reference(
    v_peak: float,
    f0: float,
    r_on: float,
    r_off: float,
    l: float,
    times,
    t0: float,
    switching: list[tuple[float, bool]] = (),
) -> np.ndarray:
    """Piecewise closed-form line current of a switched series R-L circuit.

    The source is ``v_peak sin(2 pi f0 t)``; the switch closes from zero
    current at ``t0``. ``switching`` lists ``(instant, conducting)`` events;
    at each event the current reached so far seeds the next segment, with
    ``r_on`` while conducting and ``r_off`` while blocking.
    """
    omega = 2.0 * math.pi * f0
    times = np.asarray(times, dtype=float)
    out = np.zeros_like(times)
    events = sorted(switching)
    ts, on, i_start = t0, True, 0.0
    bounds = [e[0] for e in events] + [math.inf]
    for k, t_next in enumerate(bounds):
        r = r_on if on else r_off
        mask = (times >= ts) & (times < t_next)
        out[mask] = _rl_segment(v_peak, omega, r, l, times[mask], ts, i_start)
        if k < len(events):
            i_start = float(_rl_segment(v_peak, omega, r, l, np.array([t_next]), ts, i_start)[0])
            ts, on = t_next, events[k][1]
    return out


def dense_kf_reference(omega0: float, q: float, r: float, samples, x0=None, p0=None) -> np.ndarray:
    """Textbook Kalman iteration for the sinusoid model, full-matrix form.

    Gain, measurement update, covariance update ``P - K h' P``, then the
    projection with the sinusoid transition matrix and ``q b b'``.
    """
    m = np.array([[2.0 * math.cos(omega0), -1.0], [1.0, 0.0]])
    b = np.array([[1.0], [0.0]])
    h = np.array([[1.0], [0.0]])
    x = np.zeros((2, 1)) if x0 is None else np.asarray(x0, dtype=float).reshape(2, 1)
    p = np.eye(2) if p0 is None else np.asarray(p0, dtype=float)
    out = []
    for y in np.asarray(samples, dtype=float):
        k = p @ h / (h.T @ p @ h + r)
        x = x + k @ (y - h.T @ x)
        p = p - k @ h.T @ p
        out.append(float((h.T @ x)[0, 0]))
        x = m @ x
        p = m @ p @ m.T + q * (b @ b.T)
    return np.array(out)


def write_golden(path, case: OracleCase, times=None) -> None:
    buf = io.StringIO()
    buf.write(f"# oracle_version={ORACLE_VERSION}\n")
    buf.write(f"# name={case.name}\n")
    buf.write(f"# input_hash={case.input_hash}\n")
    buf.write(f"# inputs={json.dumps(case.inputs, sort_keys=True, default=float)}\n")
    buf.write(f"# tolerance={case.tolerance!r}\n")
    if times is None:
        buf.write("n,expected\n")
        for k, v in enumerate(case.expected):
            buf.write(f"{k},{float(v)!r}\n")
    else:
        buf.write("t,expected\n")
        for t, v in zip(times, case.expected):
            buf.write(f"{t:.9f},{float(v)!r}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def read_golden(path) -> tuple[OracleCase, np.ndarray]:
    meta = {}
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = None
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif header is None:
            header = line
        elif line:
            rows.append([float(x) for x in line.split(",")])
    data = np.array(rows)
    case = OracleCase(
        name=meta["name"],
        inputs=json.loads(meta["inputs"]),
        expected=data[:, 1],
        tolerance=float(meta["tolerance"]),
        meta=meta,
    )
    if case.input_hash != meta["input_hash"]:
        raise ValueError(f"{path}: input hash mismatch")
    return case, data[:, 0]
