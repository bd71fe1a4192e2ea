"""Regenerate the closed-form golden series (uses ssicl.oracles only)."""

import math
from pathlib import Path

import numpy as np

from ssicl.oracles import OracleCase, eq1_eq2_reference, write_golden

HERE = Path(__file__).parent

V_PEAK = 220.0 * math.sqrt(2.0)
F0 = 50.0
R_SERIES = 1.0 + 1.13
L_SERIES = 5e-3 + 2.2 / (2.0 * math.pi * F0)
L_MAG = 169.0 / (2.0 * math.pi * F0)
R_LIMITER = 10.0

CASES = {
    "eq12_on_off_7ms": [(0.007, False)],
    "eq12_off_on_cycle": [(0.047, False), (0.057, True)],
}


def build(name, switching):
    times = np.arange(10000) / 100e3
    inputs = dict(
        v_peak=V_PEAK, f0=F0, r_on=R_SERIES, r_off=R_SERIES + R_LIMITER,
        l=L_SERIES + L_MAG, t0=0.0, switching=[list(e) for e in switching],
        times=dict(start=0.0, rate=100e3, count=len(times)),
    )
    expected = eq1_eq2_reference(
        V_PEAK, F0, inputs["r_on"], inputs["r_off"], inputs["l"], times, 0.0, switching
    )
    return OracleCase(name, inputs, expected, tolerance=0.005), times


if __name__ == "__main__":
    for name, sw in CASES.items():
        case, times = build(name, sw)
        write_golden(HERE / f"{name}.csv", case, times)
        print("wrote", name, case.input_hash)
