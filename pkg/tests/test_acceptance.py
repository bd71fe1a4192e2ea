"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line with the measured values; the
same lines are repeated in the terminal summary. Criteria that the model
cannot physically meet are still checked at full strength and fail.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import L_MAG, switch_schedule
from ssicl.circuit import run
from ssicl.core import SaturableCore, core_from_nameplate
from ssicl.kalman import KfState, kf_run
from ssicl.oracles import dense_kf_reference, read_golden
from ssicl.scenario import (
    LAB_NAMEPLATE,
    emit_report,
    load_report,
    run_paired,
    run_scenario,
    run_three_phase,
    sweep,
    lab_scenario,
    three_phase_scenarios,
)

GOLDEN = Path(__file__).parent / "golden"
RESULTS: list[str] = []

UNLIMITED_TARGET = 25.0
LIMITED_MAX = 3.0
RATIO_MIN = 8.0


def report(capsys, number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} -- {detail}"
    RESULTS.append(line)
    with capsys.disabled():
        print("\n" + line)
    return ok


def on_fractions(rec, f0):
    n = int(round(rec.sample_rate / f0))
    g = rec["gate"]
    return np.array([g[k:k + n].mean() for k in range(0, len(g) - n + 1, n)])


@pytest.fixture(scope="module")
def worst_pair():
    s = lab_scenario(0.0, 0.8)
    t0 = time.perf_counter()
    pair, rec_l, rec_u = run_paired(s)
    return pair, rec_l, rec_u, time.perf_counter() - t0


def test_criterion_1_closed_form_equivalence(capsys):
    case, times = read_golden(GOLDEN / "eq12_off_on_cycle.csv")
    p = lab_scenario().circuit
    core = SaturableCore(L_MAG, L_MAG, 1.0, 0.0, math.inf)
    dt = 5e-6
    t0 = time.perf_counter()
    rec = run(p, core, switch_schedule([tuple(e) for e in case.inputs["switching"]], dt), 0.1, dt, 100e3)
    elapsed = time.perf_counter() - t0
    scale = p.v_peak / math.hypot(p.series_r, p.omega * case.inputs["l"])
    err = float(np.max(np.abs(rec["line_current"] - case.expected))) / scale
    ok = err < 0.005 and elapsed < 2.0 and len(rec) == len(times)
    report(capsys, 1, "closed-form equivalence", ok,
           f"max error {err:.2e} of Vm/Z (limit 5e-3) over 5 cycles with an off/on gate cycle; runtime {elapsed:.2f} s (limit 2 s)")
    assert ok


def test_criterion_2_kf_convergence_and_fidelity(capsys):
    fs, f0 = 10e3, 50.0
    cfg = lab_scenario().controller
    model = cfg.kf_model
    n = np.arange(int(0.1 * fs))
    y = np.cos(2 * math.pi * f0 / fs * n)
    est = kf_run(model, y, KfState.initial(cfg.kf_sigma))
    last = int(round(fs / f0))
    amp_err = abs(np.max(np.abs(est[-last:])) - 1.0)

    rng = np.random.default_rng(0)
    noisy = np.cos(2 * math.pi * f0 / fs * np.arange(10_000) + 0.3) + 0.2 * rng.normal(size=10_000)
    p0 = cfg.kf_sigma ** 2 * np.eye(2)
    fast = kf_run(model, noisy, KfState(np.zeros(2), p0))
    dense = dense_kf_reference(model.omega0, model.q, model.r, noisy, p0=p0)
    fidelity = float(np.max(np.abs(fast - dense) / np.maximum(np.abs(dense), 1e-300)))
    fidelity_ok = np.allclose(fast, dense, rtol=1e-9, atol=1e-9 * np.max(np.abs(dense)))

    c = 37.0
    scaled = kf_run(replace(model, q=c * model.q, r=c * model.r), noisy, KfState(np.zeros(2), c * p0))
    inv = float(np.max(np.abs(scaled - fast)) / np.max(np.abs(fast)))

    ok = amp_err < 0.01 and fidelity_ok and inv < 1e-9
    report(capsys, 2, "Kalman convergence and reference fidelity", ok,
           f"amplitude error at 0.1 s {amp_err:.2e} (limit 1e-2); dense-reference max rel diff {fidelity:.1e} "
           f"(limit 1e-9, abs floor 1e-9 of peak); q/r invariance {inv:.1e} (limit 1e-9)")
    assert ok


def test_criterion_3_unlimited_severity(capsys, worst_pair):
    pair = worst_pair[0]
    unlimited = pair.unlimited.first_peak
    _, benign = run_scenario(lab_scenario(90.0, 0.0, controlled=False))
    in_band = abs(unlimited - UNLIMITED_TARGET) <= 0.3 * UNLIMITED_TARGET
    benign_ok = benign.first_peak <= 2.0 * benign.steady_peak
    ok = in_band and benign_ok
    report(capsys, 3, "unlimited inrush severity", ok,
           f"worst-case first peak {unlimited:.2f} A (target 25 A +-30%, calibration target); "
           f"benign first/steady {benign.first_peak:.2f}/{benign.steady_peak:.2f} A (limit 2x)")
    assert ok


def test_criterion_4_limiting_ratio(capsys, worst_pair):
    pair, _, _, elapsed = worst_pair
    limited, ratio = pair.limited.first_peak, pair.limiting_ratio
    ok = limited <= LIMITED_MAX and ratio >= RATIO_MIN and elapsed < 5.0
    report(capsys, 4, "limiting ratio", ok,
           f"limited first peak {limited:.2f} A (limit 3 A), unlimited {pair.unlimited.first_peak:.2f} A, "
           f"ratio {ratio:.2f} (limit >= 8); pair runtime {elapsed:.2f} s (limit 5 s)")
    assert ok


def test_criterion_5_settling_and_bypass(capsys, worst_pair):
    pair, rec, _, _ = worst_pair
    m = pair.limited
    f0 = lab_scenario().circuit.f0
    settle_ok = m.settle_time is not None and m.settle_time <= 0.06
    frac = on_fractions(rec, f0)
    after = frac[1:]
    monotone_ok = bool(np.all(np.diff(after) >= -0.05))
    bypass_ok = m.bypass_time is not None and m.bypass_time <= 10 / f0
    idle_ok = False
    if m.bypass_time is not None:
        k = int(np.argmax(rec["vcb"] > 0.5))
        idle_ok = bool(np.all(rec["limiter_current"][k + 1:] == 0.0))
    ok = settle_ok and monotone_ok and bypass_ok and idle_ok
    settle = "never" if m.settle_time is None else f"{m.settle_time:.3f} s"
    report(capsys, 5, "settling and bypass", ok,
           f"settle {settle} (limit 0.06 s) {'ok' if settle_ok else 'FAIL'}; "
           f"ON fraction per cycle {np.round(frac[:6], 2).tolist()} non-decreasing after cycle 1 {'ok' if monotone_ok else 'FAIL'}; "
           f"VCB at {m.bypass_time} s (limit 0.2 s) {'ok' if bypass_ok else 'FAIL'}; "
           f"limiter idle after VCB {'ok' if idle_ok else 'FAIL'}")
    assert ok


def test_criterion_6_monotone_in_limiter(capsys):
    peaks = []
    for r in (5.0, 10.0, 20.0, 40.0):
        _, m = run_scenario(lab_scenario(0.0, 0.8).with_(limiter_r=r))
        peaks.append(m.first_peak)
    ok = all(b <= a for a, b in zip(peaks, peaks[1:]))
    report(capsys, 6, "monotone in limiter resistance", ok,
           "limited first peak at 5/10/20/40 ohm: " + " / ".join(f"{p:.2f}" for p in peaks) + " A")
    assert ok


def test_criterion_7_conservation_and_numerics(capsys, worst_pair):
    _, rec, _, _ = worst_pair
    rated = LAB_NAMEPLATE.rated_va / LAB_NAMEPLATE.v_primary * math.sqrt(2.0)
    parts = sum(rec[c] for c in ("switch_current", "limiter_current", "snubber_current", "mov_current", "bypass_current"))
    kcl = float(np.max(np.abs(parts - rec["line_current"]))) / rated

    s = lab_scenario(0.0, 0.0, controlled=False)
    p = s.circuit
    core = core_from_nameplate(LAB_NAMEPLATE, 1.15, 1.0, 0.0)
    dt = 5e-6
    lin = run(p, core, True, 0.1, dt, 1 / dt)
    i, v = lin["line_current"], lin["source_v"]
    source = np.trapezoid(v * i, dx=dt)
    lost = np.trapezoid(p.series_r * i * i + lin["mag_v"] ** 2 / core.core_loss_r
                        + p.snubber_r * lin["snubber_current"] ** 2, dx=dt)
    stored = 0.5 * p.series_l * i[-1] ** 2 + 0.5 * lin["core_flux"][-1] ** 2 / core.l_unsat
    energy = abs(source - lost - stored) / source

    base = lab_scenario(0.0, 0.8)
    a, _ = run_scenario(base)
    b, _ = run_scenario(replace(base, dt=base.dt / 2))
    rms = float(np.sqrt(np.mean((a["line_current"] - b["line_current"]) ** 2) / np.mean(a["line_current"] ** 2)))

    ok = kcl < 1e-6 and energy < 1e-3 and rms < 1e-3
    report(capsys, 7, "conservation and numerics", ok,
           f"KCL residual {kcl:.1e} of rated (limit 1e-6); energy balance {energy:.1e} (limit 1e-3); "
           f"dt-halving RMS change {rms:.1e} (limit 1e-3, controlled worst case)")
    assert ok


def test_criterion_8_sweep(capsys):
    s = lab_scenario(0.0, 0.8)
    angles = [18.0 * k for k in range(20)]
    remnants = [0.1 * k for k in range(10)]
    t0 = time.perf_counter()
    rep = sweep(s, angles, remnants, paired=True, workers=1)
    elapsed = time.perf_counter() - t0
    text = emit_report(rep)
    rows, footer = load_report(text)

    probe = [0, 57, 123, 199]
    again = [sweep(s, [rep.cells[k].angle_deg], [rep.cells[k].remnant_pu], paired=True).cells[0] for k in probe]
    deterministic = all(a == rep.cells[k] for a, k in zip(again, probe)) and text == emit_report(rep)

    worst = min(rep.cells, key=lambda c: c.limiting_ratio if c.limiting_ratio is not None else math.inf)
    ratio = rep.min_limiting_ratio
    ok = (len(rows) == 200 and rep.failures == 0 and deterministic and ratio is not None
          and ratio >= RATIO_MIN and elapsed < 600)
    report(capsys, 8, "200-cell paired sweep", ok,
           f"{len(rows)} rows, {rep.failures} failures, deterministic {'yes' if deterministic else 'NO'}, "
           f"min limiting ratio {footer['min_limiting_ratio'][:6]} (limit >= 8) at {worst.angle_deg:.0f} deg / "
           f"{worst.remnant_pu:.1f} pu; runtime {elapsed:.0f} s (limit 600 s)")
    assert ok


def test_criterion_9_three_phase(capsys):
    scen = three_phase_scenarios(lab_scenario(0.0, 0.8))
    cfgs = [sc.controller for sc in scen]
    out = run_three_phase(scen, cfgs, paired=True)
    per_phase = []
    for pair, _, _ in out:
        per_phase.append((pair.limited.first_peak, pair.unlimited.first_peak, pair.limiting_ratio))
    phases_ok = all(lim <= LIMITED_MAX and ratio >= RATIO_MIN for lim, _, ratio in per_phase)

    varied = [replace(c, i_th=v) for c, v in zip(cfgs, (0.6, 0.8, 1.2))]
    short = [replace(sc, duration=0.1) for sc in scen]
    perm = [1, 2, 0]
    base = run_three_phase(short, varied)
    permuted = run_three_phase([short[k] for k in perm], [varied[k] for k in perm])
    perm_ok = all(
        all(np.array_equal(permuted[j][0][ch], base[k][0][ch]) for ch in base[k][0].channels)
        for j, k in enumerate(perm)
    )
    ok = phases_ok and perm_ok
    report(capsys, 9, "three-phase independence", ok,
           "per phase limited/unlimited/ratio: "
           + "; ".join(f"{a:.2f}/{b:.2f} A/{r:.2f}" for a, b, r in per_phase)
           + f" (limits 3 A, >= 8); permutation exact {'yes' if perm_ok else 'NO'}")
    assert ok
