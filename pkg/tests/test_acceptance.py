"""Acceptance criteria, one test each, at the default parameter values.

Each test prints a single ``CRITERION n: PASS|FAIL ...`` line (visible even
without ``-s``) and then asserts.  Run just this module with

    pytest tests/test_acceptance.py -v
"""

import json
import math
import sys

import numpy as np
import pytest

from loopysim.analysis import count_lobes, turning_distance
from loopysim.cli import main as cli_main
from loopysim.core_rd import MorphogenState, ReactionParams, RingSpec, advance, init_state, ring_laplacian
from loopysim.experiments import (
    SweepConfig,
    TrajectorySchedule,
    TrajectorySegment,
    default_schedule,
    hysteresis_report,
    run_sweep,
    run_trajectory,
    run_trial,
)
from loopysim.analysis import MIN_LOBE_AMPLITUDE
from loopysim.geometry import TWO_PI, closure_residual, project_to_closure, reconstruct_polygon
from loopysim.outputs import sha256

from .oracles import brute_self_intersects, harmonic_argmax, lagrange_projection, turning_distance_loop

pytestmark = pytest.mark.acceptance

BASE = ReactionParams(alpha=0.001, beta=225.0, gamma_pas=50.0, gamma_act=1.0, lam=50.0)
RING = RingSpec(n_cells=36)
SIGMA = 0.001


def _verdict(capsys, n, ok, detail):
    with capsys.disabled():
        sys.stdout.write(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}\n")
    assert ok, f"criterion {n}: {detail}"


def _transitions(values, counts):
    """(value, old, new) wherever the count changes along the ramp."""
    return [(v, a, b) for v, a, b in zip(values[1:], counts[:-1], counts[1:]) if a != b]


def test_criterion_1_transition_thresholds(capsys):
    ramp = [round(0.2 + 0.1 * k, 1) for k in range(26)]  # 0.2 .. 2.7
    sched = TrajectorySchedule([TrajectorySegment("gamma_act", g) for g in ramp])
    record = run_trajectory(sched, BASE, RING, seed=0, noise_sigma=SIGMA, stride=1000)
    counts = [s["lobe_count"] for s in record.segments]
    trans = _transitions(ramp, counts)
    distinct = [counts[0]] + [b for _, _, b in trans]
    decreasing = all(b < a for a, b in zip(distinct, distinct[1:])) and len(distinct) > 1
    five_four = [v for v, a, b in trans if a == 5 and b == 4]
    to_three = [v for v, a, b in trans if b == 3]
    ok = (
        decreasing
        and any(0.4 <= v <= 1.2 for v in five_four)
        and any(0.9 <= v <= 2.7 for v in to_three)
    )
    _verdict(
        capsys,
        1,
        ok,
        f"lobe counts along gamma_act ramp {dict(zip(ramp, counts))}; transitions {trans} "
        f"(need strictly decreasing, 5->4 in [0.4, 1.2], ->3 in [0.9, 2.7])",
    )


def test_criterion_2_hysteresis(capsys):
    record = run_trajectory(default_schedule(), BASE, RING, seed=0, noise_sigma=SIGMA, stride=1000)
    rep = hysteresis_report(record)
    floor = rep["shape_noise_floor"]
    dist = rep["initial_final_turning_distance"]
    ok = rep["initial_lobe_count"] != rep["final_lobe_count"] and dist > 10.0 * floor
    _verdict(
        capsys,
        2,
        ok,
        f"lobes {rep['initial_lobe_count']} -> {rep['final_lobe_count']} over "
        f"{[s['value'] for s in rep['segments']]}; turning distance {dist:.3e} vs 10 x noise floor "
        f"{10 * floor:.3e}",
    )


def test_criterion_3_multistability(capsys):
    cfg = SweepConfig(
        ("lam", list(np.linspace(25.0, 250.0, 10))),
        ("gamma_act", list(np.linspace(0.2, 2.0, 10))),
        fixed=BASE,
        trials=10,
        spec=RING,
        noise_sigma=SIGMA,
    )
    res = run_sweep(cfg)
    multi = [(p.axis1_value, p.axis2_value, sorted(set(p.lobe_counts))) for p in res.rows() if len(set(p.lobe_counts)) >= 2]
    seen = sorted({k for p in res.rows() for k in p.lobe_counts})
    _verdict(
        capsys,
        3,
        bool(multi),
        f"{len(multi)} of 100 (lam, gamma_act) points show >= 2 lobe counts over 10 seeds; "
        f"lobe counts seen anywhere: {seen}; first: {multi[:3]}",
    )


def _median_amplitude(params):
    amps = [run_trial(params, RING, seed, noise_sigma=SIGMA, record_samples=False)[0].amplitude for seed in range(10)]
    return float(np.median(amps))


def test_criterion_4_amplitude_trends(capsys):
    betas = [100.0, 225.0, 300.0]
    lams = [50.0, 100.0, 250.0]
    by_beta = [_median_amplitude(BASE.with_(beta=b)) for b in betas]
    by_lam = [_median_amplitude(BASE.with_(lam=l)) for l in lams]
    beta_down = all(b < a for a, b in zip(by_beta, by_beta[1:]))
    lam_up = all(b > a for a, b in zip(by_lam, by_lam[1:]))
    # a trend among residual-noise amplitudes is not a pattern trend
    patterned = max(by_beta) >= MIN_LOBE_AMPLITUDE and max(by_lam) >= MIN_LOBE_AMPLITUDE
    ok = beta_down and lam_up and patterned
    _verdict(
        capsys,
        4,
        ok,
        "median amplitude over beta " + ", ".join(f"{b:g}:{a:.3e}" for b, a in zip(betas, by_beta))
        + f" (decreasing={beta_down}); over lam " + ", ".join(f"{l:g}:{a:.3e}" for l, a in zip(lams, by_lam))
        + f" (increasing={lam_up}); patterned (max >= {MIN_LOBE_AMPLITUDE:g})={patterned}",
    )


def test_criterion_5_conservation(capsys):
    state = init_state(RING, noise_sigma=SIGMA, seed=0)
    total = state.q_pas.sum()
    worst_pas = 0.0
    for _ in range(200):
        state = advance(state, BASE, RING, 1000)
        worst_pas = max(worst_pas, abs(state.q_pas.sum() - total))

    rng = np.random.default_rng(1)
    diff_only = BASE.with_(reactions=False)
    s0 = MorphogenState(rng.normal(size=36), rng.normal(size=36), rng.normal(size=36))
    sums = np.array([s0.q_pas.sum(), s0.q_act.sum(), s0.q_inh.sum()])
    s1 = advance(s0, diff_only, RING, 200_000)
    worst_diff = float(np.abs(np.array([s1.q_pas.sum(), s1.q_act.sum(), s1.q_inh.sum()]) - sums).max())

    worst_lap = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 200))
        v = rng.normal(size=n)
        worst_lap = max(worst_lap, abs(ring_laplacian(v, 1.0).sum()))
    ok = worst_pas <= 1e-9 and worst_diff <= 1e-9 and worst_lap < 1e-12
    _verdict(
        capsys,
        5,
        ok,
        f"max |d sum q_pas| {worst_pas:.2e} over 2e5 steps; diffusion-only max drift {worst_diff:.2e}; "
        f"max |sum L(v)| {worst_lap:.2e} over 1000 arrays",
    )


def test_criterion_6_geometry(capsys):
    rng = np.random.default_rng(6)
    worst_sum = worst_res = 0.0
    for _ in range(1000):
        theta = TWO_PI / 12 + rng.normal(0.0, 0.2, 12)
        x = project_to_closure(theta)
        worst_sum = max(worst_sum, abs(x.sum() - TWO_PI))
        worst_res = max(worst_res, float(np.hypot(*closure_residual(x))))
    worst_oracle = 0.0
    for n in (4, 5, 6):
        for _ in range(30):
            theta = TWO_PI / n + rng.normal(0.0, 0.05, n)
            worst_oracle = max(worst_oracle, float(np.abs(project_to_closure(theta) - lagrange_projection(theta)).max()))
    mismatches = 0
    for _ in range(1000):
        theta = rng.normal(TWO_PI / 12, 0.6, 12)
        mismatches += reconstruct_polygon(theta).self_intersects != brute_self_intersects(theta)
    ok = worst_sum <= 1e-9 and worst_res <= 1e-9 and worst_oracle <= 1e-6 and mismatches == 0
    _verdict(
        capsys,
        6,
        ok,
        f"projection: max |sum-2pi| {worst_sum:.2e}, max |closure| {worst_res:.2e}; "
        f"oracle gap {worst_oracle:.2e} at N=4,5,6; self-intersection mismatches {mismatches}/1000",
    )


def test_criterion_7_metric(capsys):
    rng = np.random.default_rng(7)

    def closed():
        t = rng.normal(0.0, 0.3, 12)
        return t - t.mean() + TWO_PI / 12

    worst_id = worst_sym = worst_tri = worst_oracle = 0.0
    for _ in range(500):
        a, b, c = closed(), closed(), closed()
        ab, ba = turning_distance(a, b), turning_distance(b, a)
        worst_id = max(worst_id, turning_distance(a, a))
        worst_sym = max(worst_sym, abs(ab - ba))
        worst_tri = max(worst_tri, turning_distance(a, c) - ab - turning_distance(b, c))
        worst_oracle = max(worst_oracle, abs(ab - turning_distance_loop(a, b)))
    ok = worst_id <= 1e-12 and worst_sym <= 1e-12 and worst_tri <= 1e-9 and worst_oracle <= 1e-12
    _verdict(
        capsys,
        7,
        ok,
        f"identity {worst_id:.1e}, symmetry {worst_sym:.1e}, triangle excess {worst_tri:.1e}, "
        f"oracle gap {worst_oracle:.1e} over 500 triples",
    )


def test_criterion_8_thread_determinism(capsys, tmp_path):
    cfg = {
        "params": {"beta": 20.0, "gamma_act": 1.0, "lam": 50.0},
        "steady_state": {"deriv_tol": 1e-5, "hold_steps": 200, "max_steps": 20000},
        "sweep": {
            "axis1": {"name": "lam", "values": [30.0, 50.0, 80.0]},
            "axis2": {"name": "gamma_act", "values": [0.6, 1.0, 1.6]},
            "trials": 3,
            "base_seed": 11,
        },
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    codes = [
        cli_main(["sweep", "--config", str(path), "--out", str(tmp_path / f"t{n}"), "--threads", str(n), "--no-figures"])
        for n in (1, 8)
    ]
    h1, h8 = sha256(tmp_path / "t1" / "sweep.csv"), sha256(tmp_path / "t8" / "sweep.csv")
    ok = codes == [0, 0] and h1 == h8
    _verdict(capsys, 8, ok, f"exit codes {codes}; sweep.csv sha256 threads=1 {h1[:12]} threads=8 {h8[:12]}")


def test_criterion_9_lobe_counter(capsys):
    n = 36
    m = np.arange(n)
    rng = np.random.default_rng(9)
    failures = []
    for k in range(1, 10):
        clean = np.sin(2 * math.pi * k * m / n)
        cases = [clean] + [clean + rng.normal(0.0, 0.01, n) for _ in range(20)]
        for q in cases:
            got, want = count_lobes(q), harmonic_argmax(q.tolist())
            if got != want:
                failures.append((k, got, want))
    _verdict(capsys, 9, not failures, f"wavenumbers 1..9, clean + 20 noisy each: {len(failures)} disagreements {failures[:5]}")
