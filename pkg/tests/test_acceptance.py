"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from epipolar_ihls.benchmark import ExperimentConfig, run_benchmark
from epipolar_ihls.cli import main as cli_main
from epipolar_ihls.geometry import build_observation_matrix, canonicalize_f, normalize
from epipolar_ihls.gradcheck import run_gradcheck
from epipolar_ihls.ihls import IhlsConfig, eight_point, ihls_solve, solve_fundamental
from epipolar_ihls.implicit_grad import Theta, kkt_residual
from epipolar_ihls.metrics import pose_auc, pose_error, sampson_distance, symmetric_epipolar_distance
from epipolar_ihls.pose import recover_pose
from epipolar_ihls.robust_loss import RobustParams, optimal_beta, psi_majorizer, rho
from epipolar_ihls.synth import SceneConfig, generate_scene

RESULTS = []


def report(name, ok, detail, elapsed, limit=None):
    within = limit is None or elapsed < limit
    budget = f" (limit {limit:g} s)" if limit is not None else ""
    line = f"{'PASS' if ok and within else 'FAIL'}  {name}: {detail}; {elapsed:.2f} s{budget}"
    RESULTS.append(line)
    print(line)
    return ok and within


def contaminated(seed):
    return generate_scene(SceneConfig(n_points=200, noise_px=1.0, outlier_fraction=0.4, seed=seed))


def criterion_majorizer():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 10_000
    xs = rng.normal(size=n) * 10.0 ** rng.uniform(-3, 3, n)
    betas = 10.0 ** rng.uniform(-3, 3, n)
    ps = 1.0 - rng.uniform(size=n)  # (0, 1]
    epss = 10.0 ** rng.uniform(-8, 1, n)
    fs = rng.normal(size=(1000, 5)) * 10.0 ** rng.uniform(-3, 3, (1000, 5))
    worst_lp = worst_gamma = np.inf
    worst_tight = 0.0
    for k in range(n):
        x, beta, p, eps = xs[k], betas[k], ps[k], epss[k]
        # pointwise bound |x|^p <= psi with eps -> 0
        lhs = abs(x) ** p
        rhs = psi_majorizer([x], [beta], RobustParams(p, 1e-300))
        worst_lp = min(worst_lp, (rhs - lhs) / max(lhs, rhs))
        params = RobustParams(p, eps)
        lhs = rho([x], params)
        rhs = psi_majorizer([x], [beta], params)
        worst_gamma = min(worst_gamma, (rhs - lhs) / max(lhs, rhs))
        if k < 1000:
            f = fs[k]
            tight = psi_majorizer(f, optimal_beta(f, eps), params)
            worst_tight = max(worst_tight, abs(tight - rho(f, params)) / rho(f, params))
    ok = worst_lp >= -1e-12 and worst_gamma >= -1e-12 and worst_tight <= 1e-12
    detail = (f"min relative slack {worst_lp:.1e} (eps->0), {worst_gamma:.1e} (eps>0); "
              f"max tightness error {worst_tight:.1e}")
    return report("majorizer sweep", ok, detail, time.perf_counter() - t0, limit=1.0)


def criterion_descent():
    t0 = time.perf_counter()
    config = IhlsConfig()
    monotone = 0
    kkt_ok = 0
    worst_g = 0.0
    for seed in range(100):
        normed, _, _ = normalize(contaminated(seed).correspondences)
        A = build_observation_matrix(normed)
        res = ihls_solve(A, config)
        trace = np.array(res.objective_trace)
        monotone += bool(np.all(np.diff(trace) <= 1e-12 * np.abs(trace[1:])))
        g = float(np.abs(kkt_residual(res.f_star, Theta.unweighted(A, config.params))).max())
        worst_g = max(worst_g, g)
        kkt_ok += g < 1e-9 and res.iterations <= 100
    ok = monotone == 100 and kkt_ok == 100
    detail = (f"non-increasing traces {monotone}/100; ||g||_inf < 1e-9 within 100 iterations "
              f"{kkt_ok}/100 (worst {worst_g:.1e})")
    return report("descent", ok, detail, time.perf_counter() - t0, limit=10.0)


def criterion_exact_recovery():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (8, 20, 100):
        for seed in range(20):
            scene = generate_scene(SceneConfig(n_points=n, noise_px=0.0, seed=seed))
            gt = canonicalize_f(scene.f_gt)
            for F in (eight_point(scene.correspondences), solve_fundamental(scene.correspondences)[0]):
                worst = max(worst, float(np.linalg.norm(canonicalize_f(F) - gt)))
    return report("exact recovery", worst < 1e-7, f"max canonical distance {worst:.1e} over 120 solves",
                  time.perf_counter() - t0)


def criterion_gradient():
    t0 = time.perf_counter()
    rep = run_gradcheck(seed=0, instances=20, n=20)
    iters = max(r.get("iteration_independence", np.inf) for r in rep["instances"])
    errs = ", ".join(f"{k} {v:.1e}" for k, v in sorted(rep["max_rel_error"].items()))
    n_pass = sum(r["status"] == "pass" for r in rep["instances"])
    detail = f"{n_pass}/20 instances; max rel error {errs}; k vs k+20 {iters:.1e}"
    return report("gradient fidelity", rep["passed"], detail, time.perf_counter() - t0, limit=30.0)


def criterion_ordering():
    t0 = time.perf_counter()
    res = run_benchmark(ExperimentConfig(trials=100))
    s = res["summary"]
    auc5 = {m: row["auc"]["5"] for m, row in s.items()}
    med = {m: row["median_rot_deg"] for m, row in s.items()}
    others = [m for m in s if m != "oracle"]
    ok = (
        med["ihls"] < med["least-squares"]
        and auc5["ihls"] > auc5["least-squares"]
        and auc5["pipeline"] >= auc5["ihls"]
        and all(auc5["oracle"] >= auc5[m] and med["oracle"] <= med[m] for m in others)
    )
    detail = "; ".join(f"{m} AUC@5 {auc5[m]:.3f} median rot {med[m]:.2f} deg" for m in s)
    return report("robustness ordering", ok, detail, time.perf_counter() - t0, limit=120.0)


def criterion_pose():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        scene = generate_scene(SceneConfig(noise_px=0.0, seed=seed))
        c = scene.correspondences
        pose = recover_pose(scene.f_gt, c.x, c.xp, scene.K_source, scene.K_target)
        worst = max(worst, pose_error(pose.R, pose.t, scene.pose.R, scene.pose.t).max_deg)
    return report("pose round trip", worst < 1e-6, f"max angular error {worst:.1e} deg over 50 scenes",
                  time.perf_counter() - t0)


def criterion_spot_values():
    t0 = time.perf_counter()
    F = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    x, xp = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    got = (sampson_distance(F, x, xp), symmetric_epipolar_distance(F, x, xp), pose_auc([5.0], [10.0])[0])
    ok = got == (0.5, 2.0, 0.5)
    return report("metric spot values", ok, f"sampson {got[0]!r}, symmetric {got[1]!r}, auc {got[2]!r}",
                  time.perf_counter() - t0)


def criterion_determinism():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = tmp / "experiment.json"
        cfg.write_text('{"trials": 5, "seed": 17}')
        codes = [cli_main(["benchmark", "--config", str(cfg), "--out", str(tmp / f"run{k}.json")])
                 for k in range(2)]
        a, b = (tmp / "run0.json").read_bytes(), (tmp / "run1.json").read_bytes()
    ok = codes == [0, 0] and a == b
    return report("benchmark determinism", ok, f"exit codes {codes}, identical bytes {a == b} ({len(a)} B)",
                  time.perf_counter() - t0)


CRITERIA = [
    criterion_majorizer,
    criterion_descent,
    criterion_exact_recovery,
    criterion_gradient,
    criterion_ordering,
    criterion_pose,
    criterion_spot_values,
    criterion_determinism,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.__name__.removeprefix("criterion_"))
def test_acceptance(criterion):
    assert criterion(), RESULTS[-1]


if __name__ == "__main__":
    passed = [c() for c in CRITERIA]
    print(f"{sum(passed)}/{len(passed)} criteria passed")
    sys.exit(0 if all(passed) else 1)
