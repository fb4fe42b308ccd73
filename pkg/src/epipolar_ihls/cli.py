"""Command-line interface: ``synth``, ``solve``, ``benchmark``, ``gradcheck``, ``metrics``.

Structured results go to ``--out`` or stdout as JSON; human-readable
diagnostics go to stderr. Exit codes: 0 success, 1 a check failed,
2 invalid input or configuration, 3 numeric failure.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .benchmark import ExperimentConfig, ihls_config_from_dict, refinement_config_from_dict, run_benchmark
from .exceptions import ConfigError, InvalidInputError, NumericError, PreconditionError
from .geometry import canonicalize_f, f_distance
from .gradcheck import run_gradcheck
from .ihls import eight_point, solve_fundamental
from .metrics import epipolar_loss, pose_error, sampson_distance, symmetric_epipolar_distance
from .pipeline import ransac_eight_point, run_pipeline
from .pose import recover_pose
from .synth import SceneConfig, generate_scene

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("epipolar_ihls")


def _emit(obj, out):
    text = io.dump_json(obj)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)


def _load_config(path):
    return {} if path is None else io.load_json(path)


def cmd_synth(args):
    d = _load_config(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    try:
        config = SceneConfig(**d)
    except TypeError as exc:
        raise ConfigError(f"bad scene config: {exc}") from None
    scene = generate_scene(config)
    if args.out is None:
        raise InvalidInputError("synth needs --out <stem>")
    csv_path, json_path = io.write_scene(scene, args.out)
    log.info("%d pairs, %d outliers", len(scene.correspondences), int((~scene.inlier_mask).sum()))
    sys.stdout.write(io.dump_json({"correspondences": str(csv_path), "sidecar": str(json_path)}))
    return EXIT_OK


def _ihls_result_json(result):
    return {
        "iterations": result.iterations,
        "converged": result.converged,
        "kkt_residual_inf": result.kkt_residual_inf,
        "objective_trace": [float(v) for v in result.objective_trace],
        "lambda_min": float(result.lambda_min),
        "eigengap": float(result.eigengap),
        "rank_deficient": result.rank_deficient,
    }


def _solve(corr, args):
    d = _load_config(args.config)
    ihls = dict(d.get("ihls", {}))
    if args.p is not None:
        ihls["p"] = args.p
    if args.eps is not None:
        ihls["eps"] = args.eps
    if args.max_iters is not None:
        ihls["max_iters"] = args.max_iters
    if args.method == "least-squares":
        return eight_point(corr), {}
    if args.method == "ihls":
        weights = None if args.weights == "uniform" else corr.weights
        if args.weights == "side-info":
            weights = corr.side_info[:, 0] if corr.side_info is not None else None
        F, result = solve_fundamental(corr, ihls_config_from_dict(ihls), weights=weights)
        return F, _ihls_result_json(result)
    if args.method == "pipeline":
        pipe = dict(d.get("pipeline", {}), ihls=ihls)
        if args.rounds is not None:
            pipe["m_iterations"] = args.rounds
        pipe["initial_weights"] = args.weights
        result = run_pipeline(corr, refinement_config_from_dict(pipe))
        rounds = [None if r is None else _ihls_result_json(r) for r in result.diagnostics]
        return result.F, {
            "f_per_round": [io.matrix_to_json(canonicalize_f(F)) for F in result.f_per_round],
            "rounds": rounds,
            "final_weights": [float(w) for w in result.final_weights],
        }
    ransac = dict(d.get("ransac", {}))
    result = ransac_eight_point(corr, seed=args.seed or 0, **ransac)
    if not result.success:
        raise NumericError("RANSAC found no hypothesis with at least 8 inliers")
    return result.F, {"iterations": result.iterations, "n_inliers": result.n_inliers,
                      "inlier_mask": [bool(v) for v in result.inlier_mask]}


def cmd_solve(args):
    corr = io.read_correspondences(args.correspondences)
    F, diagnostics = _solve(corr, args)
    F = canonicalize_f(F)
    diagnostics = dict(diagnostics, method=args.method, n_pairs=len(corr))
    if args.out is None:
        _emit({"F": io.matrix_to_json(F), "diagnostics": diagnostics}, None)
    else:
        stem = Path(args.out)
        io.write_matrix(stem.with_suffix(".json"), F)
        io.dump_json(diagnostics, stem.with_suffix(".diagnostics.json"))
        log.info("wrote %s and %s", stem.with_suffix(".json"), stem.with_suffix(".diagnostics.json"))
    return EXIT_OK


def cmd_benchmark(args):
    d = _load_config(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    if args.trials is not None:
        d["trials"] = args.trials
    if args.workers is not None:
        d["workers"] = args.workers
    config = ExperimentConfig.from_dict(d)
    results = run_benchmark(config)
    for method, row in results["summary"].items():
        aucs = " ".join(f"@{k}={v:.4f}" for k, v in row["auc"].items())
        log.info("%-14s AUC %s  median rot %.3f deg", method, aucs, row["median_rot_deg"])
    _emit(results, args.out or config.out)
    return EXIT_OK


def cmd_gradcheck(args):
    report = run_gradcheck(
        seed=args.seed or 0, instances=args.instances, n=args.n, p=args.p, eps=args.eps,
        fd_step=args.fd_step, max_iters=args.max_iters,
    )
    for rec in report["instances"]:
        if rec["status"] != "pass":
            log.warning("instance seed=%s: %s %s", rec["seed"], rec["status"], rec.get("error", ""))
    log.info("max relative error %s (tolerance %g)", report["max_rel_error"], report["tolerance"])
    _emit(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_metrics(args):
    corr = io.read_correspondences(args.correspondences)
    F = io.read_matrix(args.F)
    samp = sampson_distance(F, corr.x, corr.xp)
    sed = symmetric_epipolar_distance(F, corr.x, corr.xp)
    out = {
        "sampson": [float(v) for v in samp],
        "symmetric_epipolar": [float(v) for v in sed],
        "epipolar_loss": epipolar_loss(F, corr.x, corr.xp),
        "median_sampson": float(np.median(samp)),
    }
    if args.sidecar is not None:
        side = io.read_sidecar(args.sidecar)
        mask = side["inlier_mask"]
        pose = recover_pose(F, corr.x[mask], corr.xp[mask], side["K_source"], side["K_target"])
        err = pose_error(pose.R, pose.t, side["pose"].R, side["pose"].t)
        out.update(rot_deg=err.rot_deg, trans_deg=err.trans_deg, max_deg=err.max_deg,
                   f_distance=f_distance(F, side["f_gt"]))
    _emit(out, args.out)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    common.add_argument("--out", default=None, help="output path (stdout if omitted)")
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="epipolar-ihls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic scene")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("solve", parents=[common], help="estimate F from a correspondence CSV")
    p.add_argument("correspondences")
    p.add_argument("--method", choices=("ihls", "least-squares", "pipeline", "ransac"), default="ihls")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--weights", choices=("auto", "uniform", "provided", "side-info"), default="auto",
                   help="initial weight source")
    p.add_argument("--rounds", type=int, default=None, help="refinement rounds (pipeline)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("benchmark", parents=[common], help="run the seeded benchmark")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--fd-step", type=float, default=1e-6)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--max-iters", type=int, default=20000)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("metrics", parents=[common], help="epipolar and pose metrics of an F")
    p.add_argument("correspondences")
    p.add_argument("--F", required=True, help="matrix JSON")
    p.add_argument("--sidecar", default=None, help="scene sidecar for pose errors")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        return args.func(args)
    except (InvalidInputError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (NumericError, PreconditionError, np.linalg.LinAlgError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
