"""Command-line entry point: ``softmax-spectra <command> ...``.

Data goes to files, diagnostics to stderr. Every command writes a JSON
run manifest next to its outputs; ``replay`` re-executes one.
"""
import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .descent import DescentConfig, choose_eta, run
from .errors import Diverged, MalformedInput, NotInvertible, NotPositiveTarget, SingularHessian
from .existence import analyze, check_critical, closed_form_minimum
from .hessian import build_hessian
from .io import load_dataset, read_matrix, write_csv, write_json, write_matrix
from .matcore import sym_eig
from .model import gradient, softmax
from .montecarlo import DEFAULT_CLASSES, MCConfig, run_experiment, summary_rows
from .reduction import KINDS, ReducedWeights, build_kmap, lift, reduce_weights
from .spectral import DEFAULT_BUDGET, condition_bounds, lambda_max_bounds
from .svg import histogram_svg

EXIT_OK, EXIT_MALFORMED, EXIT_DIVERGED, EXIT_NOT_POSITIVE, EXIT_NOT_INVERTIBLE = 0, 2, 3, 4, 5
SEED_ENV = "SOFTMAX_SPECTRA_SEED"
SANDWICH_SLACK = 1e-9
EXACT_REPORT_MAX_DIM = 64


def _log(msg):
    print(msg, file=sys.stderr)


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise MalformedInput(f"{SEED_ENV}={env!r} is not an integer")


def _write_manifest(path, args, argv, out_flag, inputs, parameters, outputs, seed=None, extra=None):
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "out_flag": out_flag,
        "inputs": inputs,
        "parameters": parameters,
        "seed": seed,
        "tool_version": __version__,
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    write_json(path, manifest)


def _sidecar(out):
    return Path(str(out) + ".manifest.json")


def cmd_train(args, argv):
    d = load_dataset(args.x, args.t)
    kmap = build_kmap(args.k, d.C)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    reference = None
    eta_info = {"source": "flag"}
    if args.eta is None:
        choice = choose_eta(d, kmap, theta=args.theta)
        eta = choice.eta
        reference = choice.reference if choice.reference_source == "closed_form" else None
        eta_info = choice.as_dict()
        eta_info["source"] = "auto"
        _log(f"auto eta = {eta:.6g} from {choice.source} spectrum "
             f"[{choice.lambda_min:.6g}, {choice.lambda_max:.6g}]")
    else:
        eta = args.eta
        try:
            reference = closed_form_minimum(d)
        except (NotPositiveTarget, NotInvertible):
            reference = None

    cfg = DescentConfig(eta=eta, theta=args.theta, max_iters=args.max_iters,
                        grad_tol=args.grad_tol, space=args.space)
    start = ReducedWeights(np.zeros((d.C - 1, d.D)), kmap)
    code = EXIT_OK
    try:
        trace = run(start, d, cfg, reference=reference)
    except Diverged as exc:
        _log(f"diverged: {exc}")
        trace = exc.trace
        code = EXIT_DIVERGED

    rows = []
    for i, (lv, gv) in enumerate(zip(trace.losses, trace.grad_norms)):
        ratio = trace.error_ratios[i - 1] if (i > 0 and i - 1 < len(trace.error_ratios)) else None
        rows.append((i, lv, gv, ratio))
    trace_path = out / "trace.csv"
    write_csv(trace_path, ["iter", "loss", "grad_norm", "error_ratio"], rows)
    outputs = [trace_path]
    extra = {"eta": eta_info, "converged": trace.converged, "iterations": trace.iterations}
    if code == EXIT_OK:
        w = trace.final_weights
        weights_path = out / "weights.csv"
        write_matrix(weights_path, w)
        outputs.append(weights_path)
        extra["final_critical"] = check_critical(w, d)
        extra["final_grad_norm"] = float(np.linalg.norm(gradient(w, d)))
        _log(f"{trace.iterations} iterations, converged={trace.converged}, "
             f"critical={extra['final_critical']}")
    _write_manifest(out / "manifest.json", args, argv, "--out",
                    {"x": args.x, "t": args.t},
                    {"eta": args.eta, "theta": args.theta, "max_iters": args.max_iters,
                     "grad_tol": args.grad_tol, "k": args.k, "space": args.space},
                    outputs, extra=extra)
    return code


def _flag(ok):
    return bool(ok)


def diagnose_report(d, w, kind, budget):
    kmap = build_kmap(kind, d.C)
    s = reduce_weights(w, kmap)
    h = build_hessian(s, d)
    y = softmax(lift(s) @ d.X)
    if d.N == d.D:
        regime = "square"
    elif d.N > d.D:
        regime = "overdetermined"
    else:
        regime = "underdetermined"
    report = {"dimension": h.size, "kmap": kind, "regime": regime,
              "C": d.C, "D": d.D, "N": d.N, "errors": []}
    eig = sym_eig(h.dense)
    lam_min, lam_max = float(eig.values[-1]), float(eig.values[0])
    exact = {"lambda_min": lam_min, "lambda_max": lam_max}
    if h.size <= EXACT_REPORT_MAX_DIM:
        exact["eigenvalues"] = eig.values
    exact["kappa"] = lam_max / lam_min if lam_min > 0 else None
    report["exact"] = exact
    lo, hi = lambda_max_bounds(y, d.X)
    report["bounds"] = {"lambda_max_lower": lo, "lambda_max_upper": hi}
    sandwich = {
        "lambda_max_lower": _flag(lo <= lam_max + SANDWICH_SLACK),
        "lambda_max_upper": _flag(lam_max <= hi + SANDWICH_SLACK),
    }
    try:
        b = condition_bounds(y, d.X, kind=kind, budget=budget, hessian=h)
    except SingularHessian as exc:
        report["errors"].append(f"SingularHessian: {exc}")
        exact["kappa"] = None
    else:
        report["bounds"] = b.as_dict()
        kappa = exact["kappa"]
        sandwich.update(
            lambda_min_lower=_flag(b.lambda_min_lower <= lam_min + SANDWICH_SLACK),
            lambda_min_upper=_flag(lam_min <= b.lambda_min_upper + SANDWICH_SLACK),
            lambda_min_upper_stated=_flag(
                lam_min <= b.extras["lambda_min_upper_stated"] + SANDWICH_SLACK),
            kappa_lower=_flag(b.kappa_lower <= kappa + SANDWICH_SLACK),
            kappa_upper=_flag(kappa <= b.kappa_upper + SANDWICH_SLACK),
        )
        report["kappa_bracket"] = [b.kappa_lower, b.kappa_upper]
    report["sandwich"] = sandwich
    return report


def cmd_diagnose(args, argv):
    d = load_dataset(args.x, args.t)
    w = read_matrix(args.weights)
    if w.shape != (d.C, d.D):
        raise MalformedInput(f"weights must be {d.C}x{d.D}, got {w.shape[0]}x{w.shape[1]}")
    report = diagnose_report(d, w, args.k, args.budget)
    write_json(args.out, report)
    for err in report["errors"]:
        _log(err)
    _write_manifest(_sidecar(args.out), args, argv, "--out",
                    {"x": args.x, "t": args.t, "weights": args.weights},
                    {"k": args.k, "budget": args.budget}, [args.out])
    return EXIT_OK


def existence_report(d):
    r = analyze(d)
    return {
        "verdict": r.verdict,
        "t_positive": r.t_positive,
        "x_rank": r.x_rank,
        "regime": r.regime,
        "z0_dimension": r.z0_dimension,
        "closed_form": r.closed_form,
        "bounded_direction": r.bounded_direction,
        "ray_losses": r.ray_losses,
        "z0_basis": r.z0_basis,
    }


def cmd_existence(args, argv):
    d = load_dataset(args.x, args.t)
    report = existence_report(d)
    write_json(args.out, report)
    _log(f"verdict: {report['verdict']} (rank X = {report['x_rank']}, "
         f"z0 dimension = {report['z0_dimension']})")
    _write_manifest(_sidecar(args.out), args, argv, "--out",
                    {"x": args.x, "t": args.t}, {}, [args.out])
    return EXIT_OK


def cmd_montecarlo(args, argv):
    seed = _resolve_seed(args.seed)
    classes = tuple(int(c) for c in args.classes.split(",")) if args.classes else DEFAULT_CLASSES
    cfg = MCConfig(class_counts=classes, realizations=args.realizations,
                   kmap_kind=args.k, seed=seed, bin_count=args.bins)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hists = run_experiment(cfg)
    outputs = []
    for h in hists:
        csv_path = out / f"hist_C{h.c:02d}.csv"
        his = list(h.edges[1:]) + [float("inf")]
        los = list(h.edges[:-1]) + [h.edges[-1]]
        write_csv(csv_path, ["bin_lo", "bin_hi", "count"],
                  [(lo, hi, int(c)) for lo, hi, c in zip(los, his, h.counts)])
        svg_path = out / f"hist_C{h.c:02d}.svg"
        svg_path.write_text(histogram_svg(h), encoding="utf-8")
        outputs += [csv_path, svg_path]
    rows = summary_rows(hists)
    header = list(rows[0].keys())
    summary_path = out / "summary.csv"
    write_csv(summary_path, header, [[r[k] for k in header] for r in rows])
    outputs.append(summary_path)
    for r in rows:
        _log(f"C={r['C']:>3}  median ratio {r['median']:.4f}")
    _write_manifest(out / "manifest.json", args, argv, "--out-dir", {},
                    {"classes": list(classes), "realizations": args.realizations,
                     "k": args.k, "bins": args.bins},
                    outputs, seed=seed)
    return EXIT_OK


def cmd_closed_form(args, argv):
    d = load_dataset(args.x, args.t)
    try:
        w = closed_form_minimum(d)
    except NotPositiveTarget as exc:
        _log(f"NotPositiveTarget: {exc}")
        return EXIT_NOT_POSITIVE
    except NotInvertible as exc:
        _log(f"NotInvertible: {exc}")
        return EXIT_NOT_INVERTIBLE
    write_matrix(args.out, w)
    gnorm = float(np.linalg.norm(gradient(w, d)))
    _log(f"gradient_frobenius_norm={gnorm:.3e}")
    _write_manifest(_sidecar(args.out), args, argv, "--out",
                    {"x": args.x, "t": args.t}, {}, [args.out],
                    extra={"gradient_frobenius_norm": gnorm})
    return EXIT_OK


def cmd_replay(args, argv):
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        replay_argv = list(manifest["argv"])
        out_flag = manifest["out_flag"]
    except (OSError, ValueError, KeyError) as exc:
        raise MalformedInput(f"{args.manifest}: not a run manifest ({exc})") from exc
    if args.out is not None:
        i = replay_argv.index(out_flag)
        replay_argv[i + 1] = args.out
    if manifest.get("seed") is not None and "--seed" not in replay_argv:
        replay_argv += ["--seed", str(manifest["seed"])]
    return main(replay_argv)


def _dataset_args(p):
    p.add_argument("--x", required=True, help="sample matrix X (D x N) CSV")
    p.add_argument("--t", required=True, help="target matrix T (C x N) CSV")


def build_parser():
    parser = argparse.ArgumentParser(prog="softmax-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="gradient descent with a fixed or spectrally chosen step")
    _dataset_args(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--eta", type=float, help="fixed learning rate")
    group.add_argument("--auto-eta", action="store_true",
                       help="midpoint of the admissible step interval (default)")
    p.add_argument("--theta", type=float, default=0.5, help="target contraction in (0, 1)")
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--grad-tol", type=float, default=1e-10)
    p.add_argument("--k", choices=KINDS, default="isometric")
    p.add_argument("--space", choices=("reduced", "full_Z"), default="reduced")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("diagnose", help="exact spectrum against eigenvalue and condition bounds")
    _dataset_args(p)
    p.add_argument("--weights", required=True, help="weights W (C x D) CSV")
    p.add_argument("--k", choices=KINDS, default="isometric")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("existence", help="decide whether the loss has a minimum")
    _dataset_args(p)
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=cmd_existence)

    p = sub.add_parser("montecarlo", help="ratio histograms lambda_(C-1)(A) / y_min")
    p.add_argument("--classes", default=None, help="comma-separated class counts")
    p.add_argument("--realizations", type=int, default=2000)
    p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    p.add_argument("--k", choices=KINDS, default="canonical")
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("closed-form", help="closed-form minimiser for invertible X and T > 0")
    _dataset_args(p)
    p.add_argument("--out", required=True, help="weights CSV path")
    p.set_defaults(func=cmd_closed_form)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="redirect outputs elsewhere")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except MalformedInput as exc:
        _log(f"malformed input: {exc}")
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
