"""Command-line interface.

Every subcommand exits with status 0 iff all of its checks pass.  The
default seed is 0, overridable through the ``DEPKIT_SEED`` environment
variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .adapters import adapter_value, interface_from_modes, train_lambda_family, tune_lambda
from .cdk import decomposition_residuals, modal_decompose
from .errors import DepkitError
from .features import write_feature_csv
from .losses import check_projection_axiom, check_substitution_axiom, parse_loss
from .losses.core import Context, NormRegularizer
from .optim import OptimConfig, minimize
from .probability import empirical_from_samples, entropy, load_joint, mutual_information, read_samples_csv


def _default_seed() -> int:
    return int(os.environ.get("DEPKIT_SEED", "0"))


def _load(path, smoothing=0.0):
    """A joint distribution from JSON, or from an ``x,y`` sample CSV."""
    if str(path).lower().endswith(".csv"):
        return empirical_from_samples(read_samples_csv(path), smoothing=smoothing)
    return load_joint(path)


def _emit(obj, fmt="json"):
    if fmt == "json":
        print(json.dumps(obj, indent=2, default=ex._jsonable))
    else:
        print(obj)


def cmd_validate(args) -> int:
    J = _load(args.dist, args.smoothing)
    _emit({
        "valid": True,
        "shape": list(J.shape),
        "mutual_information": mutual_information(J),
        "entropy_x": entropy(J.px),
        "entropy_y": entropy(J.py),
    })
    return 0


def cmd_decompose(args) -> int:
    J = _load(args.dist, args.smoothing)
    md = modal_decompose(J, rank_tol=args.rank_tol)
    res = decomposition_residuals(J, md)
    ok = max(res.values()) <= 1e-9 and bool(np.all(md.sigma <= 1 + 1e-9))
    out = md.to_dict()
    out["residuals"] = res
    out["passed"] = bool(ok)
    _emit(out)
    return 0 if ok else 1


def cmd_learn(args) -> int:
    J = _load(args.dist, args.smoothing)
    L = parse_loss(args.loss)
    k = args.k or L.required_k()
    if k is None:
        raise ValueError(f"{L.spec()} does not fix k; pass --k")
    cfg = OptimConfig(k=k, seed=args.seed, restarts=args.restarts, max_iters=args.max_iters)
    r = minimize(L, J, cfg)
    if args.out:
        out = Path(args.out)
        write_feature_csv(r.f, out)
        write_feature_csv(r.g, out.with_name(out.stem + "_g" + out.suffix))
    d = r.to_dict()
    d["loss"] = L.spec()
    _emit(d)
    return 0 if r.converged and np.isfinite(r.value) else 1


def cmd_verify_dloss(args) -> int:
    L = parse_loss(args.loss)
    sub = check_substitution_axiom(L, trials=args.trials, seed=args.seed)
    proj = check_projection_axiom(L, trials=args.trials, seed=args.seed)
    _emit({
        "loss": L.spec(),
        "substitution": {"passed": sub.passed, "max_dev": sub.max_dev, "tol": 1e-10,
                         "finite_trials": sub.finite_trials, "failures": sub.failures},
        "projection": {"passed": proj.passed, "max_excess": proj.max_dev, "tol": 1e-9,
                       "finite_trials": proj.finite_trials, "failures": proj.failures,
                       "equality_cases": proj.equality_cases, "regularity": proj.regularity},
    })
    return 0 if sub.passed and proj.passed else 1


def _report(rep: ex.ExperimentReport, fmt: str) -> int:
    if fmt == "json":
        print(rep.to_json())
    else:
        print(rep.to_text())
    return 0 if rep.passed else 1


def cmd_invariance(args) -> int:
    rep = ex.run_invariance_suite(args.seed, args.trials, learn_trials=args.learn_trials,
                                  loss_name=args.loss, product_trials=args.product_trials)
    return _report(rep, args.format)


def cmd_collapse(args) -> int:
    rep = ex.run_collapse_experiment(args.samples, args.classes, args.loss, args.seed)
    return _report(rep, args.format)


def _family(spec: str):
    if "{lambda}" in spec:
        return lambda lam: parse_loss(spec.replace("{lambda}", repr(float(lam))))
    base = parse_loss(spec)
    return lambda lam: base + NormRegularizer(lam, lam)


def cmd_adapter(args) -> int:
    J = _load(args.dist, args.smoothing)
    md = modal_decompose(J)
    iface = interface_from_modes(J, md)
    grid = [float(x) for x in args.lambda_grid.split(",")] if args.lambda_grid else [0.0]
    family = _family(args.loss) if args.lambda_grid else (lambda lam: parse_loss(args.loss))
    k = args.k or family(grid[0]).required_k() or max(md.rank, 1)
    cfg = OptimConfig(k=k, seed=args.seed, restarts=args.restarts)
    fam = train_lambda_family(family, iface, grid, cfg)
    # the substituted value on J must equal the adapter value on P_{S,T}
    ctx = Context(J)
    devs = []
    for lam, phi, psi in zip(fam.grid, fam.phis, fam.psis):
        L = family(lam)
        f, g = iface.compose(phi, psi)
        a = float(L.value(f.values, g.values, ctx))
        b = adapter_value(L, phi, psi, iface)
        devs.append(abs(a - b) / max(1.0, abs(a)))
    ok = max(devs) <= ex.TOL["substitution_exact"]
    bundle = fam.to_dict()
    bundle["substitution_dev"] = max(devs)
    if args.tune:
        base = parse_loss(args.loss.replace("{lambda}", "0")) if "{lambda}" in args.loss else parse_loss(args.loss)
        search = np.linspace(fam.grid[0], fam.grid[-1], 50)
        bundle["tuned_lambda"] = tune_lambda(fam, lambda phi, psi, lam: adapter_value(base, phi, psi, iface), search)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(bundle, fh, indent=2, default=ex._jsonable)
        _emit({"out": args.out, "grid": fam.grid.tolist(), "substitution_dev": max(devs),
               "tuned_lambda": bundle.get("tuned_lambda"), "passed": ok})
    else:
        _emit(bundle)
    return 0 if ok else 1


def run_report(seed: int = 0, quick: bool = True) -> list:
    """A battery of experiments; ``quick`` uses small trial counts."""
    n = 20 if quick else 200
    reps = [
        ex.run_axiom_suite(seed, n_aggregates=5 if quick else 50, trials=100 if quick else 1000),
        ex.run_gradient_checks(seed, 10 if quick else 100),
        ex.run_oracle_recovery(seed, 5 if quick else 50),
        ex.run_invariance_suite(seed, n, learn_trials=2 if quick else 20, product_trials=2 if quick else 10),
        ex.run_rewriting_checks(seed, n * 5),
        ex.run_sufficiency_suite(seed, n_pairs=n * 5, n_exhaustive=2 if quick else 20, n_tau=n),
        ex.run_entropy_bound_check(seed, n),
        ex.run_collapse_experiment(60, 3, "logloss", seed),
        ex.run_collapse_experiment(60, 3, "nested_h", seed),
    ]
    for name in ex.LOSS_NAMES:
        reps.append(ex.run_composition_equivalence(name, seed, 3 if quick else 20))
    reps.append(ex.run_lambda_adapter_check(seed, n_instances=1 if quick else 3))
    return reps


def cmd_report(args) -> int:
    reps = run_report(args.seed, quick=not args.full)
    ok = all(r.passed for r in reps)
    if args.format == "json":
        print(json.dumps({"passed": ok, "reports": [r.to_dict() for r in reps]}, indent=2, default=ex._jsonable))
    else:
        for r in reps:
            print(r.to_text())
        print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def _dist_flags(s):
    s.add_argument("--smoothing", type=float, default=0.0,
                   help="for sample CSV input: add this mass to every cell, then renormalize")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="depkit", description="Dependence-induced feature learning toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    seed = _default_seed()

    s = sub.add_parser("validate", help="validate a joint distribution file")
    s.add_argument("dist")
    _dist_flags(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("decompose", help="modal decomposition of a joint distribution")
    s.add_argument("dist")
    s.add_argument("--rank-tol", type=float, default=1e-9)
    _dist_flags(s)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("learn", help="minimize a loss over feature tables")
    s.add_argument("--loss", required=True)
    s.add_argument("--dist", required=True)
    s.add_argument("--k", type=int, help="feature dimension (default: the k fixed by the loss)")
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--restarts", type=int, default=5)
    s.add_argument("--max-iters", type=int, default=50000)
    s.add_argument("--out")
    _dist_flags(s)
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("verify-dloss", help="randomized checks of the D-loss axioms")
    s.add_argument("--loss", required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=seed)
    s.set_defaults(func=cmd_verify_dloss)

    s = sub.add_parser("invariance", help="invariance under dependence-preserving transforms")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--learn-trials", type=int, default=0)
    s.add_argument("--product-trials", type=int, default=0)
    s.add_argument("--loss", default="nested_h", choices=["nested_h", "logloss_l2", "raw_l2"])
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--format", choices=["json", "text"], default="text")
    s.set_defaults(func=cmd_invariance)

    s = sub.add_parser("collapse", help="within-class collapse on a labeled dataset")
    s.add_argument("--samples", type=int, default=60)
    s.add_argument("--classes", type=int, default=3)
    s.add_argument("--loss", default="logloss", choices=sorted(ex.COLLAPSE_LOSSES))
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--format", choices=["json", "text"], default="text")
    s.set_defaults(func=cmd_collapse)

    s = sub.add_parser("adapter", help="train feature adapters on the interface distribution")
    s.add_argument("--dist", required=True)
    s.add_argument("--loss", required=True,
                   help="loss spec; with --lambda-grid, '{lambda}' marks the tuned weight "
                        "(default: lambda * l2 on both sides is added)")
    s.add_argument("--lambda-grid")
    s.add_argument("--tune", action="store_true")
    s.add_argument("--k", type=int)
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--out")
    _dist_flags(s)
    s.set_defaults(func=cmd_adapter)

    s = sub.add_parser("report", help="run the experiment battery")
    s.add_argument("--format", choices=["json", "text"], default="text")
    s.add_argument("--full", action="store_true", help="larger trial counts")
    s.add_argument("--seed", type=int, default=seed)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DepkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
