"""Command-line entry point ``rgdiam``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bp_numerics as bn
from . import bp_simulator as bs
from . import limit as lim
from .core import attached_trees, kernel, tree_height_histogram, two_core
from .diameter import graph_diameter
from .experiment import ExperimentConfig, run_experiment
from .graph import GraphParseError, ParameterError, read_edgelist, sample_gnm, sample_gnp, write_edgelist


def _emit(obj, as_json: bool = True) -> None:
    if as_json:
        print(json.dumps(obj))
    else:
        for k, v in obj.items():
            print(f"{k}: {v}")


def cmd_generate(a) -> int:
    g = sample_gnm(a.n, a.m, a.seed) if a.m is not None else sample_gnp(a.n, a.lam, a.seed)
    write_edgelist(g, a.out)
    return 0


def cmd_diameter(a) -> int:
    g = read_edgelist(a.file)
    rep = graph_diameter(g, "all" if a.algorithm in ("all", "all_bfs") else a.algorithm)
    if a.json:
        _emit(rep.to_json())
    else:
        print(rep.diameter)
    return 0


def cmd_core(a) -> int:
    g = read_edgelist(a.file)
    c = two_core(g)
    k = kernel(c)
    out = {"core_n": c.n, "core_m": c.m, "kernel_n": k.n, "kernel_m": k.m,
           "isolated_cycles": k.isolated_cycles}
    if a.stats:
        out["tree_height_hist"] = tree_height_histogram(attached_trees(g, c))
    _emit(out, a.json)
    return 0


def cmd_bp_solve(a) -> int:
    p = bn.BranchingParams.from_lambda(a.lam, tol=a.tol)
    r1, r2 = p.residuals()
    _emit({"lambda": p.lam, "eps": p.eps, "s": p.s, "lambda_star": p.lam_star,
           "delta": p.delta, "residual_s": r1, "residual_dual": r2})
    return 0


def _law(name: str, lam: float) -> bs.OffspringLaw:
    return {"poisson": bs.OffspringLaw.poisson, "dual": bs.OffspringLaw.dual,
            "cond": bs.OffspringLaw.conditioned,
            "critical": lambda _: bs.OffspringLaw.critical()}[name](lam)


def cmd_bp_simulate(a) -> int:
    law = _law(a.law, a.lam)
    b = bs.simulate_batch(law, a.trials, a.gen_cap, size_cap=a.size_cap, seed=a.seed)
    counts = np.bincount(b.termination, minlength=3)
    out = {"law": law.kind, "lambda": a.lam, "trials": a.trials,
           "extinct": int(counts[bs.EXTINCT]), "hit_generation_cap": int(counts[bs.GEN_CAP]),
           "hit_size_cap": int(counts[bs.SIZE_CAP]),
           "extinct_fraction": float(counts[bs.EXTINCT] / max(a.trials, 1)),
           "mean_final_size": float(b.final.mean()) if a.trials else 0.0}
    _emit(out, a.json)
    return 0


def cmd_bp_tail(a) -> int:
    for t in a.t:
        print(json.dumps(bs.slow_growth_tail(a.lam, a.omega, t, a.trials, a.seed).to_json()))
    return 0


def cmd_bp_y(a) -> int:
    if a.star:
        y = bs.ystar_samples(a.lam, a.T, a.trials, a.seed)
        se = float(y.std(ddof=1) / np.sqrt(y.size))
        print(json.dumps({"estimate": float(y.mean()), "predicted": 1.0, "stderr": se,
                          "trials": a.trials, "statistic": "mean Y*"}))
    else:
        ys = bs.y_samples(a.lam, a.T, a.trials, a.seed)
        se = float(ys.y.std(ddof=1) / np.sqrt(ys.y.size))
        print(json.dumps({"estimate": float(ys.y.mean()), "predicted": 1.0, "stderr": se,
                          "trials": a.trials, "statistic": "mean Y",
                          "truncated": ys.truncated}))
    return 0


def cmd_bp_gamma1(a) -> int:
    g0 = a.gamma0 if a.gamma0 is not None else bn.gamma0_estimate([0.01, 0.005]).gamma0
    est = bs.estimate_gamma1(a.M, a.trials, g0, a.seed)
    print(json.dumps({"estimate": est.gamma1, "stderr": est.stderr, "trials": est.trials,
                      "mean_inv_R": est.mean_inv_R, "gamma0": g0, "branches": est.branches}))
    return 0


def cmd_predict(a) -> int:
    rec = bn.predict_diameter(a.n, a.lam, a.regime)
    _emit(rec.to_json(), a.json)
    return 0


def cmd_limit_sample(a) -> int:
    p = lim.LimitParams(a.gamma1, K=a.K)
    for i in range(a.trials):
        s = lim.sample_D(p, a.seed, i)
        print(json.dumps({"D": s.D, "K": s.K, "certificate": s.certificate,
                          "pairs": s.pairs, "argmax": list(s.argmax)}))
    return 0


def cmd_limit_curve(a) -> int:
    cur = lim.survival_curve(a.gamma1, lim.parse_grid(a.grid), a.trials, a.seed)
    _emit(cur.to_json(), a.json)
    return 0


def cmd_experiment(a) -> int:
    cfg = ExperimentConfig.from_file(a.config, out=a.out, threads=a.threads)
    count = 0
    for _ in run_experiment(cfg):
        count += 1
    print(json.dumps({"records": count, "out": cfg.out}), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rgdiam", description="Diameters of sparse random graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample G(n, lambda/n) or G(n, m) to an edge list")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("diameter", help="exact diameter of an edge-list graph")
    p.add_argument("file")
    p.add_argument("--algorithm", choices=["ifub", "ifub-plain", "all", "all_bfs"], default="ifub")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_diameter)

    p = sub.add_parser("core", help="2-core and kernel sizes")
    p.add_argument("file")
    p.add_argument("--stats", action="store_true", help="include attached-tree heights")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_core)

    bp = sub.add_parser("bp", help="branching-process numerics and simulation")
    bsub = bp.add_subparsers(dest="bp_command", required=True)
    p = bsub.add_parser("solve")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tol", type=float, default=bn.DEFAULT_TOL)
    p.set_defaults(fn=cmd_bp_solve)
    p = bsub.add_parser("simulate")
    p.add_argument("--law", choices=["poisson", "dual", "cond", "critical"], default="poisson")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--gen-cap", type=int, default=200)
    p.add_argument("--size-cap", type=float, default=1e6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_bp_simulate)
    p = bsub.add_parser("tail", help="slow-growth tail estimates (JSONL)")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--omega", type=float, default=50.0)
    p.add_argument("--t", type=int, nargs="+", default=[30])
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bp_tail)
    p = bsub.add_parser("ysample", help="martingale limit samples (JSONL summary)")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--star", action="store_true", help="use the survivor process")
    p.set_defaults(fn=cmd_bp_y)
    p = bsub.add_parser("gamma1", help="side-branch estimate of gamma1")
    p.add_argument("--M", type=int, default=50)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--gamma0", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bp_gamma1)

    p = sub.add_parser("predict", help="predicted diameter")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--regime", choices=["auto", *bn.REGIMES], default="auto")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_predict)

    lp = sub.add_parser("limit", help="limiting correction distribution")
    lsub = lp.add_subparsers(dest="limit_command", required=True)
    p = lsub.add_parser("sample")
    p.add_argument("--gamma1", type=float, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--K", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_limit_sample)
    p = lsub.add_parser("curve")
    p.add_argument("--gamma1", type=float, required=True)
    p.add_argument("--grid", required=True, help="a:b:step; write --grid=-2:4:1 for a negative start")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_limit_curve)

    p = sub.add_parser("experiment", help="run a Monte Carlo campaign")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    p.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (GraphParseError, ParameterError, bn.DomainError, bn.WindowError,
            bn.PrecisionError, ValueError, OSError) as exc:
        print(f"rgdiam: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
