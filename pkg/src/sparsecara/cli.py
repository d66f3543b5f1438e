"""Command-line front end: ``sparsecara <subcommand> ...``.

Every subcommand writes one JSON document (schema 1) to stdout or
``--output``.  Output is a pure function of the inputs and ``--seed``;
wall time is only included with ``--timing``.  Exit codes: 0 success,
2 input error, 3 convergence failure, 4 contract violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .caratheodory import (
    CaraProblem,
    approx_caratheodory,
    boosted_caratheodory,
    iteration_budget,
    recentered_caratheodory,
)
from .errors import CaraError, ContractViolation, ConvergenceFailure, InputError
from .formats import (
    read_cut,
    read_dag,
    read_graphic,
    read_libsvm,
    read_matrix,
    read_matroid,
    read_vector,
    write_matrix,
    write_vector,
)
from .lower_bounds import HadamardInstance, hadamard_record, monte_carlo_report, report_csv
from .mirror import lp_norm
from .oracles import dag_path_oracle, explicit_oracle, matroid_base_oracle
from .submodular import (
    cut_function,
    matroid_rank_function,
    modular_function,
    submodular_minimize,
)
from .svm import KernelSpec, SvmProblem, nu_svm_train

SCHEMA = 1


def _repro(args, constants: dict) -> dict:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "output", "timing")
    }
    return {"seed": args.seed, "version": __version__, "config": config, "constants": constants}


def _check_eps_p(args, need_p=True):
    if not (args.epsilon > 0 and math.isfinite(args.epsilon)):
        raise InputError("--epsilon must be positive")
    if need_p and not (args.p >= 2 and math.isfinite(args.p)):
        raise InputError("--p must be finite and >= 2")


def _readable(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise InputError(f"cannot read {p}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_decompose(args) -> tuple[dict, dict]:
    _check_eps_p(args)
    _readable(args.matrix, args.target)
    V = read_matrix(args.matrix)
    d, m = V.shape
    u = read_vector(args.target)
    if u.shape != (d,):
        raise InputError(f"{args.target}: target has {u.size} entries, matrix columns have {d}")
    radius = args.radius
    if radius is None:
        radius = max(lp_norm(V[:, j], args.p) for j in range(m))
        radius = max(radius, 1e-300)
    else:
        for j in range(m):
            nv = lp_norm(V[:, j], args.p)
            if nv > radius * (1 + 1e-9):
                raise InputError(f"{args.matrix}: column {j + 1} has l_p norm {nv:.12g} > radius {radius:.12g}")
    prob = CaraProblem(explicit_oracle(V), u, args.p, args.epsilon, radius)
    if args.variant == "plain":
        comb = approx_caratheodory(prob, assert_member=args.assert_member)
    elif args.variant == "boosted":
        comb = boosted_caratheodory(prob, args.r)
    else:
        comb = recentered_caratheodory(prob, args.r)
    out = {
        "entries": [{"column": int(i) + 1, "weight": float(w)} for i, w in comb.entries],
        "support": comb.support,
        "mass": comb.mass,
        "residual": comb.residual_norm,
        "iterations": comb.iterations,
        "oracle_calls": comb.oracle_calls,
        "rounds": comb.rounds,
    }
    rho = max(2.0, 1.0 + lp_norm(u / radius, args.p))
    consts = {"radius": radius, "T": iteration_budget(args.p, args.epsilon, radius), "rho": rho,
              "sigma": args.p - 1.0, "D": 0.5, "variant": args.variant}
    return out, consts


def cmd_matroid_round(args) -> tuple[dict, dict]:
    _check_eps_p(args)
    _readable(args.matroid, args.x)
    M = read_matroid(args.matroid, args.kind)
    x = read_vector(args.x, M.n)
    if M.rank == 0:
        raise InputError("matroid has rank 0; the base polytope is a single point")
    radius = M.rank ** (1.0 / args.p)
    oracle = matroid_base_oracle(M)
    comb = approx_caratheodory(CaraProblem(oracle, x, args.p, args.epsilon, radius))
    out = {
        "bases": [{"elements": [e + 1 for e in vid], "weight": float(w)} for vid, w in comb.entries],
        "support": comb.support,
        "marginal_error": comb.residual_norm,
        "iterations": comb.iterations,
        "independence_queries": M.queries,
    }
    consts = {"radius": radius, "rank": M.rank, "T": iteration_budget(args.p, args.epsilon, radius),
              "rho": 2.0, "sigma": args.p - 1.0, "D": 0.5}
    return out, consts


def cmd_path_strip(args) -> tuple[dict, dict]:
    _check_eps_p(args)
    _readable(args.dag)
    G = read_dag(args.dag)
    radius = G.n_nodes ** (1.0 / args.p)
    comb = approx_caratheodory(CaraProblem(dag_path_oracle(G), G.flow, args.p, args.epsilon, radius))
    paths = []
    for vid, w in comb.entries:
        nodes = [G.arcs[vid[0]][0] + 1] + [G.arcs[k][1] + 1 for k in vid]
        paths.append({"arcs": [k + 1 for k in vid], "nodes": nodes, "weight": float(w)})
    out = {
        "paths": paths,
        "support": comb.support,
        "flow_error": comb.residual_norm,
        "iterations": comb.iterations,
    }
    consts = {"radius": radius, "T": iteration_budget(args.p, args.epsilon, radius),
              "rho": 2.0, "sigma": args.p - 1.0, "D": 0.5}
    return out, consts


def cmd_submod_min(args) -> tuple[dict, dict]:
    _readable(args.input)
    fam = args.family
    integral = True
    if fam == "cut":
        n, edges, unary = read_cut(args.input)
        f = cut_function(n, edges, unary)
        integral = all(float(w).is_integer() for *_, w in edges) and all(float(u).is_integer() for u in unary)
    elif fam == "modular":
        w = read_vector(args.input)
        f = modular_function(w)
        integral = all(float(v).is_integer() for v in w)
    else:
        M = read_graphic(args.input)
        f = matroid_rank_function(M)
    if args.mode == "exact" and not integral:
        raise InputError("exact mode needs integer-valued f; use --mode additive --k K")
    if args.mode == "additive" and (args.k is None or not args.k > 0):
        raise InputError("--mode additive needs --k > 0")
    res = submodular_minimize(f, mode=args.mode, k=args.k, certify=not args.no_certificate)
    out = res.to_dict()
    out["F"] = f.F
    k = 0.5 if args.mode == "exact" else args.k
    consts = {"k": k, "gap_target": (k / f.n) ** 2, "iter_cap": res.iter_cap,
              "iter_cap_rule": "ceil(4 n F^2 (n/k)^4)", "radius": math.sqrt(f.n) * f.F,
              "certificate": args.mode == "exact" and not args.no_certificate}
    if not res.converged and not res.certified:
        err = ConvergenceFailure(f"Wolfe gap {res.wolfe_gap:.6g} above target after {res.iterations} steps")
        err.payload = (out, consts)
        raise err
    return out, consts


def cmd_svm_train(args) -> tuple[dict, dict]:
    if not (args.epsilon > 0):
        raise InputError("--epsilon must be positive")
    if args.kernel == "precomputed":
        if args.kernel_matrix is None or args.labels is None:
            raise InputError("precomputed kernels need --kernel-matrix and --labels")
        _readable(args.kernel_matrix, args.labels)
        K = read_matrix(args.kernel_matrix)
        y = read_vector(args.labels, K.shape[0])
        spec = KernelSpec("precomputed", matrix=K)
        X = None
    else:
        if args.data is None:
            raise InputError("--data is required for this kernel")
        _readable(args.data)
        X, y = read_libsvm(args.data)
        spec = KernelSpec(args.kernel, degree=args.degree, sigma=args.sigma, alpha=args.alpha, c=args.c)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InputError("labels must be +1 or -1")
    prob = SvmProblem(X, y.astype(int), spec, args.nu, args.epsilon)
    res = nu_svm_train(prob, args.iterations, refine_bound=args.refine_bound)
    out = res.to_dict()
    out["lambda"] = [float(v) for v in res.lam]
    consts = res.constants()
    consts["kernel"] = prob.kernel.describe()
    return out, consts


def cmd_lowerbound(args) -> tuple[dict, dict]:
    if args.construction == "hadamard":
        _check_eps_p(args)
        inst = HadamardInstance(args.n, args.p)
        if args.write_matrix:
            write_matrix(args.write_matrix, inst.V)
        if args.write_target:
            write_vector(args.write_target, inst.u)
        comb = approx_caratheodory(CaraProblem(explicit_oracle(inst.V), inst.u, args.p, args.epsilon, 1.0))
        rec = hadamard_record(inst, comb, args.epsilon)
        rec["entries"] = [{"column": int(i) + 1, "weight": float(w)} for i, w in comb.entries]
        if not rec["bound_ok"]:
            raise ContractViolation("sparsity certificate failed")
        consts = {"T": iteration_budget(args.p, args.epsilon, 1.0), "bound": "eps^2 >= 1/k - 1/n"}
        return rec, consts
    _check_eps_p(args)
    if args.k < 1 or args.k > args.n:
        raise InputError("--k must lie in 1..n")
    seeds = range(args.seed, args.seed + args.seeds)
    rows, violations = monte_carlo_report(args.n, args.p, args.epsilon, args.k, seeds, args.samples)
    if args.csv:
        Path(args.csv).write_text(report_csv(rows), encoding="utf-8")
    out = {
        "n": args.n, "p": args.p, "eps": args.epsilon, "k": args.k,
        "seeds": len(rows), "samples_per_seed": args.samples, "violations": violations,
        "mean_good_fraction": float(np.mean([r["good_fraction"] for r in rows])),
        "mean_value": float(np.mean([r["value"] for r in rows])),
        "mean_predicted": float(np.mean([r["predicted"] for r in rows])),
    }
    if violations:
        raise ContractViolation(f"{violations} sampled points fell below the certified value")
    return out, {"rng": "Philox, sign from low bit", "good_row_rule": "count(+1 on S) > (1/2+eps) k"}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsecara", description="Sparse convex combinations through linear minimization oracles.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, p=True, eps=0.1):
        if p:
            sp.add_argument("--p", type=float, default=2.0, help="norm exponent, >= 2 (default 2)")
        sp.add_argument("--epsilon", "--eps", dest="epsilon", type=float, default=eps, help=f"accuracy (default {eps})")
        sp.add_argument("--seed", type=int, default=0, help="random seed, recorded in the output")
        sp.add_argument("--output", "-o", type=Path, help="write JSON here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="add wall time to the JSON")

    sp = sub.add_parser("decompose", help="sparse combination of matrix columns")
    sp.add_argument("--matrix", type=Path, required=True, help="dense matrix file (text or CARA1 binary)")
    sp.add_argument("--target", type=Path, required=True, help="target vector file")
    sp.add_argument("--radius", type=float, help="declared bound on column l_p norms (default: measured)")
    sp.add_argument("--variant", choices=("plain", "boosted", "recentered"), default="plain")
    sp.add_argument("--r", type=float, default=0.5, help="inner ball radius for boosted/recentered")
    sp.add_argument("--assert-member", action="store_true", help="fail (exit 3) if the residual exceeds epsilon")
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("matroid-round", help="distribution over matroid bases matching a point of the base polytope")
    sp.add_argument("--kind", choices=("graphic", "uniform", "partition"), default="graphic")
    sp.add_argument("--matroid", type=Path, required=True)
    sp.add_argument("--x", type=Path, required=True, help="fractional point, one value per element")
    common(sp)
    sp.set_defaults(func=cmd_matroid_round)

    sp = sub.add_parser("path-strip", help="distribution over s-t paths matching a unit DAG flow")
    sp.add_argument("--dag", type=Path, required=True)
    common(sp)
    sp.set_defaults(func=cmd_path_strip)

    sp = sub.add_parser("submod-min", help="submodular minimization through the min-norm point")
    sp.add_argument("--family", choices=("cut", "modular", "matroid-rank"), required=True)
    sp.add_argument("--input", type=Path, required=True)
    sp.add_argument("--mode", choices=("exact", "additive"), default="exact")
    sp.add_argument("--k", type=float, help="additive accuracy for --mode additive")
    sp.add_argument("--no-certificate", action="store_true", help="stop on the Wolfe gap only")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", "-o", type=Path)
    sp.add_argument("--timing", action="store_true")
    sp.set_defaults(func=cmd_submod_min)

    sp = sub.add_parser("svm-train", help="nu-SVM dual by mirror descent")
    sp.add_argument("--data", type=Path, help="sparse 'label idx:val' file")
    sp.add_argument("--kernel", choices=("linear", "poly_homogeneous", "poly_inhomogeneous", "rbf", "sigmoid", "precomputed"),
                    default="linear")
    sp.add_argument("--kernel-matrix", type=Path, help="dense matrix file for --kernel precomputed")
    sp.add_argument("--labels", type=Path, help="label vector for --kernel precomputed")
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--nu", type=float, default=0.5)
    sp.add_argument("--iterations", type=int, help="override the iteration count")
    sp.add_argument("--refine-bound", action="store_true", help="eigenvalue bound for precomputed kernels")
    common(sp, p=False)
    sp.set_defaults(func=cmd_svm_train)

    sp = sub.add_parser("lowerbound", help="lower-bound instances and their certificates")
    sp.add_argument("construction", choices=("hadamard", "random"))
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--k", type=int, default=8, help="support size (random)")
    sp.add_argument("--seeds", type=int, default=32, help="number of seeds starting at --seed (random)")
    sp.add_argument("--samples", type=int, default=100, help="points per seed (random)")
    sp.add_argument("--csv", type=Path, help="per-seed CSV report (random)")
    sp.add_argument("--write-matrix", type=Path, help="save the Hadamard columns (hadamard)")
    sp.add_argument("--write-target", type=Path, help="save the Hadamard target (hadamard)")
    common(sp, eps=0.25)
    sp.set_defaults(func=cmd_lowerbound)
    return ap


def _emit(doc: dict, output: Optional[Path]) -> None:
    text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    status, payload = "ok", None
    try:
        result, consts = args.func(args)
        code = 0
    except CaraError as exc:
        code = exc.exit_code
        status = type(exc).__name__
        payload = getattr(exc, "payload", None)
        print(f"sparsecara {args.command}: {exc}", file=sys.stderr)
        if payload is None:
            return code
        result, consts = payload
    except OSError as exc:
        print(f"sparsecara {args.command}: {exc}", file=sys.stderr)
        return 2
    doc = {"schema": SCHEMA, "command": args.command, "status": status, "result": result,
           "reproducibility": _repro(args, consts)}
    if args.timing:
        doc["wall_time_s"] = time.perf_counter() - t0
    _emit(doc, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
