"""Command-line front end.

Commands:

    ssv nu PATH          convex upper bound for a problem file
    ssv check PATH       equality decision with certificates
    ssv mu-lower PATH    heuristic lower bound by randomized search
    ssv paper-suite      run the embedded counterexamples and randomized
                         equality checks as a regression harness

Exit codes: nu and mu-lower exit 0 on success and 2 on parse errors;
nu exits 3 on a solver stall.  check exits 0 for verdict equal, 1 for
gap, 3 for undecided.  paper-suite exits 0 only if every case passes.
The environment variable SSV_SEED overrides the random seed.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import fixtures
from .certificates import check_equality, mu_lower_search, top_svd, \
    build_pset, find_eta, real_perturbation_exists
from .numerics import orthonormal_complement
from .scaling import nu_upper, sigma_max
from .structure import Problem, ValidationError, full_blocks, parse_problem


def _seed(default=12345):
    env = os.environ.get("SSV_SEED")
    if env is not None:
        return int(env)
    return default


def _load_problem(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return parse_problem(text)
    except (json.JSONDecodeError, ValidationError, KeyError, TypeError) as e:
        print(f"error: invalid problem file: {e}", file=sys.stderr)
        raise SystemExit(2)


def _jprint(obj):
    print(json.dumps(obj, sort_keys=True, separators=(",", ":")))


def _matrix_json(a):
    a = np.asarray(a, dtype=complex)
    return [[[a[i, j].real, a[i, j].imag] for j in range(a.shape[1])]
            for i in range(a.shape[0])]


def cmd_nu(args):
    problem = _load_problem(args.path)
    try:
        res = nu_upper(problem.matrix, problem.structure, tol=args.tol)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.json:
        _jprint({
            "nu": res.nu,
            "d_opt": list(res.d_opt.d),
            "iterations": res.iterations,
            "gap_estimate": res.gap_estimate,
        })
    else:
        print(f"nu = {res.nu:.9f}")
        print("d_opt =", " ".join(f"{d:.9g}" for d in res.d_opt.d))
        print(f"iterations = {res.iterations}")
        print(f"gap_estimate = {res.gap_estimate:.3e}")
    return 0 if res.converged else 3


def cmd_check(args):
    problem = _load_problem(args.path)
    rep = check_equality(problem, tol=args.tol)
    code = {"equal": 0, "gap": 1, "undecided": 3}[rep.verdict]
    if args.json:
        out = {
            "verdict": rep.verdict,
            "nu": rep.nu,
            "sigma_at_opt": rep.sigma_at_opt,
            "d_opt": list(rep.d_opt.d),
            "detail": rep.detail,
        }
        if rep.eta is not None:
            out["eta"] = [[c.real, c.imag] for c in rep.eta.eta]
            out["eta_residual"] = rep.eta.max_residual
        if rep.delta is not None:
            out["delta"] = _matrix_json(rep.delta.assemble())
            out["delta_norm"] = rep.delta.norm
        if rep.mu_lower is not None:
            out["mu_lower"] = rep.mu_lower
        _jprint(out)
        return code
    if rep.verdict == "equal":
        print(f"EQUAL: mu = nu = {rep.nu:.9f}")
        print("worst-case perturbation (norm "
              f"{rep.delta.norm:.9f}):")
        with np.printoptions(precision=6, suppress=True):
            print(rep.delta.assemble())
    elif rep.verdict == "gap":
        print(f"GAP: mu < nu = {rep.nu:.9f}")
        if rep.detail:
            print(rep.detail)
    else:
        print(f"UNDECIDED: nu = {rep.nu:.9f}")
        if rep.detail:
            print(rep.detail)
    return code


def cmd_mu_lower(args):
    problem = _load_problem(args.path)
    val, pert = mu_lower_search(problem, seeds=args.seeds,
                                seed=_seed(), return_delta=True)
    if args.json:
        out = {"mu_lower": val, "seeds": args.seeds}
        if pert is not None:
            out["delta"] = _matrix_json(pert.assemble())
        _jprint(out)
        return 0
    print(f"mu_lower = {val:.9f}  (heuristic, {args.seeds} starts)")
    if problem.structure.S == 0:
        nu = nu_upper(problem.matrix, problem.structure).nu
        print(f"nu = {nu:.9f}  gap = {nu - val:.9f}")
    if pert is not None:
        with np.printoptions(precision=6, suppress=True):
            print("best perturbation:")
            print(pert.assemble())
    return 0


def _complement_is_identity(problem):
    tsvd = top_svd(np.asarray(problem.matrix))
    pset = build_pset(tsvd, problem.structure)
    comp = orthonormal_complement(pset.members, pset.field, dim=tsvd.r)
    if len(comp) != 1:
        return False
    eye = np.eye(tsvd.r) / np.sqrt(tsvd.r)
    return abs(abs(np.vdot(comp[0], eye)) - 1.0) < 1e-8


def _paper_cases(seeds, seed):
    """Yield (name, passed, note) in fixed order."""
    rng = np.random.default_rng(seed)

    rep1 = check_equality(fixtures.load("counterexample1"))
    mu1 = mu_lower_search(fixtures.load("counterexample1"), seeds=seeds,
                          seed=seed)
    yield ("counterexample1 (six scalar blocks, real)",
           rep1.verdict == "gap" and abs(rep1.nu - 1.0) < 1e-6
           and _complement_is_identity(fixtures.load("counterexample1"))
           and mu1 <= 1.0 - 1e-3,
           f"nu={rep1.nu:.6f} mu_lower={mu1:.6f} verdict={rep1.verdict}")

    rep2 = check_equality(fixtures.load("counterexample2"))
    yield ("counterexample2 (four scalar blocks, complex)",
           rep2.verdict == "gap" and abs(rep2.nu - 1.0) < 1e-6
           and _complement_is_identity(fixtures.load("counterexample2")),
           f"nu={rep2.nu:.6f} verdict={rep2.verdict}")

    p3 = fixtures.load("counterexample3")
    rep3 = check_equality(p3)
    ok3 = (_complement_is_identity(p3)
           and real_perturbation_exists(p3) is False
           and rep3.verdict == "equal")
    yield ("counterexample3 (three scalar blocks, real matrix)",
           ok3, f"verdict={rep3.verdict} real_delta=no")

    for name, key in (("counterexample4 (repeated scalar + two full)",
                       "counterexample4"),
                      ("counterexample5 (two repeated scalars)",
                       "counterexample5")):
        p = fixtures.load(key)
        rep = check_equality(p)
        yield (name,
               rep.verdict == "gap" and _complement_is_identity(p),
               f"verdict={rep.verdict}")

    p6 = fixtures.load("counterexample6")
    rep6 = check_equality(p6)
    ok6 = (_complement_is_identity(p6)
           and real_perturbation_exists(p6) is False
           and rep6.eta is not None)
    yield ("counterexample6 (repeated scalar + full, real matrix)",
           ok6, f"verdict={rep6.verdict} real_delta=no")

    n_rand = max(1, seeds // 8)
    for label, build, want in (
        ("random real, five full 2x2 blocks",
         lambda: Problem(rng.standard_normal((10, 10)),
                         full_blocks([2] * 5)), "equal"),
        ("random complex, three full 2x2 blocks",
         lambda: Problem(rng.standard_normal((6, 6))
                         + 1j * rng.standard_normal((6, 6)),
                         full_blocks([2] * 3)), "equal"),
        ("random real, two full 2x2 blocks (real perturbation)",
         lambda: Problem(rng.standard_normal((4, 4)),
                         full_blocks([2, 2])), "real-delta"),
    ):
        good = 0
        for _ in range(n_rand):
            problem = build()
            rep = check_equality(problem)
            if want == "equal":
                good += rep.verdict == "equal"
            else:
                good += (rep.verdict == "equal" and rep.delta is not None
                         and all(np.isrealobj(b) or
                                 np.max(np.abs(np.imag(b))) <= 1e-10
                                 for b in rep.delta.blocks))
        yield (label, good == n_rand, f"{good}/{n_rand} instances")


def cmd_paper_suite(args):
    results = list(_paper_cases(args.seeds, _seed()))
    if args.json:
        _jprint({
            "cases": [{"name": n, "passed": bool(p), "note": note}
                      for n, p, note in results],
            "passed": all(p for _, p, _ in results),
        })
    else:
        width = max(len(n) for n, _, _ in results)
        for name, passed, note in results:
            mark = "pass" if passed else "FAIL"
            print(f"{name:<{width}}  {mark}  {note}")
        total = sum(p for _, p, _ in results)
        print(f"{total}/{len(results)} cases passed")
    return 0 if all(p for _, p, _ in results) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ssv",
        description="structured singular value analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, path=True):
        if path:
            p.add_argument("path", help="problem file (JSON)")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="objective tolerance")
        p.add_argument("--seeds", type=int, default=32,
                       help="number of randomized starts/instances")
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")

    add_common(sub.add_parser("nu", help="convex upper bound"))
    add_common(sub.add_parser("check", help="equality decision"))
    add_common(sub.add_parser("mu-lower", help="heuristic lower bound"))
    add_common(sub.add_parser("paper-suite",
                              help="counterexample regression harness"),
               path=False)

    args = parser.parse_args(argv)
    if args.tol <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return 2
    handler = {
        "nu": cmd_nu,
        "check": cmd_check,
        "mu-lower": cmd_mu_lower,
        "paper-suite": cmd_paper_suite,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
