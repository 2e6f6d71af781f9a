"""End-to-end acceptance suite.

Each test covers one numbered acceptance criterion and prints a single
pass/fail line; tolerances are pinned, not adjustable.
"""

import os
import subprocess
import sys

import numpy as np

from ssv import fixtures
from ssv.certificates import (build_pset, check_equality, find_eta,
                              mu_lower_search, real_perturbation_exists,
                              top_svd)
from ssv.lowrank import (find_psd_orthogonal, pd_intersection, rank_bound,
                         rank_reduce)
from ssv.numerics import herm, orth_basis, orthonormal_complement, rank_of
from ssv.scaling import Scaling, apply_scaling, nu_upper, sigma_max
from ssv.structure import Problem, full_blocks


def report(num, desc, ok):
    print(f"criterion {num:02d} [{desc}]: {'pass' if ok else 'FAIL'}")
    assert ok, f"criterion {num:02d} failed: {desc}"


def complement_is_identity(problem, atol=1e-8):
    tsvd = top_svd(np.asarray(problem.matrix))
    pset = build_pset(tsvd, problem.structure)
    comp = orthonormal_complement(pset.members, pset.field, dim=tsvd.r)
    if len(comp) != 1:
        return False
    eye = np.eye(tsvd.r) / np.sqrt(tsvd.r)
    return abs(abs(np.vdot(comp[0], eye)) - 1.0) < atol


def certified_equal(m, structure):
    """verdict=equal with the certificate verified by plain svd calls."""
    rep = check_equality(Problem(m, structure))
    if rep.verdict != "equal" or rep.delta is None:
        return False, rep
    full = rep.delta.assemble()
    prod = sigma_max(full) * rep.nu
    smin = np.linalg.svd(np.eye(structure.n) - m @ full,
                         compute_uv=False)[-1]
    return abs(prod - 1.0) <= 1e-6 and smin <= 1e-6, rep


def test_criterion_01_counterexample1():
    p = fixtures.load("counterexample1")
    rep = check_equality(p)
    ok = abs(rep.nu - 1.0) <= 1e-6 and abs(rep.sigma_at_opt - 1.0) <= 1e-6
    ok = ok and complement_is_identity(p)
    tsvd = top_svd(p.matrix)
    ok = ok and find_eta(build_pset(tsvd, p.structure)) is None
    mu = mu_lower_search(p, seeds=16, seed=0)
    ok = ok and mu <= 1.0 - 1e-3
    report(1, "six real scalar blocks: nu=1, identity complement, gap", ok)


def test_criterion_02_counterexample2():
    p = fixtures.load("counterexample2")
    rep = check_equality(p)
    ok = (complement_is_identity(p) and abs(rep.nu - 1.0) <= 1e-6
          and rep.verdict == "gap")
    report(2, "four complex scalar blocks: identity complement, gap", ok)


def test_criterion_03_real_five_blocks():
    structure = full_blocks([2] * 5)
    ok = True
    for seed in range(200):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((10, 10))
        good, rep = certified_equal(m, structure)
        if not good:
            print(f"  seed {seed}: verdict={rep.verdict}")
            ok = False
    report(3, "200 random real, five full 2x2 blocks, all certified equal",
           ok)


def test_criterion_04_complex_three_blocks():
    structure = full_blocks([2] * 3)
    ok = True
    for seed in range(200):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        good, rep = certified_equal(m, structure)
        if not good:
            print(f"  seed {seed}: verdict={rep.verdict}")
            ok = False
    report(4, "200 random complex, three full 2x2 blocks, all certified "
              "equal", ok)


def test_criterion_05_real_two_blocks_real_delta():
    structure = full_blocks([2, 2])
    ok = True
    for seed in range(200):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((4, 4))
        good, rep = certified_equal(m, structure)
        if good:
            full = rep.delta.assemble()
            good = np.max(np.abs(np.imag(full))) <= 1e-10
        if not good:
            print(f"  seed {seed}: verdict={rep.verdict}")
            ok = False
    report(5, "200 random real, two full blocks, real worst-case delta", ok)


def test_criterion_06_counterexamples_3_to_6():
    expected = {
        "counterexample3": "equal",
        "counterexample4": "gap",
        "counterexample5": "gap",
        "counterexample6": "undecided",
    }
    ok = True
    for name, verdict in expected.items():
        p = fixtures.load(name)
        rep = check_equality(p)
        good = rep.verdict == verdict and complement_is_identity(p)
        if name == "counterexample6":
            good = good and rep.eta is not None
        if not good:
            print(f"  {name}: verdict={rep.verdict}")
            ok = False
    ok = ok and real_perturbation_exists(fixtures.load("counterexample3")) \
        is False
    ok = ok and real_perturbation_exists(fixtures.load("counterexample6")) \
        is False
    report(6, "counterexamples 3-6 verdicts, identity complements, no real "
              "delta for 3 and 6", ok)


def _rank_reduction_sweep(field, count, seed):
    rng = np.random.default_rng(seed)
    r = 4 if field == "real" else 3
    successes = 0
    ok = True
    for _ in range(count):
        dim_l = int(rng.integers(1, 4))
        mats = []
        for _ in range(dim_l):
            a = rng.standard_normal((r, r))
            if field == "complex":
                a = a + 1j * rng.standard_normal((r, r))
            mats.append(herm(a))
        basis = orth_basis(mats, field)
        feas = find_psd_orthogonal(basis, field, max_iter=40_000)
        if feas.status != "found":
            continue
        successes += 1
        target = rank_bound(len(basis), field)
        x, guaranteed = rank_reduce(feas.X, basis, target)
        if not guaranteed or rank_of(x) > target.q:
            ok = False
        for p in basis:
            if abs(np.vdot(p, x).real) > 1e-9:
                ok = False
        if abs(np.trace(x).real - 1.0) > 1e-9:
            ok = False
    return ok, successes


def test_criterion_07_rank_bounds():
    ok_r, n_r = _rank_reduction_sweep("real", 500, seed=10)
    ok_c, n_c = _rank_reduction_sweep("complex", 500, seed=11)
    ok = ok_r and ok_c and n_r >= 100 and n_c >= 100
    report(7, f"rank reduction meets facial bound ({n_r} real, {n_c} "
              "complex feasible instances)", ok)


def test_criterion_08_scaling_sanity():
    res = nu_upper([[0.0, 4.0], [1.0, 0.0]], full_blocks([1, 1]))
    ok = abs(res.nu - 2.0) <= 1e-6  # analytic: sqrt(4 * 1)
    rng = np.random.default_rng(12)
    m = rng.standard_normal((4, 4))
    structure = full_blocks([2, 1, 1])
    base = nu_upper(m, structure).nu
    for _ in range(50):
        d = np.exp(rng.uniform(-2.0, 2.0, size=3))
        w = apply_scaling(m, Scaling(d, structure))
        if abs(nu_upper(w, structure).nu - base) > 2e-6:
            ok = False
    report(8, "nu([[0,4],[1,0]])=2 and invariance under 50 scalings", ok)


def test_criterion_09_duality_consistency():
    ok = True
    for field, seed in (("real", 20), ("complex", 21)):
        rng = np.random.default_rng(seed)
        for _ in range(250):
            r = int(rng.integers(2, 5))
            k = int(rng.integers(1, 5))
            mats = []
            for _ in range(k):
                a = rng.standard_normal((r, r))
                if field == "complex":
                    a = a + 1j * rng.standard_normal((r, r))
                mats.append(herm(a))
            if rng.uniform() < 0.3:
                # bias some spans toward the cone interior
                mats.append(np.eye(r) + 0.1 * mats[0])
            inter, _, _ = pd_intersection(mats, field)
            res = find_psd_orthogonal(mats, field, max_iter=40_000)
            if inter != (res.status == "infeasible"):
                ok = False
    report(9, "500 random P-sets: intersection test and dual feasibility "
              "agree", ok)


def test_criterion_10_paper_suite_cli():
    env = dict(os.environ, SSV_SEED="3")
    cmd = [sys.executable, "-m", "ssv.cli", "paper-suite", "--seeds", "8",
           "--json"]
    runs = [subprocess.run(cmd, env=env, capture_output=True)
            for _ in range(2)]
    ok = all(r.returncode == 0 for r in runs)
    ok = ok and runs[0].stdout == runs[1].stdout
    ok = ok and b'"passed":true' in runs[0].stdout
    report(10, "paper-suite exits 0 and is byte-identical under a fixed "
               "seed", ok)
