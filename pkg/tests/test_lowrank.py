import numpy as np
import pytest

from ssv import certificates, fixtures
from ssv.lowrank import (FeasibilityResult, RankBound, ReductionError,
                         find_psd_orthogonal, max_lambda_min, min_lambda_max,
                         pd_intersection, rank_bound, rank_reduce)
from ssv.numerics import herm, orth_basis, rank_of


def random_herm(rng, r, cplx=False):
    a = rng.standard_normal((r, r))
    if cplx:
        a = a + 1j * rng.standard_normal((r, r))
    return herm(a)


def test_min_lambda_max_box():
    # b0 = diag(1, -1), single direction diag(-1, 1): optimum at z = 1
    # gives lambda_max = 0
    val, z = min_lambda_max(np.diag([1.0, -1.0]), [np.diag([-1.0, 1.0])],
                            box=1.0)
    assert val == pytest.approx(0.0, abs=1e-7)
    assert z[0] == pytest.approx(1.0, abs=1e-6)


def test_min_lambda_max_ball():
    val, z = min_lambda_max(np.zeros((2, 2)), [np.eye(2)], ball=2.0)
    assert val == pytest.approx(-2.0, abs=1e-7)


def test_min_lambda_max_complex_embedding():
    f = np.array([[0, 1j], [-1j, 0]])
    # lambda_max(z F) = |z|, minimized at z = 0
    val, z = min_lambda_max(np.zeros((2, 2), dtype=complex), [f], box=1.0)
    assert val == pytest.approx(0.0, abs=1e-7)


def test_max_lambda_min():
    val, z = max_lambda_min([np.eye(3) / np.sqrt(3)], ball=1.0)
    assert val == pytest.approx(1.0 / np.sqrt(3), abs=1e-7)
    # indefinite direction: z = 0 is optimal, lambda_min stays at 0
    val, z = max_lambda_min([np.diag([1.0, -1.0]) / np.sqrt(2)], ball=1.0)
    assert val == pytest.approx(0.0, abs=1e-7)
    assert max_lambda_min([])[0] == 0.0


def test_rank_bound_values():
    # real: (q+1)(q+2)/2 - 2 >= dimL
    assert rank_bound(1, "real").q == 1
    assert rank_bound(4, "real").q == 2
    assert rank_bound(8, "real").q == 3
    # complex: (q+1)^2 - 2 >= dimL
    assert rank_bound(2, "complex").q == 1
    assert rank_bound(7, "complex").q == 2
    assert rank_bound(14, "complex").q == 3
    rb = rank_bound(5, "real")
    assert isinstance(rb, RankBound) and rb.dimL == 5


def test_pd_intersection_obvious_cases():
    # the span basis is Frobenius-normalized, so the best unit combination
    # is I/sqrt(2) with lambda_min 1/sqrt(2)
    inter, z, lam = pd_intersection([np.eye(2)], "real")
    assert inter and lam == pytest.approx(1.0 / np.sqrt(2), abs=1e-6)
    inter, z, lam = pd_intersection([np.diag([1.0, -1.0])], "real")
    assert not inter and abs(lam) <= 1e-6
    inter, z, lam = pd_intersection([], "real")
    assert not inter


def test_pd_intersection_two_members():
    # span of diag(1,-1) and diag(0,1) contains diag(1, t-1) for any t:
    # positive definite points exist
    inter, z, lam = pd_intersection(
        [np.diag([1.0, -1.0]), np.diag([0.0, 1.0])], "real")
    assert inter


def test_find_psd_orthogonal_empty():
    res = find_psd_orthogonal([], "real", r=2)
    assert res.status == "found"
    assert np.allclose(res.X, np.eye(2) / 2)


def test_find_psd_orthogonal_infeasible():
    res = find_psd_orthogonal([np.eye(2)], "real")
    assert res.status == "infeasible"


def test_find_psd_orthogonal_unique_point():
    # orthogonal to diag(1,-1) with trace one: X = I/2 is the center
    res = find_psd_orthogonal([np.diag([1.0, -1.0])], "real")
    assert res.status == "found"
    assert res.residual <= 1e-9
    assert abs(np.vdot(np.diag([1.0, -1.0]), res.X).real) <= 1e-9


def test_find_psd_orthogonal_counterexample_family():
    """The six-scalar gap example: the only PSD matrix orthogonal to its
    family is I/3."""
    p = fixtures.load("counterexample1")
    tsvd = certificates.top_svd(p.matrix)
    pset = certificates.build_pset(tsvd, p.structure)
    res = find_psd_orthogonal(pset.members, pset.field)
    assert res.status == "found"
    assert np.allclose(res.X, np.eye(3) / 3, atol=1e-8)


def test_rank_reduce_trivial():
    x = np.diag([1.0, 0.0])
    out, ok = rank_reduce(x, [], RankBound(1, "real", 0))
    assert ok and rank_of(out) == 1


def test_rank_reduce_unconstrained():
    """No constraints: I/3 must reduce to a rank-one trace-one point."""
    out, ok = rank_reduce(np.eye(3) / 3, [], RankBound(1, "real", 0))
    assert ok
    assert rank_of(out) == 1
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)


def test_rank_reduce_respects_constraints():
    rng = np.random.default_rng(0)
    p1 = np.diag([1.0, -1.0, 0.0, 0.0])
    basis = orth_basis([p1], "real")
    feas = find_psd_orthogonal(basis, "real")
    assert feas.status == "found"
    target = rank_bound(len(basis), "real")
    out, ok = rank_reduce(feas.X, basis, target)
    assert ok
    assert rank_of(out) <= target.q
    assert abs(np.vdot(p1, out).real) <= 1e-9
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-9)


def _random_reduction_case(rng, r, dim_l, field):
    cplx = field == "complex"
    mats = [herm(rng.standard_normal((r, r))
                 + (1j * rng.standard_normal((r, r)) if cplx else 0))
            for _ in range(dim_l)]
    basis = orth_basis(mats, field)
    feas = find_psd_orthogonal(basis, field, max_iter=30_000)
    if feas.status != "found":
        return None
    target = rank_bound(len(basis), field)
    out, ok = rank_reduce(feas.X, basis, target)
    return basis, target, out, ok


def test_rank_reduce_random_real():
    rng = np.random.default_rng(1)
    done = 0
    for _ in range(40):
        case = _random_reduction_case(rng, 4, rng.integers(1, 4), "real")
        if case is None:
            continue
        basis, target, out, ok = case
        assert ok and rank_of(out) <= target.q
        for p in basis:
            assert abs(np.vdot(p, out).real) <= 1e-9
        done += 1
    assert done >= 10


def test_rank_reduce_random_complex():
    rng = np.random.default_rng(2)
    done = 0
    for _ in range(40):
        case = _random_reduction_case(rng, 3, rng.integers(1, 4), "complex")
        if case is None:
            continue
        basis, target, out, ok = case
        assert ok and rank_of(out) <= target.q
        for p in basis:
            assert abs(np.vdot(p, out).real) <= 1e-9
        done += 1
    assert done >= 10


def test_duality_consistency():
    """Intersection with the PD cone and dual feasibility must agree."""
    rng = np.random.default_rng(3)
    for _ in range(25):
        r = int(rng.integers(2, 5))
        k = int(rng.integers(1, 4))
        mats = [random_herm(rng, r) for _ in range(k)]
        inter, _, _ = pd_intersection(mats, "real")
        res = find_psd_orthogonal(mats, "real", max_iter=30_000)
        assert inter == (res.status == "infeasible")
