"""PSD-cone feasibility and rank reduction.

Three pieces live here:

* small eigenvalue optimization subproblems (min of lambda_max over a
  box, max of lambda_min over a ball), solved as tiny SDPs with cvxopt;
* the positive-definite intersection test for a span of Hermitian
  matrices, and the dual feasibility search for a trace-one PSD matrix
  orthogonal to that span (Dykstra alternating projections);
* rank reduction of a feasible point along null directions of the
  compressed constraints, down to the facial dimension bound.
"""

from dataclasses import dataclass

import numpy as np
from cvxopt import matrix, solvers

from .numerics import (eigh, herm, herm_dim, orth_basis, project_psd,
                       rank_of, unvec_herm, vec_herm)

solvers.options["show_progress"] = False

# retry ladder for conelp: tighter settings occasionally hit numerical
# breakdown (math domain error in the SOC scaling) on degenerate
# instances, so fall back to looser tolerances before giving up
_SOLVER_LADDER = (
    {"abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9, "refinement": 2},
    {"abstol": 1e-8, "reltol": 1e-8, "feastol": 1e-8, "refinement": 3},
    {"abstol": 1e-7, "reltol": 1e-7, "feastol": 1e-7, "refinement": 3},
)


def _embed_real(h):
    """Hermitian to real symmetric with the same eigenvalues (doubled)."""
    if not np.iscomplexobj(h):
        return np.asarray(h, dtype=float)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def min_lambda_max(b0, bs, box=None, ball=None):
    """min over z of lambda_max(b0 + sum_j z_j bs[j]).

    Constraints: |z_j| <= box (if given) and/or ||z|| <= ball (if given).
    Returns (value, z).  Solved as a small SDP through cvxopt's conelp;
    complex matrices are embedded as real symmetric ones.
    """
    bs = [np.asarray(b) for b in bs]
    b0 = np.asarray(b0)
    k = len(bs)
    if any(np.iscomplexobj(b) for b in [b0] + bs):
        b0 = b0.astype(complex)
        bs = [b.astype(complex) for b in bs]
    b0e = _embed_real(b0)
    bse = [_embed_real(b) for b in bs]
    m = b0e.shape[0]
    nvar = 1 + k  # objective t, then z
    c = np.zeros(nvar)
    c[0] = 1.0
    gl_rows, hl = [], []
    if box is not None:
        for j in range(k):
            row = np.zeros(nvar)
            row[1 + j] = 1.0
            gl_rows.append(row)
            hl.append(box)
            row = np.zeros(nvar)
            row[1 + j] = -1.0
            gl_rows.append(row)
            hl.append(box)
    dims = {"l": len(hl), "q": [], "s": [m]}
    gq = []
    if ball is not None:
        gq_block = np.zeros((1 + k, nvar))
        hq = np.zeros(1 + k)
        hq[0] = ball
        for j in range(k):
            gq_block[1 + j, 1 + j] = -1.0
        dims["q"] = [1 + k]
        gq = [(gq_block, hq)]
    # SDP block: t I - b0 - sum z_j b_j >= 0
    gs = np.zeros((m * m, nvar))
    gs[:, 0] = -np.eye(m).flatten("F")
    for j in range(k):
        gs[:, 1 + j] = bse[j].flatten("F")
    hs = (-b0e).flatten("F")
    grows, hrows = [], []
    if gl_rows:
        grows.append(np.array(gl_rows))
        hrows.append(np.array(hl))
    for gq_block, hq in gq:
        grows.append(gq_block)
        hrows.append(hq)
    grows.append(gs)
    hrows.append(hs)
    g = np.vstack(grows)
    h = np.concatenate(hrows)
    sol = None
    for opts in _SOLVER_LADDER:
        o = dict(solvers.options)
        o.update(opts)
        o["show_progress"] = False
        try:
            sol = solvers.conelp(matrix(c), matrix(g), matrix(h), dims,
                                 options=o)
        except (ValueError, ZeroDivisionError, ArithmeticError):
            sol = None
            continue
        if sol["status"] == "optimal":
            break
        sol = None
    if sol is None:
        raise ArithmeticError("eigenvalue subproblem did not converge")
    x = np.array(sol["x"]).ravel()
    return x[0], x[1:]


def max_lambda_min(bs, ball=1.0):
    """max over ||z|| <= ball of lambda_min(sum_j z_j bs[j])."""
    if not bs:
        return 0.0, np.zeros(0)
    b0 = np.zeros_like(np.asarray(bs[0]))
    val, z = min_lambda_max(b0, [-np.asarray(b) for b in bs], ball=ball)
    return -val, z


@dataclass(frozen=True)
class RankBound:
    """Facial dimension bound: minimal q admitting a rank-q solution.

    For a real subspace of dimension dimL the bound requires
    (q+1)(q+2)/2 - 2 >= dimL; in the complex Hermitian case
    (q+1)^2 - 2 >= dimL.
    """
    q: int
    field: str
    dimL: int


def rank_bound(dimL, field):
    q = 0
    while True:
        q += 1
        cap = (q + 1) * (q + 2) // 2 - 2 if field == "real" else (q + 1) ** 2 - 2
        if cap >= dimL:
            return RankBound(q, field, dimL)


def pd_intersection(p_list, field):
    """Does span(p_list) meet the positive definite cone?

    Returns (intersects, z, lam) where lam is the maximum over unit
    coefficient vectors z of lambda_min(sum z_j B_j) for an orthonormal
    basis B of the span, and intersects = (lam > 1e-6).
    """
    basis = orth_basis(p_list, field)
    if not basis:
        return False, np.zeros(0), 0.0
    lam, z = max_lambda_min(basis, ball=1.0)
    return lam > 1e-6, z, lam


@dataclass
class FeasibilityResult:
    X: np.ndarray
    residual: float
    status: str  # found | infeasible | stalled


def find_psd_orthogonal(p_list, field, r=None, tol=1e-8, max_iter=200_000,
                        cancel=None):
    """Trace-one PSD matrix orthogonal to every member of p_list.

    Dykstra alternating projections between the PSD cone and the affine
    set {<P_j, X> = 0, trace X = 1}, started at I/r.  Dykstra's
    correction terms matter here: the intersection can be a single point.
    Reports infeasible when the span meets the PD cone (conic duality:
    no orthogonal PSD matrix exists then).
    """
    p_list = [np.asarray(p) for p in p_list]
    if p_list:
        r = p_list[0].shape[0]
    if r is None:
        raise ValueError("dimension r required for empty constraint list")
    dtype = float if field == "real" else complex
    start = np.eye(r, dtype=dtype) / r
    if not p_list:
        return FeasibilityResult(start, 0.0, "found")
    inter, _, _ = pd_intersection(p_list, field)
    if inter:
        return FeasibilityResult(start, np.inf, "infeasible")

    basis = orth_basis(p_list, field)
    c = np.array([vec_herm(p, field) for p in basis]
                 + [vec_herm(np.eye(r), field)])
    b = np.zeros(len(c))
    b[-1] = 1.0
    cct_inv = np.linalg.inv(c @ c.T)

    def proj_affine(x):
        v = vec_herm(x, field)
        v = v + c.T @ (cct_inv @ (b - c @ v))
        return unvec_herm(v, r, field)

    def constraint_residual(z):
        res = max((abs(np.vdot(p, z).real) for p in p_list), default=0.0)
        return max(res, abs(np.trace(z).real - 1.0))

    x = start
    p_corr = np.zeros_like(x)
    q_corr = np.zeros_like(x)
    resid = np.inf
    for _ in range(max_iter):
        if cancel is not None and cancel():
            break
        y = project_psd(x + p_corr)
        p_corr = x + p_corr - y
        xn = proj_affine(y + q_corr)
        q_corr = y + q_corr - xn
        change = np.linalg.norm(xn - x)
        x = xn
        z = project_psd(x)
        resid = constraint_residual(z)
        if change < 1e-11 and resid < 1e-9:
            return FeasibilityResult(herm(z), resid, "found")
    z = project_psd(x)
    resid = constraint_residual(z)
    if resid <= tol:
        return FeasibilityResult(herm(z), resid, "found")
    return FeasibilityResult(herm(z), resid, "stalled")


class ReductionError(ArithmeticError):
    pass


def rank_reduce(x, p_list, target, cancel=None):
    """Reduce the rank of a feasible PSD point along compressed null directions.

    x must satisfy trace x = 1, <P_j, x> = 0, x >= 0 (a found
    FeasibilityResult).  Returns (x_reduced, guaranteed) where guaranteed
    is False when the final rank still exceeds target.q.

    Each step factors x = W L W*, finds a traceless Hermitian null matrix
    Y of the compressed constraints W* P_j W (the identity direction is
    projected out since trace is pinned), normalizes lambda_max(Y) = 1,
    and moves to W L^{1/2} (I - Y) L^{1/2} W*, which kills at least one
    eigenvalue.  Among candidate directions the one with the largest
    lambda_max(Y)/||Y||_F is taken, ties broken by basis order.
    """
    field = target.field
    x = herm(np.asarray(x))
    r = x.shape[0]
    p_list = [np.asarray(p) for p in p_list]
    for _ in range(r + 2):
        if cancel is not None and cancel():
            break
        w_eig, q_eig = eigh(x)
        lmax = w_eig[0]
        keep = w_eig > 1e-9 * lmax
        p = int(np.sum(keep))
        if p <= target.q:
            break
        w_fac = q_eig[:, keep] * np.sqrt(w_eig[keep])  # x = w_fac w_fac*
        compressed = [herm(w_fac.conj().T @ pj @ w_fac) for pj in p_list]
        d = herm_dim(p, field)
        if compressed:
            a = np.array([vec_herm(cm, field) for cm in compressed])
            _, s, vh = np.linalg.svd(a, full_matrices=True)
            rank = int(np.sum(s > 1e-9 * s[0])) if s.size and s[0] > 0 else 0
        else:
            vh = np.eye(d)
            rank = 0
        null = [unvec_herm(vh[i], p, field) for i in range(rank, d)]
        iv = vec_herm(np.eye(p), field) / np.sqrt(p)
        # forbidden directions: the constraint span plus the identity.
        # projecting out only the identity is not enough: a null vector
        # nearly parallel to it can leave a residue aligned with a small
        # constraint (the SVD null space is orthogonal to the raw vectors,
        # not to their identity complements), and stepping along a
        # constraint direction destroys feasibility
        forb = np.linalg.qr(np.column_stack(
            [vh[i] for i in range(rank)] + [iv]))[0] if rank else iv[:, None]
        cand = []
        for y in null:
            v = vec_herm(y, field)
            v = v - forb @ (forb.T @ v)
            nv = np.linalg.norm(v)
            if nv > 1e-9:
                cand.append(unvec_herm(v / nv, p, field))
        if not cand:
            break
        best = None
        for y in cand:
            ev, _ = eigh(y)
            for ys, l in ((y, ev[0]), (-y, -ev[-1])):
                ratio = l / np.linalg.norm(ys)
                if best is None or ratio > best[0] + 1e-12:
                    best = (ratio, ys, l)
        _, y, lmax_y = best
        t = 1.0 / lmax_y
        ev_y, q_y = eigh(y)
        inner = (q_y * (1.0 - t * ev_y)) @ q_y.conj().T
        xn = herm(w_fac @ inner @ w_fac.conj().T)
        min_eig = eigh(xn)[0][-1]
        if min_eig < -1e-7:
            raise ReductionError(
                f"rank reduction step broke positive semidefiniteness "
                f"(min eigenvalue {min_eig:.3e}); step rolled back")
        tr = np.trace(xn).real
        if tr <= 1e-12:
            break
        xn = xn / tr
        if rank_of(xn) >= p:
            break
        x = xn
    return x, rank_of(x) <= target.q
