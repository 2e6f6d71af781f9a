"""Equality certificates for the structured singular value.

Pipeline: optimally scale the matrix, take the top singular-value
cluster, build the family of Hermitian trace-condition matrices from the
block rows of the singular vector factors, test whether the scaling is
stationary (no descent direction), then search for a common isotropic
vector eta of the family.  From eta a worst-case structured perturbation
is assembled, which certifies that the structured singular value equals
the convex upper bound.  When eta provably cannot exist the verdict is a
strict gap.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import numerics
from .lowrank import (RankBound, find_psd_orthogonal, pd_intersection,
                      rank_of, rank_reduce)
from .numerics import herm, orth_basis, vec_herm
from .scaling import (Scaling, UnsupportedStructureError, apply_scaling,
                      nu_upper, sigma_max)
from .structure import BlockStructure, Problem


class NumericalFailure(ArithmeticError):
    pass


class CertificateError(ValueError):
    pass


@dataclass
class TopSvd:
    sigma1: float
    r: int
    U: np.ndarray
    V: np.ndarray


@dataclass
class PSet:
    members: list
    field: str  # real | complex
    structure: BlockStructure
    r: int


@dataclass
class EtaCertificate:
    eta: np.ndarray
    max_residual: float


@dataclass
class Perturbation:
    blocks: list
    norm: float
    structure: BlockStructure

    def assemble(self):
        n = self.structure.n
        is_real = all(np.isrealobj(b) for b in self.blocks)
        out = np.zeros((n, n), dtype=float if is_real else complex)
        for sl, b in zip(self.structure.slices(), self.blocks):
            out[sl, sl] = b
        return out


@dataclass
class EqualityReport:
    nu: float
    sigma_at_opt: float
    verdict: str  # equal | gap | undecided
    d_opt: Scaling
    eta: Optional[EtaCertificate] = None
    delta: Optional[Perturbation] = None
    mu_lower: Optional[float] = None
    detail: str = ""


def top_svd(m, cluster_tol=1e-8):
    """Top singular value, its numerical multiplicity, and the vectors.

    r counts singular values within cluster_tol (relative) of the
    largest.  Real input yields real factors.
    """
    m = np.asarray(m)
    s, u, v = numerics.svd(m)
    if s[0] == 0.0:
        raise ValueError("zero matrix has no top singular subspace")
    r = int(np.sum(s >= s[0] * (1 - cluster_tol)))
    return TopSvd(float(s[0]), r, u[:, :r], v[:, :r])


def _herm_basis(nj):
    """E and F generators of Hermitian nj x nj matrices.

    E_kl has ones at (k,l) and (l,k); F_kl has i at (k,l) and -i at
    (l,k).  Returns (list of E, list of F).
    """
    es, fs = [], []
    for k in range(nj):
        for l in range(k, nj):
            e = np.zeros((nj, nj))
            e[k, l] = 1.0
            e[l, k] = 1.0
            es.append(e)
    for k in range(nj):
        for l in range(k + 1, nj):
            f = np.zeros((nj, nj), dtype=complex)
            f[k, l] = 1j
            f[l, k] = -1j
            fs.append(f)
    return es, fs


def build_pset(tsvd, structure, drop_tol=1e-7):
    """Construct the trace-condition family from the block rows of U, V.

    Full blocks contribute one member each, with the last full block
    omitted (the members sum to zero over all full blocks, so it is
    redundant).  Each repeated-scalar block contributes a whole family,
    one member per Hermitian generator of its size.  Members with norm
    at most drop_tol are dropped; at a stationary scaling these carry no
    information and would otherwise inject noise directions.
    """
    u, v = tsvd.U, tsvd.V
    real_in = np.isrealobj(u) and np.isrealobj(v)
    members = []
    complex_needed = not real_in
    slices = structure.slices()
    full_idx = [i for i, b in enumerate(structure.blocks) if b.kind == "full"]
    for i, b in enumerate(structure.blocks):
        sl = slices[i]
        uj = u[sl]
        vj = v[sl]
        if b.kind == "full":
            if full_idx and i == full_idx[-1]:
                continue  # omitted member
            pj = herm(uj.conj().T @ uj - vj.conj().T @ vj)
            if np.linalg.norm(pj) > drop_tol:
                members.append(pj)
        else:
            es, fs = _herm_basis(b.size)
            for e in es:
                pj = herm(uj.conj().T @ e @ uj - vj.conj().T @ e @ vj)
                if np.linalg.norm(pj) > drop_tol:
                    members.append(pj)
            for f in fs:
                pj = herm(uj.conj().T @ f @ uj - vj.conj().T @ f @ vj)
                if np.linalg.norm(pj) > drop_tol:
                    members.append(pj)
                    complex_needed = True
    field = "complex" if complex_needed else "real"
    if field == "real":
        members = [np.real(p) for p in members]
    return PSet(members, field, structure, tsvd.r)


def check_optimal_scaling(pset, span_rtol=1e-9):
    """True iff the span of the family misses the positive definite cone."""
    basis = orth_basis(pset.members, pset.field, rtol=span_rtol)
    inter, _, _ = pd_intersection(basis, pset.field)
    return not inter


def find_eta(pset, span_rtol=1e-9):
    """Common isotropic vector of the family, or None if none exists.

    Real field: feasibility plus rank reduction to rank two, then
    eta = sqrt(l1) w1 + i sqrt(l2) w2 so that Re(eta eta*) equals the
    reduced matrix.  Complex field: reduction to rank one and eta is the
    factor.  None means the reduction provably stops above the target
    (the strict-gap situation).  Solver stalls raise NumericalFailure.
    """
    field = pset.field
    basis = orth_basis(pset.members, field, rtol=span_rtol)
    feas = find_psd_orthogonal(basis, field, r=pset.r)
    if feas.status == "infeasible":
        return None
    if feas.status == "stalled":
        raise NumericalFailure(
            f"feasibility search stalled at residual {feas.residual:.3e}")
    q_target = 2 if field == "real" else 1
    target = RankBound(q_target, field, len(basis))
    x, _ = rank_reduce(feas.X, basis, target)
    rk = rank_of(x)
    if rk > q_target:
        return None
    w, q = numerics.eigh(x)
    w = np.clip(w, 0.0, None)
    if field == "real" and rk == 2:
        eta = q[:, 0] * np.sqrt(w[0]) + 1j * q[:, 1] * np.sqrt(w[1])
    else:
        eta = (q[:, 0] * np.sqrt(w[0])).astype(complex)
    nrm = np.linalg.norm(eta)
    if nrm == 0.0:
        return None
    eta = eta / nrm
    # deterministic phase: first nonzero component real positive
    idx = np.flatnonzero(np.abs(eta) > 1e-9)
    i0 = int(idx[0]) if idx.size else int(np.argmax(np.abs(eta)))
    eta = eta * (abs(eta[i0]) / eta[i0])
    maxres = max((abs(np.vdot(eta, p @ eta)) for p in pset.members),
                 default=0.0)
    if maxres > 1e-7:
        raise NumericalFailure(
            f"isotropy residual {maxres:.3e} above certificate tolerance")
    return EtaCertificate(eta, float(maxres))


def delta_from_eta(cert, tsvd, structure):
    """Worst-case perturbation from an isotropy certificate.

    Per full block: Delta_j = (V_j eta)(U_j eta)* / (sigma1 ||U_j eta||^2),
    or the zero block when eta is orthogonal to both row ranges.  The
    assembled Delta has norm 1/sigma1 and I - sigma1 U V* Delta is
    singular with null vector U eta.
    """
    if structure.S > 0:
        raise UnsupportedStructureError(
            "perturbation construction supports full blocks only")
    eta = cert.eta
    s1 = tsvd.sigma1
    blocks = []
    for sl, b in zip(structure.slices(), structure.blocks):
        uj = tsvd.U[sl]
        vj = tsvd.V[sl]
        ue = uj @ eta
        ve = vj @ eta
        nu_e = np.linalg.norm(ue)
        nv_e = np.linalg.norm(ve)
        if nu_e <= 1e-9 and nv_e <= 1e-9:
            blocks.append(np.zeros((b.size, b.size)))
            continue
        if abs(nu_e - nv_e) > 1e-6:
            raise CertificateError(
                f"row-range norms differ by {abs(nu_e - nv_e):.3e}: "
                "certificate invalid for this structure")
        db = np.outer(ve, ue.conj()) / (s1 * nu_e ** 2)
        if np.max(np.abs(db.imag)) <= 1e-12:
            db = db.real.copy()
        blocks.append(db)
    full = np.zeros((structure.n, structure.n), dtype=complex)
    for sl, db in zip(structure.slices(), blocks):
        full[sl, sl] = db
    norm = sigma_max(full)
    return Perturbation(blocks, norm, structure)


def _x_from_scaling(d):
    d = np.asarray(d, dtype=float)
    return np.log(d[:-1] / d[-1])


def _cluster_span_parts(m, sizes, x, r):
    """Cluster gap and singular spectrum of the stacked member family at x."""
    d = np.exp(np.append(x, 0.0))
    root = np.sqrt(np.concatenate([np.full(s, v) for v, s in zip(d, sizes)]))
    w = (root[:, None] * m) / root[None, :]
    u, s, vh = np.linalg.svd(w)
    gap = (s[0] - s[r - 1]) / s[0]
    ur = u[:, :r]
    vr = vh[:r].conj().T
    if np.isrealobj(m):
        ur, vr = ur.real, vr.real
    field = "real" if np.isrealobj(m) else "complex"
    members = []
    off = 0
    for sz in sizes[:-1]:
        sl = slice(off, off + sz)
        pj = herm(ur[sl].conj().T @ ur[sl] - vr[sl].conj().T @ vr[sl])
        if np.linalg.norm(pj) > 1e-7:
            members.append(pj)
        off += sz
    if not members:
        return gap, np.zeros(0)
    a = np.array([vec_herm(pj, field) for pj in members])
    return gap, np.linalg.svd(a, compute_uv=False)


def _refine_scaling(m, sizes, x, r):
    """Polish the scaling so cluster degeneracy and span-rank deficiency
    hold to machine accuracy.

    Generic descent on sigma_1 stalls around 1e-8 along flat directions
    (the objective responds only quadratically there), which leaves noise
    of that size in the member family.  Both defects vanish exactly at
    the optimum, and their sum of squares is smooth with a zero minimum,
    so a derivative-free local search recovers the remaining digits
    without moving the objective.
    """
    gap0, sv0 = _cluster_span_parts(m, sizes, x, r)
    if len(sv0) == 0:
        return x
    k = int(np.sum(sv0 < 1e-4 * sv0[0]))
    if k == 0 and gap0 < 1e-12:
        return x
    x0 = np.asarray(x, dtype=float)

    def psi(xv):
        if np.max(np.abs(xv - x0)) > 0.5:
            return 1e6
        try:
            gap, sv = _cluster_span_parts(m, sizes, xv, r)
        except np.linalg.LinAlgError:
            return 1e6
        noise = sv[len(sv) - k:] if k else np.zeros(0)
        return gap ** 2 + float(np.sum(noise ** 2))

    res = minimize(psi, x0, method="Nelder-Mead",
                   options=dict(xatol=1e-12, fatol=1e-24, maxiter=4000))
    g_old = _cluster_sigma1(m, sizes, x0)
    g_new = _cluster_sigma1(m, sizes, res.x)
    gap1, sv1 = _cluster_span_parts(m, sizes, res.x, r)
    # only accept if the targeted directions really collapsed: a genuine
    # span direction cannot be driven to zero and must be kept
    killed = (k == 0) or (len(sv1) >= k and sv1[len(sv1) - k] < 1e-8 * sv1[0])
    if res.fun < psi(x0) and g_new <= g_old * (1 + 1e-10) and killed and gap1 < 1e-10:
        return res.x
    return x0


def _cluster_sigma1(m, sizes, x):
    d = np.exp(np.append(x, 0.0))
    root = np.sqrt(np.concatenate([np.full(s, v) for v, s in zip(d, sizes)]))
    w = (root[:, None] * m) / root[None, :]
    return np.linalg.svd(w, compute_uv=False)[0]


def _gap_is_certain(pset):
    """Strict-gap cross-check: one-dimensional complement spanned by the
    identity forces every candidate eta to have zero norm."""
    comp = numerics.orthonormal_complement(pset.members, pset.field,
                                           dim=pset.r)
    if len(comp) != 1:
        return False
    c = comp[0]
    eye = np.eye(pset.r) / np.sqrt(pset.r)
    return abs(abs(np.vdot(c, eye)) - 1.0) < 1e-8


def check_equality(problem, cluster_tol=1e-8, span_rtol=1e-6, tol=1e-8):
    """Decide whether the structured singular value attains its upper bound.

    Full-block structures get the complete pipeline: scaling
    optimization, stationarity test, isotropic-vector search, and
    perturbation construction with independent verification.  Structures
    with repeated-scalar blocks are analyzed at the identity scaling
    only; a strict gap can still be certified, but a found eta yields
    verdict undecided since the perturbation construction for such
    blocks is not available.
    """
    m = np.asarray(problem.matrix)
    structure = problem.structure
    if structure.S == 0:
        nu_res = nu_upper(m, structure, tol=tol)
        d_opt = nu_res.d_opt
        sizes = structure.sizes
        w = apply_scaling(m, d_opt)
        tsvd = top_svd(w, cluster_tol)
        if tsvd.r >= 2 and structure.F > 1:
            x = _refine_scaling(m, sizes, _x_from_scaling(d_opt.d), tsvd.r)
            d_opt = Scaling(np.exp(np.append(x, 0.0)), structure)
            w = apply_scaling(m, d_opt)
            tsvd = top_svd(w, cluster_tol)
        nu = tsvd.sigma1
    else:
        d_opt = Scaling.identity(structure)
        w = m
        tsvd = top_svd(w, cluster_tol)
        nu = tsvd.sigma1
    pset = build_pset(tsvd, structure)
    basis = orth_basis(pset.members, pset.field, rtol=span_rtol)
    inter, _, lam = pd_intersection(basis, pset.field)
    if inter:
        return EqualityReport(nu, tsvd.sigma1, "undecided", d_opt,
                              detail=f"scaling not stationary (lambda="
                                     f"{lam:.3e}); result is inconclusive")
    try:
        cert = find_eta(pset, span_rtol=span_rtol)
    except (NumericalFailure, ArithmeticError) as e:
        return EqualityReport(nu, tsvd.sigma1, "undecided", d_opt,
                              detail=str(e))
    if cert is None:
        detail = "no isotropic vector exists"
        if _gap_is_certain(pset):
            detail += (": complement is spanned by the identity, "
                       "so any candidate would need zero norm")
        return EqualityReport(nu, tsvd.sigma1, "gap", d_opt, detail=detail)
    if structure.S > 0:
        return EqualityReport(nu, tsvd.sigma1, "undecided", d_opt, eta=cert,
                              detail="isotropic vector found but the "
                                     "perturbation construction for "
                                     "repeated-scalar blocks is out of scope")
    try:
        delta = delta_from_eta(cert, tsvd, structure)
    except CertificateError as e:
        return EqualityReport(nu, tsvd.sigma1, "undecided", d_opt, eta=cert,
                              detail=str(e))
    # independent verification on the original matrix: the scaling
    # commutes with block-diagonal perturbations, so delta built for the
    # scaled matrix certifies m directly
    full = delta.assemble()
    prod = delta.norm * nu
    smin = float(np.linalg.svd(np.eye(structure.n) - m @ full,
                               compute_uv=False)[-1])
    if abs(prod - 1.0) > 1e-6 or smin > 1e-6:
        return EqualityReport(nu, tsvd.sigma1, "undecided", d_opt, eta=cert,
                              delta=delta,
                              detail=f"certificate failed verification "
                                     f"(norm product {prod:.9f}, "
                                     f"singularity residual {smin:.3e})")
    return EqualityReport(nu, tsvd.sigma1, "equal", d_opt, eta=cert,
                          delta=delta, mu_lower=nu)


def mu_lower_search(problem, seeds=32, budget=300, seed=0,
                    return_delta=False):
    """Heuristic lower bound by randomized alternating maximization.

    Runs a power-iteration style ascent of the spectral radius of
    M Delta over unit-norm structured Delta from random starts.  Any
    eigenvalue lambda of M Delta yields a singularizing perturbation
    Delta/lambda of norm 1/|lambda|, so the best |lambda| found is a
    valid lower bound, never claimed tight.  Deterministic for fixed
    seed and seeds.
    """
    m = np.asarray(problem.matrix, dtype=complex)
    structure = problem.structure
    n = structure.n
    rng = np.random.default_rng(seed)
    slices = structure.slices()
    best_val = 0.0
    best_delta = None

    def radius(dmat):
        return np.max(np.abs(np.linalg.eigvals(m @ dmat)))

    for _ in range(seeds):
        dmat = np.zeros((n, n), dtype=complex)
        for sl, b in zip(slices, structure.blocks):
            if b.kind == "full":
                blk = (rng.standard_normal((b.size, b.size))
                       + 1j * rng.standard_normal((b.size, b.size)))
                dmat[sl, sl] = blk / np.linalg.svd(blk, compute_uv=False)[0]
            else:
                ph = rng.standard_normal() + 1j * rng.standard_normal()
                dmat[sl, sl] = (ph / abs(ph)) * np.eye(b.size)
        lam_prev = 0.0
        for _ in range(budget):
            prod_mat = m @ dmat
            ev, evec = np.linalg.eig(prod_mat)
            i = int(np.argmax(np.abs(ev)))
            lam = abs(ev[i])
            v = evec[:, i]
            evl, evecl = np.linalg.eig(prod_mat.conj().T)
            j = int(np.argmax(np.abs(evl)))
            u = evecl[:, j]
            g = m.conj().T @ u
            new = np.zeros((n, n), dtype=complex)
            for sl, b in zip(slices, structure.blocks):
                gj = g[sl]
                vj = v[sl]
                if b.kind == "full":
                    ng, nv = np.linalg.norm(gj), np.linalg.norm(vj)
                    if ng < 1e-14 or nv < 1e-14:
                        new[sl, sl] = dmat[sl, sl]
                    else:
                        new[sl, sl] = np.outer(gj / ng, (vj / nv).conj())
                else:
                    z = np.vdot(gj, vj)
                    if abs(z) < 1e-14:
                        new[sl, sl] = dmat[sl, sl]
                    else:
                        new[sl, sl] = (z / abs(z)) * np.eye(b.size)
            lam_new = radius(new)
            if lam_new >= lam:
                dmat = new
            else:
                break
            if abs(lam_new - lam_prev) < 1e-12:
                break
            lam_prev = lam_new
        ev = np.linalg.eigvals(m @ dmat)
        i = int(np.argmax(np.abs(ev)))
        lam_c = ev[i]
        if abs(lam_c) <= best_val or abs(lam_c) == 0.0:
            continue
        # verify singularity of I - M (Delta/lambda)
        cand = dmat / lam_c
        smin = np.linalg.svd(np.eye(n) - m @ cand, compute_uv=False)[-1]
        if smin <= 1e-9:
            best_val = abs(lam_c)
            best_delta = cand
    if return_delta:
        pert = None
        if best_delta is not None:
            blocks = [best_delta[sl, sl] for sl in slices]
            pert = Perturbation(blocks, sigma_max(best_delta), structure)
        return best_val, pert
    return best_val


def real_perturbation_exists(problem, span_rtol=1e-9):
    """Can a real isotropic vector be found at the identity scaling?

    Requires a real, optimally scaled matrix.  Decided by the real
    rank-one path: feasibility plus rank reduction targeting rank 1.
    """
    m = np.asarray(problem.matrix)
    if not np.isrealobj(m):
        raise ValueError("real matrix required")
    tsvd = top_svd(m)
    pset = build_pset(tsvd, problem.structure)
    if pset.field != "real":
        # a real vector only feels the real (symmetric) part of each
        # member: the imaginary part of a Hermitian matrix is
        # antisymmetric and vanishes in the quadratic form
        members = [p for p in (np.real(pj) for pj in pset.members)
                   if np.linalg.norm(p) > 1e-9]
        pset = PSet(members, "real", problem.structure, tsvd.r)
    if not check_optimal_scaling(pset):
        raise ValueError("matrix is not optimally scaled")
    basis = orth_basis(pset.members, "real", rtol=span_rtol)
    feas = find_psd_orthogonal(basis, "real", r=pset.r)
    if feas.status != "found":
        return False
    x, _ = rank_reduce(feas.X, basis, RankBound(1, "real", len(basis)))
    if rank_of(x) > 1:
        return False
    w, q = numerics.eigh(x)
    eta = q[:, 0]
    res = max((abs(eta @ p @ eta) for p in pset.members), default=0.0)
    return bool(res <= 1e-7)
