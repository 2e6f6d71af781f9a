"""Largest singular value and its convex upper bound over D-scalings.

The bound is nu = inf over positive block-diagonal D of
sigma_max(D^(1/2) M D^(-1/2)) with one positive scalar d_j per full
block.  Parameterizing d_j = exp(x_j) with the last entry pinned to 1
removes the overall scaling redundancy and makes the problem smooth
almost everywhere.

The optimizer runs in stages: Schatten-norm smoothing with increasing
exponent to get close, a quasi-Newton descent on sigma_1 itself to ride
ill-conditioned valleys, a trust-region phase built on a spectral
linearization of the top singular-value cluster (the subproblem is a
tiny eigenvalue SDP), and a Newton polish on the analytic gradient when
the top singular value stays simple.  Nonsmooth minima, where several
singular values coalesce, are exactly the interesting case downstream,
so the trust-region phase has to do the heavy lifting there.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .lowrank import min_lambda_max, pd_intersection
from .numerics import herm
from .structure import BlockStructure


class UnsupportedStructureError(ValueError):
    pass


@dataclass(frozen=True)
class Scaling:
    """One positive scalar per full block, last entry normalized to 1."""
    d: np.ndarray
    structure: BlockStructure

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if np.any(d <= 0):
            raise ValueError("scaling entries must be positive")
        if len(d) != self.structure.F:
            raise ValueError("one scaling entry per full block required")
        object.__setattr__(self, "d", d / d[-1] if d.size else d)

    @classmethod
    def identity(cls, structure):
        return cls(np.ones(structure.F), structure)


@dataclass
class NuResult:
    nu: float
    d_opt: Scaling
    iterations: int
    gap_estimate: float
    converged: bool = True


def sigma_max(m):
    return float(np.linalg.svd(np.asarray(m), compute_uv=False)[0])


def _expand(vals, sizes):
    return np.concatenate([np.full(s, v) for v, s in zip(vals, sizes)])


def apply_scaling(m, scaling):
    """D^(1/2) M D^(-1/2) with D = diag(d_j I_{n_j})."""
    m = np.asarray(m)
    sizes = scaling.structure.sizes
    if m.shape[0] != scaling.structure.n:
        raise ValueError("dimension mismatch")
    d = _expand(scaling.d, sizes)
    root = np.sqrt(d)
    return (root[:, None] * m) / root[None, :]


def _apply_x(m, x, sizes):
    d = np.exp(_expand(np.append(x, 0.0), sizes))
    root = np.sqrt(d)
    return (root[:, None] * m) / root[None, :]


def _schatten(x, m, sizes, p):
    """Smoothed objective (Schatten-p norm of the scaled matrix) + gradient."""
    w = _apply_x(m, x, sizes)
    u, s, vh = np.linalg.svd(w)
    s1 = s[0]
    val = s1 * (np.sum((s / s1) ** p)) ** (1.0 / p)
    coef = (s / val) ** (p - 1)
    grad = np.zeros(len(sizes) - 1)
    off = 0
    for j in range(len(sizes) - 1):
        sl = slice(off, off + sizes[j])
        dsig = 0.5 * s * (np.sum(np.abs(u[sl]) ** 2, axis=0)
                          - np.sum(np.abs(vh[:, sl]) ** 2, axis=1))
        grad[j] = np.dot(coef, dsig)
        off += sizes[j]
    return val, grad


def _sigma1_grad(x, m, sizes):
    """sigma_1 and its gradient in x (valid while sigma_1 is simple)."""
    w = _apply_x(m, x, sizes)
    if not np.all(np.isfinite(w)):
        return 1e30, np.zeros(len(sizes) - 1)
    u, s, vh = np.linalg.svd(w)
    grad = np.zeros(len(sizes) - 1)
    off = 0
    for j in range(len(sizes) - 1):
        sl = slice(off, off + sizes[j])
        grad[j] = 0.5 * s[0] * (np.sum(np.abs(u[sl, 0]) ** 2)
                                - np.sum(np.abs(vh[0, sl]) ** 2))
        off += sizes[j]
    return s[0], grad


def _spectral_model(m, x, sizes):
    """First-order model of all singular values around x."""
    w = _apply_x(m, x, sizes)
    u, s, vh = np.linalg.svd(w)
    v = vh.conj().T
    bs = []
    off = 0
    for j in range(len(sizes) - 1):
        sl = slice(off, off + sizes[j])
        uj = u[sl]
        vj = v[sl]
        a = 0.5 * ((uj.conj().T @ uj) * s[None, :] - s[:, None] * (vj.conj().T @ vj))
        bs.append(herm(a))
        off += sizes[j]
    return bs, s


def _polish_simple(m, sizes, x):
    """Final refinement when sigma_1 is simple at x.

    L-BFGS first; once function decrements fall under machine noise the
    analytic gradient is still accurate, so finish with Newton steps on
    the gradient (finite-difference Jacobian).
    """
    s = np.linalg.svd(_apply_x(m, x, sizes), compute_uv=False)
    if len(s) > 1 and (s[0] - s[1]) / s[0] < 1e-6:
        return x  # clustered top value: not smooth here
    res = minimize(_sigma1_grad, x, args=(m, sizes), jac=True,
                   method="L-BFGS-B",
                   options=dict(maxiter=500, ftol=1e-16, gtol=1e-12))
    s2 = np.linalg.svd(_apply_x(m, res.x, sizes), compute_uv=False)
    if s2[0] <= s[0] and (s2[0] - s2[1]) / s2[0] > 1e-8:
        x = res.x
    k = len(x)
    h = 1e-6
    for _ in range(6):
        _, gr = _sigma1_grad(x, m, sizes)
        if np.linalg.norm(gr) < 1e-11:
            break
        jac = np.zeros((k, k))
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            jac[:, j] = (_sigma1_grad(x + e, m, sizes)[1]
                         - _sigma1_grad(x - e, m, sizes)[1]) / (2 * h)
        try:
            dx = np.linalg.solve(jac, -gr)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dx)) or np.linalg.norm(dx) > 1e-2:
            break
        xn = x + dx
        _, grn = _sigma1_grad(xn, m, sizes)
        sn = np.linalg.svd(_apply_x(m, xn, sizes), compute_uv=False)
        if np.linalg.norm(grn) < np.linalg.norm(gr) and (sn[0] - sn[1]) / sn[0] > 1e-8:
            x = xn
        else:
            break
    return x


def _gap_estimate(m, x, sizes, cluster_tol=1e-8):
    """Stationarity measure at x: value of the descent-direction test.

    Builds the P matrices of the top singular cluster and returns the
    best achievable lambda_min over the unit ball of their span; zero
    (up to tolerance) certifies a stationary scaling.
    """
    w = _apply_x(m, x, sizes)
    u, s, vh = np.linalg.svd(w)
    r = int(np.sum(s >= s[0] * (1 - cluster_tol)))
    ur = u[:, :r]
    vr = vh[:r].conj().T
    if np.isrealobj(m):
        ur, vr = ur.real, vr.real
    field = "real" if np.isrealobj(m) else "complex"
    p_list = []
    off = 0
    for j in range(len(sizes) - 1):
        sl = slice(off, off + sizes[j])
        pj = herm(ur[sl].conj().T @ ur[sl] - vr[sl].conj().T @ vr[sl])
        if np.linalg.norm(pj) > 1e-7:
            p_list.append(pj)
        off += sizes[j]
    _, _, lam = pd_intersection(p_list, field)
    return max(float(lam), 0.0)


def nu_upper(m, structure, tol=1e-8, max_iter=300):
    """Minimize sigma_max over diagonal D-scalings of the full blocks.

    Deterministic for fixed inputs.  Raises UnsupportedStructureError
    for structures containing repeated-scalar blocks (those admit full
    matrix scalings, which are out of scope here).
    """
    m = np.asarray(m)
    if structure.S > 0:
        raise UnsupportedStructureError(
            "nu optimization supports full blocks only")
    sizes = structure.sizes
    if m.shape[0] != structure.n:
        raise ValueError("dimension mismatch")
    nf = structure.F
    if nf == 1:
        return NuResult(sigma_max(m), Scaling.identity(structure), 0, 0.0)

    x = np.zeros(nf - 1)
    for p in (8, 32, 128, 512):
        res = minimize(_schatten, x, args=(m, sizes, p), jac=True,
                       method="L-BFGS-B",
                       options=dict(maxiter=200, ftol=1e-14, gtol=1e-12))
        x = res.x

    # descent on sigma_1 itself before the trust region: quasi-Newton
    # handles ill-conditioned smooth valleys that lead into kinks, where
    # the boxed linearized subproblem would crawl
    res = minimize(_sigma1_grad, x, args=(m, sizes), jac=True,
                   method="L-BFGS-B",
                   bounds=[(xi - 5.0, xi + 5.0) for xi in x],
                   options=dict(maxiter=500, ftol=1e-16, gtol=1e-12))
    if res.fun < _sigma1_grad(x, m, sizes)[0]:
        x = res.x

    delta = 0.05
    g = np.linalg.svd(_apply_x(m, x, sizes), compute_uv=False)[0]
    it = 0
    converged = False
    for it in range(max_iter):
        bs, s = _spectral_model(m, x, sizes)
        lip = sum(np.linalg.norm(b, 2) for b in bs) + 1e-30
        act = s >= s[0] - 4.0 * delta * lip
        if not np.any(act):
            act = np.zeros(len(s), bool)
            act[0] = True
        b0a = (np.diag(s[act]) - s[0] * np.eye(int(act.sum()))) / delta
        bsa = [b[np.ix_(act, act)] for b in bs]
        try:
            lam_hat, u_step = min_lambda_max(b0a, bsa, box=1.0)
        except ArithmeticError:
            delta *= 0.5
            continue
        z = delta * u_step
        pred = s[0] + delta * lam_hat
        model_red = g - pred
        if model_red <= 1e-13 * g and delta <= 1e-7:
            converged = True
            break
        xc = x + z
        gc = np.linalg.svd(_apply_x(m, xc, sizes), compute_uv=False)[0]
        rho = (g - gc) / model_red if model_red > 0 else -1.0
        if gc < g:
            x, g = xc, gc
        if rho > 0.7 and np.max(np.abs(z)) > 0.9 * delta:
            delta = min(delta * 2, 1.0)
        elif rho < 0.2:
            delta *= 0.35
        if delta < 1e-12:
            converged = True
            break

    x = _polish_simple(m, sizes, x)
    g = float(np.linalg.svd(_apply_x(m, x, sizes), compute_uv=False)[0])
    d = np.exp(np.append(x, 0.0))
    gap = _gap_estimate(m, x, sizes)
    return NuResult(g, Scaling(d, structure), it + 1, gap, converged)
