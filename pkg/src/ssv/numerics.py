"""Dense linear algebra kernel for small matrices.

Everything here operates on plain numpy arrays.  Hermitian matrices are
represented as ordinary square arrays; ``herm`` symmetrizes on entry so
downstream code can rely on exact conjugate symmetry.  The vectorization
helpers use scaled stacking (off-diagonal entries multiplied by sqrt(2))
so that the trace inner product of two Hermitian matrices equals the dot
product of their vectorizations.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)


def herm(x):
    """Symmetrize: return (x + x*)/2."""
    x = np.asarray(x)
    return 0.5 * (x + x.conj().T)


def svd(a):
    """SVD of a as (singular_values, left, right) with a = left @ diag(s) @ right*.

    Real input gives real factors.  Values are descending.
    """
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("empty matrix")
    try:
        u, s, vh = np.linalg.svd(a)
    except np.linalg.LinAlgError as e:
        raise ArithmeticError(f"svd failed to converge: {e}") from e
    return s, u, vh.conj().T


def sigma_values(a):
    """Singular values only, descending."""
    return np.linalg.svd(np.asarray(a), compute_uv=False)


def eigh(h):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    h = herm(h)
    try:
        w, q = np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise ArithmeticError(f"eigh failed to converge: {e}") from e
    return w[::-1], q[:, ::-1]


def herm_dim(r, field):
    """Real dimension of S_r (field='real') or H_r (field='complex')."""
    if field == "real":
        return r * (r + 1) // 2
    return r * r


def vec_herm(x, field):
    """Vectorize a symmetric/Hermitian matrix into a real vector.

    Diagonal entries enter as-is; for field='real' the upper off-diagonals
    enter scaled by sqrt(2); for field='complex' both real and imaginary
    parts of the upper off-diagonals enter scaled by sqrt(2).  With this
    scaling <A, B> = trace(A* B) = vec(A) . vec(B).
    """
    x = np.asarray(x)
    r = x.shape[0]
    iu = np.triu_indices(r, 1)
    if field == "real":
        return np.concatenate([np.diag(x).real, SQRT2 * x[iu].real])
    return np.concatenate([np.diag(x).real,
                           SQRT2 * x[iu].real,
                           SQRT2 * x[iu].imag])


def unvec_herm(v, r, field):
    """Inverse of vec_herm."""
    v = np.asarray(v, dtype=float)
    iu = np.triu_indices(r, 1)
    k = iu[0].size
    if field == "real":
        out = np.zeros((r, r))
        out[np.diag_indices(r)] = v[:r]
        out[iu] = v[r:r + k] / SQRT2
        out = out + np.triu(out, 1).T
        return out
    out = np.zeros((r, r), dtype=complex)
    out[np.diag_indices(r)] = v[:r]
    upper = v[r:r + k] / SQRT2 + 1j * v[r + k:r + 2 * k] / SQRT2
    out[iu] = upper
    out = out + np.triu(out, 1).conj().T
    return out


def orth_basis(mats, field, rtol=1e-9):
    """Orthonormal basis (trace inner product) of span(mats).

    Singular values of the stacked vectorization below rtol times the
    largest are treated as zero.  Returns a list of Hermitian matrices.
    """
    mats = [np.asarray(m) for m in mats]
    if not mats:
        return []
    r = mats[0].shape[0]
    a = np.array([vec_herm(m, field) for m in mats])
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return []
    keep = s > rtol * s[0]
    return [unvec_herm(vh[i], r, field) for i in range(len(s)) if keep[i]]


def orthonormal_complement(basis, field, dim=None):
    """Orthonormal basis of the orthogonal complement of span(basis).

    The complement is taken inside S_r (field='real') or H_r
    (field='complex').  For an empty basis, dim must give r.
    """
    basis = [np.asarray(b) for b in basis]
    if basis:
        r = basis[0].shape[0]
    elif dim is not None:
        r = dim
    else:
        raise ValueError("dim required for empty basis")
    d = herm_dim(r, field)
    if not basis:
        eye = np.eye(d)
        return [unvec_herm(eye[i], r, field) for i in range(d)]
    a = np.array([vec_herm(b, field) for b in basis])
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > 1e-9 * s[0])) if s.size and s[0] > 0 else 0
    return [unvec_herm(vh[i], r, field) for i in range(rank, d)]


def project_psd(x):
    """Nearest (Frobenius) positive semidefinite matrix."""
    w, q = eigh(x)
    w = np.clip(w, 0.0, None)
    out = (q * w) @ q.conj().T
    out = herm(out)
    if np.isrealobj(x):
        out = out.real
    return out


def rank_of(x, rtol=1e-9):
    """Numerical rank of a Hermitian matrix by eigenvalue magnitude."""
    w, _ = eigh(x)
    top = np.max(np.abs(w)) if w.size else 0.0
    if top == 0.0:
        return 0
    return int(np.sum(np.abs(w) > rtol * top))
