"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; states are 1-D
arrays. Multipartite vectors are ordered with the system factor first and
any ancilla factor last.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.linalg

from . import tolerances


def as_matrix(a) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of factors, folded from the left."""
    if not mats:
        return np.ones((1, 1), dtype=np.complex128)
    return reduce(np.kron, mats)


def kron_power(a: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("tensor power must be non-negative")
    a = np.asarray(a)
    if n == 0:
        return np.ones((1,) * a.ndim, dtype=a.dtype)
    return reduce(np.kron, [a] * n)


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def smallest_singular(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def hermiticity_error(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - dagger(a)), initial=0.0))


def unitarity_error(w: np.ndarray) -> float:
    w = np.asarray(w)
    return float(np.max(np.abs(dagger(w) @ w - np.eye(w.shape[1])), initial=0.0))


def is_unitary(w: np.ndarray, atol: float | None = None) -> bool:
    atol = tolerances.current().norm if atol is None else atol
    w = np.asarray(w)
    return w.ndim == 2 and w.shape[0] == w.shape[1] and unitarity_error(w) <= atol


def is_projector(p: np.ndarray, atol: float | None = None) -> bool:
    atol = tolerances.current().proj if atol is None else atol
    p = np.asarray(p)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    return (hermiticity_error(p) <= atol
            and float(np.max(np.abs(p @ p - p), initial=0.0)) <= atol)


def projector_rank(p: np.ndarray) -> int:
    return int(round(float(np.real(np.trace(p)))))


def range_basis(p: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the range of a projector."""
    p = as_matrix(p)
    vals, vecs = np.linalg.eigh((p + dagger(p)) / 2)
    keep = vals > 0.5
    # eigh returns ascending order; put the basis in a stable descending order
    return vecs[:, keep][:, ::-1].copy()


def projector_onto(vectors: np.ndarray) -> np.ndarray:
    """Projector onto the span of orthonormal columns."""
    v = as_matrix(vectors)
    if v.ndim == 1:
        v = v[:, None]
    return v @ dagger(v)


def orthonormalize(vectors: np.ndarray, against: np.ndarray | None = None,
                   rtol: float = 1e-10) -> np.ndarray:
    """Gram-Schmidt with one re-orthogonalization pass.

    Columns that fall below ``rtol`` of their original norm after projection
    are dropped. ``against`` holds orthonormal columns to orthogonalize
    against first.
    """
    v = as_matrix(vectors)
    basis = [] if against is None else [c for c in as_matrix(against).T]
    start = len(basis)
    for col in v.T:
        x = col.copy()
        norm0 = np.linalg.norm(x)
        if norm0 == 0:
            continue
        for _ in range(2):
            for q in basis:
                x = x - q * np.vdot(q, x)
        nx = np.linalg.norm(x)
        if nx > rtol * norm0:
            basis.append(x / nx)
    out = basis[start:]
    if not out:
        return np.zeros((v.shape[0], 0), dtype=np.complex128)
    return np.stack(out, axis=1)


def complete_basis(columns: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full unitary, keeping them first."""
    q = as_matrix(columns)
    d = q.shape[0]
    if q.shape[1] == 0:
        return np.eye(d, dtype=np.complex128)
    rest = scipy.linalg.null_space(dagger(q))
    return np.concatenate([q, rest], axis=1)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-tol.proj, 0)`` are treated as round-off and clamped;
    anything more negative is left to propagate as an error.
    """
    tol = tolerances.current()
    a = as_matrix(a)
    herr = hermiticity_error(a)
    if herr > tol.proj:
        raise ValueError(f"matrix is not Hermitian (max |A - A^H| = {herr:.3e})")
    vals, vecs = np.linalg.eigh((a + dagger(a)) / 2)
    if vals.size and vals[0] < -tol.proj:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {vals[0]:.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ dagger(vecs)


def unitary_dilation(v: np.ndarray, target_dim: int) -> np.ndarray:
    """Embed a contraction as the leading block of a unitary.

    Uses the block form ``[[V, (I - V V^H)^1/2], [(I - V^H V)^1/2, -V^H]]``,
    padded with an identity block up to ``target_dim``.
    """
    tol = tolerances.current()
    v = as_matrix(v)
    r = v.shape[0]
    if v.shape != (r, r):
        raise ValueError(f"square block required, got {v.shape}")
    norm = operator_norm(v)
    if norm > 1 + tol.norm:
        raise ValueError(f"block is not a contraction (norm {norm:.12g})")
    if target_dim < 2 * r:
        raise ValueError(f"target dimension {target_dim} < 2 * {r}")
    eye = np.eye(r)
    # clamping in psd_sqrt absorbs the round-off of norms slightly above 1
    defect_row = psd_sqrt(eye - v @ dagger(v))
    defect_col = psd_sqrt(eye - dagger(v) @ v)
    w = np.eye(target_dim, dtype=np.complex128)
    w[:r, :r] = v
    w[:r, r:2 * r] = defect_row
    w[r:2 * r, :r] = defect_col
    w[r:2 * r, r:2 * r] = -dagger(v)
    return w


def is_density_matrix(rho: np.ndarray, atol: float | None = None) -> bool:
    tol = tolerances.current()
    atol = tol.norm if atol is None else atol
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if hermiticity_error(rho) > tol.proj:
        return False
    if abs(np.trace(rho) - 1) > atol:
        return False
    return float(np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0]) >= -tol.proj


def purify(rho: np.ndarray) -> np.ndarray:
    """Purification with the system in the first slot.

    The ancilla dimension equals the numerical rank of ``rho``. The returned
    vector has length ``d * rank``.
    """
    tol = tolerances.current()
    rho = as_matrix(rho)
    if not is_density_matrix(rho):
        raise ValueError("purify requires a density matrix")
    vals, vecs = np.linalg.eigh((rho + dagger(rho)) / 2)
    keep = vals > tol.num
    vals, vecs = vals[keep][::-1], vecs[:, keep][:, ::-1]
    # column k of the system factor pairs with ancilla basis vector |k>
    psi = (vecs * np.sqrt(vals)).reshape(-1)
    return psi / np.linalg.norm(psi)


def partial_trace(state: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Reduced density matrix of a pure state or density matrix.

    ``dims`` lists the factor dimensions; ``keep`` the factors retained, in
    their original order.
    """
    state = as_matrix(state)
    dims = tuple(dims)
    n = len(dims)
    keep = tuple(sorted(keep))
    traced = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep], dtype=int))
    if state.ndim == 1:
        psi = state.reshape(dims)
        psi = np.moveaxis(psi, keep, range(len(keep))).reshape(dk, -1)
        return psi @ dagger(psi)
    rho = state.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for k in traced:
        col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, rho)
    return red.reshape(dk, dk)


def subspace_meet(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Projector onto range(P) ∩ range(Q).

    Vectors in the intersection are exactly the eigenvectors of ``PQP`` with
    eigenvalue 1.
    """
    tol = tolerances.current()
    p, q = as_matrix(p), as_matrix(q)
    if p.shape != q.shape:
        raise ValueError("projectors must have the same shape")
    m = p @ q @ p
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    sel = vecs[:, np.abs(vals - 1) <= tol.eig]
    return sel @ dagger(sel)


def isometric_extension(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """A unitary ``V`` with ``V @ x == y`` for column sets of equal Gram matrix.

    Both the image of ``x`` and of ``y`` are completed to orthonormal bases of
    the full space; the unitary maps one completion onto the other.
    """
    tol = tolerances.current()
    x, y = as_matrix(x), as_matrix(y)
    if x.ndim == 1:
        x, y = x[:, None], y[:, None]
    gx, gy = dagger(x) @ x, dagger(y) @ y
    gap = float(np.max(np.abs(gx - gy), initial=0.0))
    if gap > tol.norm:
        raise ValueError(f"Gram matrices differ by {gap:.3e}; no unitary maps x to y")
    u, s, wh = np.linalg.svd(x, full_matrices=False)
    rank = int(np.sum(s > tol.num * max(1.0, s[0] if s.size else 0.0)))
    u = u[:, :rank]
    uy = y @ dagger(wh[:rank]) / s[:rank]
    # nearest isometry (polar factor) scrubs round-off before completing
    if rank:
        a, _, b = np.linalg.svd(uy, full_matrices=False)
        uy = a @ b
    return complete_basis(uy) @ dagger(complete_basis(u))
