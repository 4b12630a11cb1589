"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import itertools

import numpy as np

_CHUNK = 4096


def qubit_tensor_power(a: float, b: float, n: int) -> np.ndarray:
    """Entries (-1)^{w(i&j)} a^{n-d(i,j)} b^{d(i,j)} of the n-fold tensor power."""
    if n < 0 or n > 24:
        raise ValueError("n out of range")
    idx = np.arange(1 << n, dtype=np.uint64)
    dist = np.bitwise_count(idx[:, None] ^ idx[None, :])
    parity = np.bitwise_count(idx[:, None] & idx[None, :]) & 1
    powers = np.array([a ** (n - d) * b ** d for d in range(n + 1)])
    out = powers[dist]
    out[parity == 1] *= -1
    return out


def scan_principal_submatrices(a, k: int, tol: float):
    """First size-k index set, lexicographically, whose principal submatrix is singular.

    Works for any square matrix: singular means smallest singular value <= tol,
    an absolute threshold the caller scales by the norm of ``a``. Returns a
    tuple of indices or None.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if k < 1 or k > n:
        return None
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            return None
        subs = a[chunk[:, :, None], chunk[:, None, :]]
        sv = np.linalg.svd(subs, compute_uv=False)
        hit = np.nonzero(sv[:, -1] <= tol)[0]
        if hit.size:
            return tuple(int(i) for i in chunk[hit[0]])
