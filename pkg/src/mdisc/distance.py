"""Distances and fidelities between projective measurements.

Outcome distributions are compared by total variation ``0.5 * sum |p - q|``
and by the Bhattacharyya overlap ``sum sqrt(p q)``. The plain versions
optimize over input states of the system alone. The stabilized versions
also allow an ancilla (dimension d suffices) and compare the joint
post-measurement data: the outcome together with the ancilla state it
leaves behind.

Conventions: joint states are ordered (system, ancilla). A joint pure state
with coefficient matrix ``X[s, a]`` leaves the ancilla in
``X^T conj(P_m) conj(X)`` after outcome m.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import warnings

import numpy as np
from scipy import optimize

from . import numkit, tolerances
from .apparatus import ProjectiveMeasurement, canonicalize_qubit_pair
from .numkit import dagger

K_MAX = 16
MULTISTARTS = 32
OPT_TOL = 1e-8
MEASURES = ("dmax", "dstab", "fmin", "fstab")


@dataclasses.dataclass(frozen=True, eq=False)
class DistanceReport:
    """Result of one distance computation.

    ``witness`` is the extremal input as a density matrix: on the system
    for dmax and fmin, on system (x) ancilla for dstab and fstab.
    ``bounds`` holds (lower, upper) when both sides are known rigorously.
    """

    measure: str
    value: float
    witness: np.ndarray
    certified: bool
    bounds: tuple | None = None

    def as_dict(self) -> dict:
        out = {"measure": self.measure, "value": self.value, "certified": self.certified}
        if self.bounds is not None:
            out["bounds"] = list(self.bounds)
        return out


def _check(m: ProjectiveMeasurement, n: ProjectiveMeasurement):
    if m.labels != n.labels:
        raise ValueError("M and N must have identical outcome labels in the same order")
    if m.dim != n.dim:
        raise ValueError(f"dimension mismatch: {m.dim} vs {n.dim}")


def _outcome_probs(m: ProjectiveMeasurement, rho: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ji->k", m.stacked, rho).real


def _ancilla_states(m: ProjectiveMeasurement, rho_joint: np.ndarray) -> np.ndarray:
    """Unnormalized ancilla states tr_S[(P_k (x) I) rho], stacked over k."""
    d = m.dim
    da = rho_joint.shape[0] // d
    r = rho_joint.reshape(d, da, d, da)
    return np.einsum("kts,satb->kab", m.stacked, r)


def tv_value(m: ProjectiveMeasurement, n: ProjectiveMeasurement, rho: np.ndarray) -> float:
    """Total variation between the outcome distributions on ``rho``."""
    return 0.5 * float(np.abs(_outcome_probs(m, rho) - _outcome_probs(n, rho)).sum())


def stab_tv_value(m: ProjectiveMeasurement, n: ProjectiveMeasurement, rho_joint: np.ndarray) -> float:
    """Trace distance of the joint (outcome, ancilla) data on ``rho_joint``."""
    diff = _ancilla_states(m, rho_joint) - _ancilla_states(n, rho_joint)
    return 0.5 * float(sum(np.abs(np.linalg.eigvalsh((x + dagger(x)) / 2)).sum() for x in diff))


def overlap_value(m: ProjectiveMeasurement, n: ProjectiveMeasurement, rho: np.ndarray) -> float:
    """sum_k sqrt(p_k q_k) on ``rho``."""
    p = np.clip(_outcome_probs(m, rho), 0, None)
    q = np.clip(_outcome_probs(n, rho), 0, None)
    return float(np.sqrt(p * q).sum())


def root_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|| sqrt(a) sqrt(b) ||_1 for positive semidefinite a, b (not normalized)."""
    sa = numkit.psd_sqrt((a + dagger(a)) / 2)
    sb = numkit.psd_sqrt((b + dagger(b)) / 2)
    return float(np.linalg.svd(sa @ sb, compute_uv=False).sum())


def stab_overlap_value(m: ProjectiveMeasurement, n: ProjectiveMeasurement,
                       rho_joint: np.ndarray) -> float:
    """sum_k F(ancilla state after k under M, ancilla state after k under N)."""
    am, an = _ancilla_states(m, rho_joint), _ancilla_states(n, rho_joint)
    return float(sum(root_fidelity(x, y) for x, y in zip(am, an)))


def dmax(m: ProjectiveMeasurement, n: ProjectiveMeasurement, k_max: int = K_MAX) -> DistanceReport:
    """Exact D_max by enumerating outcome sign patterns.

    For signs s, 0.5 * lambda_max(sum_k s_k (P_k - Q_k)) lower-bounds the
    distance, and the best pattern attains it at the top eigenvector.
    Patterns and -s give complementary bounds, so s_0 = +1 is enough.
    """
    _check(m, n)
    k = len(m)
    if k > k_max:
        raise ValueError(f"{k} outcomes exceed the exact-enumeration cap of {k_max}")
    delta = m.stacked - n.stacked
    best, best_vec = -np.inf, None
    for tail in itertools.product((1.0, -1.0), repeat=k - 1):
        s = np.array((1.0,) + tail)
        h = np.tensordot(s, delta, axes=1)
        vals, vecs = np.linalg.eigh((h + dagger(h)) / 2)
        if vals[-1] > best + 1e-15:
            best, best_vec = vals[-1], vecs[:, -1]
    witness = np.outer(best_vec, best_vec.conj())
    value = min(1.0, max(0.0, 0.5 * float(best)))
    return DistanceReport("dmax", value, witness, True, (value, value))


def _solve(prob):
    import cvxpy as cp

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # accuracy is judged by the bounds below
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"D_stab program did not converge (status {prob.status})")


def _dstab_primal(delta: np.ndarray) -> np.ndarray:
    """Optimal rho of max sum_k tr(Delta_k W_k) s.t. 0 <= W_k <= rho, tr rho = 1."""
    import cvxpy as cp

    k, d, _ = delta.shape
    rho = cp.Variable((d, d), hermitian=True)
    ws = [cp.Variable((d, d), hermitian=True) for _ in range(k)]
    cons = [cp.real(cp.trace(rho)) == 1]
    for w in ws:
        cons += [w >> 0, rho - w >> 0]
    _solve(cp.Problem(cp.Maximize(cp.real(sum(cp.trace(dl @ w) for dl, w in zip(delta, ws)))), cons))
    return np.asarray(rho.value)


def _dstab_dual(delta: np.ndarray) -> list:
    """Z_k of min lambda_max(sum_k Z_k) s.t. Z_k >= 0, Z_k >= Delta_k."""
    import cvxpy as cp

    k, d, _ = delta.shape
    lam = cp.Variable()
    zs = [cp.Variable((d, d), hermitian=True) for _ in range(k)]
    cons = [lam * np.eye(d) - sum(zs) >> 0]
    for dl, z in zip(delta, zs):
        cons += [z >> 0, z - dl >> 0]
    _solve(cp.Problem(cp.Minimize(lam), cons))
    return [np.asarray(z.value) for z in zs]


def _dual_upper_bound(delta: np.ndarray, zs) -> float:
    """Upper bound lambda_max(sum Z_k) from any Z_k >= 0 with Z_k >= Delta_k.

    Solver output is repaired by a multiple of the identity so the bound
    holds regardless of solver accuracy.
    """
    d = delta.shape[1]
    total = np.zeros((d, d), dtype=np.complex128)
    for dl, z in zip(delta, zs):
        z = (z + dagger(z)) / 2
        shift = max(0.0, -np.linalg.eigvalsh(z)[0], -np.linalg.eigvalsh(z - dl)[0])
        total += z + shift * np.eye(d)
    return float(np.linalg.eigvalsh(total)[-1])


def dstab(m: ProjectiveMeasurement, n: ProjectiveMeasurement, k_max: int = K_MAX) -> DistanceReport:
    """Stabilized distance with a d-dimensional ancilla.

    Equals max sum_k tr(Delta_k W_k) over 0 <= W_k <= rho, tr rho = 1,
    with Delta_k = P_k - Q_k; solved as a semidefinite program. The reported
    value is the defining formula evaluated at the purified optimizer, so
    it is a rigorous lower bound; a repaired dual solution gives the upper
    bound, and the result is certified when the two agree.
    """
    _check(m, n)
    if len(m) > k_max:
        raise ValueError(f"{len(m)} outcomes exceed the cap of {k_max}")
    tol = tolerances.current()
    d = m.dim
    delta = m.stacked - n.stacked
    if np.max(np.abs(delta)) <= tol.proj:
        witness = np.zeros((d * d, d * d), dtype=np.complex128)
        witness[0, 0] = 1.0
        return DistanceReport("dstab", 0.0, witness, True, (0.0, 0.0))
    rho = _dstab_primal(delta)
    rho = (rho + dagger(rho)) / 2
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0, None)
    rho = (vecs * vals) @ dagger(vecs)
    rho /= np.trace(rho).real
    x = numkit.psd_sqrt(rho)  # X[s, a]: ancilla of dimension d
    psi = x.reshape(-1)
    witness = np.outer(psi, psi.conj())
    lower = min(1.0, stab_tv_value(m, n, witness))
    upper = min(1.0, _dual_upper_bound(delta, _dstab_dual(delta)))
    # a lower bound that beats the upper bound means both sit at a common value
    certified = upper - lower <= 1e-7
    return DistanceReport("dstab", lower, witness, certified, (lower, max(lower, upper)))


def _unpack(v: np.ndarray, d: int, da: int) -> np.ndarray:
    z = v[: d * da] + 1j * v[d * da:]
    return z / np.linalg.norm(z)


def _random_starts(rng: np.random.Generator, size: int, count: int) -> list:
    return [rng.standard_normal(2 * size) for _ in range(count)]


def _minimize_pure(objective, size: int, seed: int, starts: int):
    rng = np.random.default_rng(seed)
    best = None
    for x0 in _random_starts(rng, size, starts):
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"xatol": OPT_TOL, "fatol": OPT_TOL,
                                         "maxiter": 4000 * size, "maxfev": 4000 * size})
        if best is None or res.fun < best.fun:
            best = res
    return best


def _fmin_search(m: ProjectiveMeasurement, n: ProjectiveMeasurement, seed: int, starts: int):
    d = m.dim
    pm, qn = m.stacked, n.stacked

    def f(v):
        z = _unpack(v, d, 1)
        p = np.einsum("i,kij,j->k", z.conj(), pm, z).real.clip(0)
        q = np.einsum("i,kij,j->k", z.conj(), qn, z).real.clip(0)
        return float(np.sqrt(p * q).sum())

    best = _minimize_pure(f, d, seed, starts)
    z = _unpack(best.x, d, 1)
    rho = np.outer(z, z.conj())
    return overlap_value(m, n, rho), rho


def _fstab_search(m: ProjectiveMeasurement, n: ProjectiveMeasurement, seed: int, starts: int):
    # for a joint state with coefficients X, the ancilla root fidelity after
    # outcome k equals || P_k X X^H Q_k ||_1, one batched SVD per evaluation
    d = m.dim
    pm, qn = m.stacked, n.stacked

    def f(v):
        x = _unpack(v, d, d).reshape(d, d)
        sigma = x @ dagger(x)
        return float(np.linalg.svd(pm @ sigma @ qn, compute_uv=False).sum())

    best = _minimize_pure(f, d * d, seed, starts)
    z = _unpack(best.x, d, d)
    rho = np.outer(z, z.conj())
    return stab_overlap_value(m, n, rho), rho


def _qubit_theta(m: ProjectiveMeasurement, n: ProjectiveMeasurement):
    if m.dim != 2 or not (m.is_von_neumann() and n.is_von_neumann()):
        return None
    try:
        return canonicalize_qubit_pair(m, n).theta
    except ValueError:  # identical observables
        return 0.0


def fidelity(m: ProjectiveMeasurement, n: ProjectiveMeasurement, stabilized: bool = False,
             seed: int = 0, starts: int = MULTISTARTS) -> DistanceReport:
    """F_min (or F_stab): infimum over pure inputs of the outcome overlap.

    General pairs use multistart Nelder-Mead and are reported uncertified.
    For a qubit pair the value is cos(theta/2); the optimizer still runs
    and the result is certified only if it agrees within 1e-6.
    """
    _check(m, n)
    measure = "fstab" if stabilized else "fmin"
    search = _fstab_search if stabilized else _fmin_search
    found, witness = search(m, n, seed, starts)
    theta = _qubit_theta(m, n)
    if theta is None:
        return DistanceReport(measure, min(1.0, max(0.0, found)), witness, False)
    closed = math.cos(theta / 2)
    return DistanceReport(measure, closed, witness, abs(found - closed) <= 1e-6)


def distance(m: ProjectiveMeasurement, n: ProjectiveMeasurement, measure: str, **kw) -> DistanceReport:
    """Dispatch by measure name (one of dmax, dstab, fmin, fstab)."""
    if measure == "dmax":
        return dmax(m, n, **kw)
    if measure == "dstab":
        return dstab(m, n, **kw)
    if measure in ("fmin", "fstab"):
        return fidelity(m, n, stabilized=measure == "fstab", **kw)
    raise ValueError(f"unknown measure {measure!r}; choose from {MEASURES}")
