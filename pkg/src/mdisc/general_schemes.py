"""Identification of arbitrary projective measurements.

The core construction is the separation unitary of two equal-rank
projectors P, Q: a unitary U with U P* U^H = P and U Q* U^H orthogonal to
Q. Half of a maximally entangled pair is measured, U_m is applied to the
other half, and a repeated outcome identifies M. Rank mismatches, lack of
room (d < 3r) or large overlaps, and intersecting projectors are handled
by :func:`plan_general`.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Union

import numpy as np

from . import numkit, tolerances
from .apparatus import ProjectiveMeasurement
from .numkit import dagger
from .protocol import ConditionalUnitary, Scheme, SchemeError, SecretMeasure

NORM_BOUND = 1 / math.sqrt(2)


class PreconditionError(ValueError):
    """A separation-unitary precondition fails; ``reason`` names which one."""

    def __init__(self, reason: str, message: str):
        self.reason = reason
        super().__init__(message)


@dataclasses.dataclass(frozen=True, eq=False)
class SeparationCertificate:
    p: np.ndarray
    q: np.ndarray
    r: int
    a: np.ndarray  # <phi_i|psi_j>
    b: np.ndarray  # <xi_i|psi_j>
    v: np.ndarray
    u: np.ndarray
    pq_norm: float

    def residuals(self) -> dict:
        """Deviation of every certificate identity (all should be ~0)."""
        eye = np.eye(self.r)
        bound = self.pq_norm ** 2 / (1 - self.pq_norm ** 2)
        q_sep = self.u @ self.q.conj() @ dagger(self.u)
        return {
            "unitarity": numkit.unitarity_error(self.u),
            "ab_identity": float(np.max(np.abs(dagger(self.a) @ self.a + dagger(self.b) @ self.b - eye),
                                        initial=0.0)),
            "a_norm": abs(numkit.operator_norm(self.a) - self.pq_norm),
            "v_bound": max(0.0, numkit.operator_norm(self.v) - bound),
            "p_fixed": float(np.max(np.abs(self.u @ self.p.conj() @ dagger(self.u) - self.p))),
            "q_separated": float(abs(np.trace(self.q @ q_sep))),
        }


def separation_unitary(p: np.ndarray, q: np.ndarray) -> SeparationCertificate:
    """Separation unitary of two projectors of equal rank r.

    Requires ||PQ|| <= 1/sqrt(2) and d >= 3r. In the basis
    (phi_1..phi_r, xi_1..xi_r, rest) with phi spanning P and xi completing
    span(P, Q), U maps phi_i* to phi_i and carries the block
    V = -(B^H)^-1 A^H A* (B*)^-1 on the xi coordinates, dilated to a
    unitary on the complement of P.
    """
    tol = tolerances.current()
    p, q = numkit.as_matrix(p), numkit.as_matrix(q)
    d = p.shape[0]
    r, rq = numkit.projector_rank(p), numkit.projector_rank(q)
    if r != rq:
        raise PreconditionError("rank", f"rank mismatch: rank(P) = {r}, rank(Q) = {rq}")
    pq = numkit.operator_norm(p @ q)
    if pq > NORM_BOUND + tol.norm:
        raise PreconditionError("norm", f"||PQ|| = {pq:.6g} exceeds 1/sqrt(2)")
    if d < 3 * r:
        raise PreconditionError("dimension", f"d = {d} < 3 * rank = {3 * r}")
    if r == 0:
        return SeparationCertificate(p, q, 0, np.zeros((0, 0)), np.zeros((0, 0)),
                                     np.zeros((0, 0)), np.eye(d, dtype=np.complex128), pq)
    phi = numkit.range_basis(p)
    psi = numkit.range_basis(q)
    xi = numkit.orthonormalize((np.eye(d) - p) @ psi, against=phi)
    if xi.shape[1] != r:
        raise PreconditionError("norm", "P and Q intersect; span(P, Q) is too small")
    a = dagger(phi) @ psi
    b = dagger(xi) @ psi
    sb = np.linalg.svd(b, compute_uv=False)
    if sb[-1] <= tol.sing:
        raise PreconditionError("norm", "complement block is numerically singular")
    binv = np.linalg.inv(b)
    v = -dagger(binv) @ dagger(a) @ a.conj() @ binv.conj()
    omega = numkit.complete_basis(np.concatenate([phi, xi], axis=1))
    k = np.zeros((d, d), dtype=np.complex128)
    k[:r, :r] = np.eye(r)
    k[r:, r:] = numkit.unitary_dilation(v, d - r)
    u = omega @ k @ omega.T
    return SeparationCertificate(p, q, r, a, b, v, u, pq)


def maximally_entangled(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128).reshape(-1) / math.sqrt(d)


@dataclasses.dataclass(frozen=True, eq=False)
class MUMScheme(Scheme):
    """Measure slot A, apply U_m to slot B, measure slot B; a repeat means M.

    ``unitaries`` is keyed by outcome index of the apparatus.
    """

    probe: np.ndarray
    unitaries: dict
    m_apparatus: ProjectiveMeasurement
    n_apparatus: ProjectiveMeasurement
    kind = "mum"

    @property
    def d(self) -> int:
        return self.m_apparatus.dim

    @property
    def dims(self) -> tuple:
        return (self.d, self.d)

    def steps(self) -> list:
        return [SecretMeasure(0), ConditionalUnitary(1, 0, self.unitaries), SecretMeasure(1)]

    def decide(self, record: tuple) -> str:
        return "M" if record[0] == record[2] else "N"


@dataclasses.dataclass(frozen=True, eq=False)
class OrthogonalProbeScheme(Scheme):
    """One use: outcome ``outcome`` can only occur under ``indicates``."""

    probe: np.ndarray
    outcome: int
    indicates: str
    m_apparatus: ProjectiveMeasurement
    n_apparatus: ProjectiveMeasurement
    kind = "orthogonal"

    @property
    def dims(self) -> tuple:
        return (self.m_apparatus.dim,)

    def steps(self) -> list:
        return [SecretMeasure(0)]

    def decide(self, record: tuple) -> str:
        if record[0] == self.outcome:
            return self.indicates
        return "N" if self.indicates == "M" else "M"


def _check_pair(m: ProjectiveMeasurement, n: ProjectiveMeasurement):
    if m.labels != n.labels:
        raise ValueError("M and N must have identical outcome labels in the same order")
    if m.dim != n.dim:
        raise ValueError(f"dimension mismatch: {m.dim} vs {n.dim}")


def build_mum(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> MUMScheme:
    """M-U-M scheme with one separation unitary per outcome."""
    _check_pair(m, n)
    unitaries = {}
    for k, (p, q) in enumerate(zip(m.projectors, n.projectors)):
        try:
            unitaries[k] = separation_unitary(p, q).u
        except PreconditionError as exc:
            raise PreconditionError(exc.reason, f"outcome {m.labels[k]!r}: {exc}") from None
    return MUMScheme(maximally_entangled(m.dim), unitaries, m, n)


def mum_repeat_probability(scheme: MUMScheme, truth: str) -> float:
    """Exact probability that the second outcome repeats the first."""
    app = scheme.apparatus(truth)
    d = scheme.d
    x = scheme.probe.reshape(d, d)
    total = 0.0
    for k, p in enumerate(app.projectors):
        y = scheme.unitaries[k] @ (p @ x).T  # slot B now on rows
        z = p @ y
        total += float(np.vdot(z, z).real)
    return total


def rank_mismatch_probe(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Unit vector in range(P) orthogonal to range(Q), for rank(P) > rank(Q)."""
    tol = tolerances.current()
    p, q = numkit.as_matrix(p), numkit.as_matrix(q)
    rp, rq = numkit.projector_rank(p), numkit.projector_rank(q)
    if rp <= rq:
        raise ValueError(f"rank(P) = {rp} must exceed rank(Q) = {rq}")
    m = p @ (np.eye(p.shape[0]) - q) @ p
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    if abs(vals[-1] - 1) > tol.eig:
        raise ValueError(f"no vector of range(P) is orthogonal to range(Q) (top eigenvalue {vals[-1]})")
    v = vecs[:, -1]
    # fix the global phase so the largest entry is real and positive
    j = int(np.argmax(np.abs(v)))
    return v * (abs(v[j]) / v[j])


def overlap_norms(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> list[float]:
    return [numkit.operator_norm(p @ q) for p, q in zip(m.projectors, n.projectors)]


def lift_copies(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> int:
    """Fewest parallel copies L meeting the norm and dimension bounds on every outcome tuple."""
    tol = tolerances.current()
    _check_pair(m, n)
    if m.ranks() != n.ranks():
        raise ValueError("lifting needs equal ranks outcome by outcome")
    norms = overlap_norms(m, n)
    worst = max(norms)
    if worst >= 1 - tol.degenerate_overlap:
        raise ValueError("some ||P_m Q_m|| = 1; reduce the intersection first")
    d, rmax = m.dim, max(m.ranks())
    if rmax >= d:
        raise ValueError("a projector of full rank leaves nothing to identify")
    for L in range(1, 200):
        if worst ** L <= NORM_BOUND + tol.norm and d ** L >= 3 * rmax ** L:
            return L
    raise ValueError("no lift found below 200 copies")


def lift_tensor_power(m: ProjectiveMeasurement, n: ProjectiveMeasurement):
    """(L, M^(x)L, N^(x)L) for the minimal L of :func:`lift_copies`."""
    L = lift_copies(m, n)
    return L, m.tensor_power(L), n.tensor_power(L)


@dataclasses.dataclass(frozen=True, eq=False)
class Reduction:
    """Outcome of dropping the intersections C_m = P_m ∩ Q_m.

    ``basis`` has orthonormal columns spanning range(R), R = I - sum_m C_m;
    ``m`` and ``n`` are the reduced measurements in that basis.
    """

    meets: tuple
    restriction: np.ndarray
    basis: np.ndarray
    m: ProjectiveMeasurement
    n: ProjectiveMeasurement
    kept: tuple  # indices of the original outcomes that survive


def degenerate_reduce(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> Reduction:
    """Restrict both apparatus to the complement of their outcome-wise intersections.

    Any probe inside range(R) sees the original apparatus act exactly as the
    reduced one: probabilities and post-measurement states agree.
    """
    _check_pair(m, n)
    tol = tolerances.current()
    meets = tuple(numkit.subspace_meet(p, q) for p, q in zip(m.projectors, n.projectors))
    restriction = np.eye(m.dim) - sum(meets)
    basis = numkit.range_basis(restriction)
    if basis.shape[1] == 0:
        raise ValueError("identical measurements cannot be identified")
    kept, labels, pr, qr = [], [], [], []
    for k, (p, q, c) in enumerate(zip(m.projectors, n.projectors, meets)):
        p_red = dagger(basis) @ (p - c) @ basis
        q_red = dagger(basis) @ (q - c) @ basis
        if numkit.projector_rank(p_red) == 0 and numkit.projector_rank(q_red) == 0:
            continue
        kept.append(k)
        labels.append(m.labels[k])
        pr.append(p_red)
        qr.append(q_red)
    reduced_m = ProjectiveMeasurement(tuple(labels), tuple(pr))
    reduced_n = ProjectiveMeasurement(tuple(labels), tuple(qr))
    if len(kept) == 1 or (reduced_m.same_as(reduced_n, tol.proj)):
        raise ValueError("identical measurements cannot be identified")
    return Reduction(meets, restriction, basis, reduced_m, reduced_n, tuple(kept))


@dataclasses.dataclass(frozen=True, eq=False)
class OrthogonalProbe:
    scheme: OrthogonalProbeScheme
    label: object


@dataclasses.dataclass(frozen=True, eq=False)
class DirectMUM:
    scheme: MUMScheme


@dataclasses.dataclass(frozen=True, eq=False)
class LiftedMUM:
    copies: int
    inner: MUMScheme  # scheme on the lifted pair
    scheme: MUMScheme


@dataclasses.dataclass(frozen=True, eq=False)
class ReducedThenPlan:
    reduction: Reduction
    inner: "GeneralPlan"
    scheme: Scheme  # inner scheme embedded back into the original apparatus


GeneralPlan = Union[OrthogonalProbe, DirectMUM, LiftedMUM, ReducedThenPlan]


def variant_name(plan) -> str:
    return type(plan).__name__


def _orthogonal_probe(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> Optional[OrthogonalProbe]:
    for k, (rp, rq) in enumerate(zip(m.ranks(), n.ranks())):
        if rp > rq:
            v = rank_mismatch_probe(m.projectors[k], n.projectors[k])
            return OrthogonalProbe(OrthogonalProbeScheme(v, k, "M", m, n), m.labels[k])
        if rq > rp:
            v = rank_mismatch_probe(n.projectors[k], m.projectors[k])
            return OrthogonalProbe(OrthogonalProbeScheme(v, k, "N", m, n), m.labels[k])
    return None


def _direct_conditions_hold(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> bool:
    tol = tolerances.current()
    d = m.dim
    return all(numkit.operator_norm(p @ q) <= NORM_BOUND + tol.norm and d >= 3 * r
               for p, q, r in zip(m.projectors, n.projectors, m.ranks()))


def _lifted_embedding(m: ProjectiveMeasurement, copies: int) -> ProjectiveMeasurement:
    return m if copies == 1 else m.tensor_power(copies)


def _embed(plan, reduction: Reduction, m: ProjectiveMeasurement,
           n: ProjectiveMeasurement) -> Scheme:
    """Re-express a plan built on the reduced pair in the original apparatus."""
    e = reduction.basis
    if isinstance(plan, OrthogonalProbe):
        inner = plan.scheme
        outcome = reduction.kept[inner.outcome]
        return OrthogonalProbeScheme(e @ inner.probe, outcome, inner.indicates, m, n)
    copies = plan.copies if isinstance(plan, LiftedMUM) else 1
    inner = plan.scheme if isinstance(plan, DirectMUM) else plan.inner
    m_big, n_big = _lifted_embedding(m, copies), _lifted_embedding(n, copies)
    e_big = numkit.kron_power(e, copies)
    outside = np.eye(e_big.shape[0]) - e_big @ dagger(e_big)
    # map reduced lifted outcome index -> original lifted outcome index
    kept = reduction.kept
    k_red, k_orig = len(kept), len(m)
    unitaries = {}
    for idx_red, u in inner.unitaries.items():
        digits = np.unravel_index(idx_red, (k_red,) * copies)
        idx_orig = int(np.ravel_multi_index(tuple(kept[x] for x in digits), (k_orig,) * copies))
        unitaries[idx_orig] = e_big @ u @ dagger(e_big) + outside
    probe = np.kron(e_big, e_big) @ inner.probe
    return MUMScheme(probe, unitaries, m_big, n_big)


def plan_general(m: ProjectiveMeasurement, n: ProjectiveMeasurement) -> GeneralPlan:
    """Exact identification plan for two distinct projective measurements.

    Cascade: unequal ranks give a one-use orthogonal probe; intersecting
    projectors are reduced away and the reduced pair is planned; otherwise
    a direct M-U-M scheme when every outcome satisfies the separation bounds,
    else an M-U-M scheme on the minimal tensor power.
    """
    _check_pair(m, n)
    tol = tolerances.current()
    if m.same_as(n):
        raise ValueError("identical measurements cannot be identified")
    probe = _orthogonal_probe(m, n)
    if probe is not None:
        return probe
    if max(overlap_norms(m, n)) >= 1 - tol.degenerate_overlap:
        reduction = degenerate_reduce(m, n)
        inner = plan_general(reduction.m, reduction.n)
        return ReducedThenPlan(reduction, inner, _embed(inner, reduction, m, n))
    if _direct_conditions_hold(m, n):
        return DirectMUM(build_mum(m, n))
    L, m_big, n_big = lift_tensor_power(m, n)
    scheme = build_mum(m_big, n_big)
    return LiftedMUM(L, scheme, scheme)


def plan_uses(plan) -> int:
    """Uses of the original (unlifted) apparatus per run."""
    if isinstance(plan, ReducedThenPlan):
        return plan_uses(plan.inner)
    if isinstance(plan, LiftedMUM):
        return 2 * plan.copies
    return plan.scheme.uses


__all__ = [
    "PreconditionError", "SeparationCertificate", "separation_unitary", "maximally_entangled",
    "MUMScheme", "OrthogonalProbeScheme", "build_mum", "mum_repeat_probability",
    "rank_mismatch_probe", "lift_copies", "lift_tensor_power", "Reduction", "degenerate_reduce",
    "OrthogonalProbe", "DirectMUM", "LiftedMUM", "ReducedThenPlan", "GeneralPlan",
    "plan_general", "plan_uses", "variant_name", "overlap_norms", "SchemeError",
]
