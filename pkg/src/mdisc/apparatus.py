"""Projective and von Neumann measurements, correlation unitaries, qubit pairs."""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Hashable, Sequence

import numpy as np

from . import kernels, numkit, tolerances
from .numkit import dagger


@dataclasses.dataclass(frozen=True)
class ProjectiveMeasurement:
    """Outcome-labelled complete family of orthogonal projectors.

    Construction does not validate; call :func:`validate` for a report or
    :meth:`checked` to raise on any violation.
    """

    labels: tuple
    projectors: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "projectors",
                           tuple(numkit.as_matrix(p) for p in self.projectors))
        if len(self.labels) != len(self.projectors):
            raise ValueError("one projector per outcome label is required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("outcome labels must be distinct")

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.labels)

    @functools.cached_property
    def stacked(self) -> np.ndarray:
        """Projectors as one (k, d, d) array."""
        return np.stack(self.projectors)

    def index(self, label: Hashable) -> int:
        return self.labels.index(label)

    def projector(self, label: Hashable) -> np.ndarray:
        return self.projectors[self.index(label)]

    def ranks(self) -> tuple[int, ...]:
        return tuple(numkit.projector_rank(p) for p in self.projectors)

    def checked(self) -> "ProjectiveMeasurement":
        report = validate(self)
        if report:
            raise InvalidMeasurement(report)
        return self

    @classmethod
    def from_basis(cls, vectors, labels: Sequence | None = None) -> "ProjectiveMeasurement":
        """Rank-one measurement from the columns of ``vectors``."""
        v = numkit.as_matrix(vectors)
        labels = tuple(range(v.shape[1])) if labels is None else tuple(labels)
        return cls(labels, tuple(np.outer(v[:, k], v[:, k].conj()) for k in range(v.shape[1])))

    def is_von_neumann(self) -> bool:
        return len(self) == self.dim and all(r == 1 for r in self.ranks())

    def as_von_neumann(self) -> "VonNeumannMeasurement":
        if not self.is_von_neumann():
            raise ValueError("measurement has a projector of rank != 1")
        vecs = [numkit.range_basis(p)[:, 0] for p in self.projectors]
        return VonNeumannMeasurement(np.stack(vecs, axis=1), self.labels)

    def tensor_power(self, copies: int, sep: str = ",") -> "ProjectiveMeasurement":
        """``copies`` parallel uses as one apparatus with joined outcome labels."""
        labels, projs = [], []
        for combo in np.ndindex(*([len(self)] * copies)):
            labels.append(sep.join(str(self.labels[k]) for k in combo))
            projs.append(numkit.kron(*(self.projectors[k] for k in combo)))
        return ProjectiveMeasurement(tuple(labels), tuple(projs))

    def same_as(self, other: "ProjectiveMeasurement", atol: float | None = None) -> bool:
        atol = tolerances.current().proj if atol is None else atol
        if self.labels != other.labels or self.dim != other.dim:
            return False
        return all(np.max(np.abs(p - q)) <= atol
                   for p, q in zip(self.projectors, other.projectors))


@dataclasses.dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    deviation: float

    def __str__(self):
        return f"{self.kind}: {self.detail} (max deviation {self.deviation:.3e})"


class InvalidMeasurement(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate(m: ProjectiveMeasurement) -> list[Violation]:
    """Every violated measurement invariant, with its worst deviation.

    An empty list means the measurement is valid.
    """
    tol = tolerances.current().proj
    out: list[Violation] = []
    shapes = {p.shape for p in m.projectors}
    if len(shapes) != 1 or any(len(s) != 2 or s[0] != s[1] for s in shapes):
        return [Violation("shape", f"projectors must be square and equal-sized, got {sorted(shapes)}",
                          float("inf"))]
    for label, p in zip(m.labels, m.projectors):
        herm = numkit.hermiticity_error(p)
        if herm > tol:
            out.append(Violation("hermitian", f"P[{label}] is not Hermitian", herm))
        idem = float(np.max(np.abs(p @ p - p)))
        if idem > tol:
            out.append(Violation("idempotent", f"P[{label}] is not idempotent", idem))
    worst, pair = 0.0, None
    for i in range(len(m)):
        for j in range(i + 1, len(m)):
            dev = float(np.max(np.abs(m.projectors[i] @ m.projectors[j])))
            if dev > worst:
                worst, pair = dev, (m.labels[i], m.labels[j])
    if worst > tol:
        out.append(Violation("orthogonal", f"P[{pair[0]}] P[{pair[1]}] != 0", worst))
    total = sum(m.projectors)
    comp = float(np.max(np.abs(total - np.eye(m.dim))))
    if comp > tol:
        out.append(Violation("complete", "sum of projectors != identity", comp))
    return out


@dataclasses.dataclass(frozen=True)
class VonNeumannMeasurement:
    """Orthonormal eigenbasis (columns of ``vectors``) with outcome labels."""

    vectors: np.ndarray
    labels: tuple

    def __post_init__(self):
        v = numkit.as_matrix(self.vectors)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", tuple(self.labels))
        if v.shape[0] != v.shape[1] or len(self.labels) != v.shape[1]:
            raise ValueError("a von Neumann measurement needs d labelled vectors in dimension d")
        err = numkit.unitarity_error(v)
        if err > tolerances.current().proj:
            raise ValueError(f"eigenvectors are not orthonormal (deviation {err:.3e})")

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def unitary(self) -> np.ndarray:
        """The associated unitary sum_i |phi_i><i|."""
        return self.vectors

    def to_projective(self) -> ProjectiveMeasurement:
        return ProjectiveMeasurement.from_basis(self.vectors, self.labels)


@dataclasses.dataclass(frozen=True)
class CorrelationUnitary:
    matrix: np.ndarray
    labels_m: tuple
    labels_n: tuple


def correlation_unitary(m: VonNeumannMeasurement, n: VonNeumannMeasurement) -> CorrelationUnitary:
    """Matrix of overlaps <phi_i|psi_j>, i.e. U_M^H U_N."""
    if m.dim != n.dim:
        raise ValueError(f"dimension mismatch: {m.dim} vs {n.dim}")
    u = dagger(m.vectors) @ n.vectors
    err = numkit.unitarity_error(u)
    if err > tolerances.current().norm:
        raise ValueError(f"correlation matrix is not unitary (deviation {err:.3e})")
    return CorrelationUnitary(u, m.labels, n.labels)


@dataclasses.dataclass(frozen=True)
class QubitPair:
    """Canonical qubit pair: S = sigma_z and T with Bloch angle ``theta``.

    ``phi`` records the relative phase of the input pair; the canonical form
    always uses phi = 0.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0 < self.theta <= math.pi + 1e-12:
            raise ValueError(f"theta must lie in (0, pi], got {self.theta!r}")

    @property
    def a(self) -> float:
        return math.cos(self.theta / 2)

    @property
    def b(self) -> float:
        return math.sin(self.theta / 2)

    @property
    def unitary(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, b], [b, -a]], dtype=np.complex128)

    def s_basis(self) -> np.ndarray:
        return np.eye(2, dtype=np.complex128)

    def t_basis(self) -> np.ndarray:
        """Columns psi_0 = (a, b) and psi_1 = (b, -a)."""
        return self.unitary.copy()

    def apparatus(self, labels=("+1", "-1")) -> tuple[ProjectiveMeasurement, ProjectiveMeasurement]:
        return (ProjectiveMeasurement.from_basis(self.s_basis(), labels),
                ProjectiveMeasurement.from_basis(self.t_basis(), labels))


def qubit_observable_basis(theta: float, phi: float = 0.0) -> np.ndarray:
    """Eigenbasis of T with Bloch angle ``theta`` and phase ``phi`` from sigma_z."""
    a, b = math.cos(theta / 2), math.sin(theta / 2)
    e = np.exp(1j * phi)
    return np.array([[a, b], [b * e, -a * e]], dtype=np.complex128)


def _as_von_neumann(m) -> VonNeumannMeasurement:
    return m if isinstance(m, VonNeumannMeasurement) else m.as_von_neumann()


def canonical_frame(s, t) -> tuple[QubitPair, np.ndarray]:
    """Canonical pair plus the frame unitary F mapping canonical to actual.

    With ``F = U_S D`` (``D`` a diagonal phase), a canonical probe ``chi``
    becomes ``F^{(x)n} chi`` for the actual apparatus: outcome amplitudes
    under both S and T agree with the canonical ones up to phases.
    """
    tol = tolerances.current()
    s, t = _as_von_neumann(s), _as_von_neumann(t)
    if s.dim != 2 or t.dim != 2:
        raise ValueError("qubit observables required")
    if s.labels != t.labels:
        raise ValueError("S and T must share outcome labels")
    u = correlation_unitary(s, t).matrix
    overlap = min(1.0, abs(u[0, 0]))
    theta = 2 * math.acos(overlap)
    if theta <= tol.angle:
        raise ValueError("identical observables cannot be identified")
    # U = D1 Uc D2 with diagonal phases; D1 = diag(1, e^{ix}) is all the frame needs
    col0 = np.angle(u[0, 0]) if abs(u[0, 0]) > 1e-12 else 0.0
    x = float(np.angle(u[1, 0]) - col0)
    phi = float(np.mod(x, 2 * math.pi)) if abs(u[0, 0]) > 1e-12 else 0.0
    frame = s.vectors @ np.diag([1.0, np.exp(1j * x)])
    return QubitPair(min(theta, math.pi), phi), frame


def canonicalize_qubit_pair(s, t) -> QubitPair:
    """Reduce a pair of qubit observables to its Bloch angle.

    Outcome labels are taken as fixed: the first eigenvector of S is paired
    with the first of T, so theta ranges over (0, pi].
    """
    return canonical_frame(s, t)[0]


def hamming_weight(i: int) -> int:
    return int(i).bit_count()


def u_tensor_entry(pair: QubitPair, n: int, i: int, j: int) -> float:
    """Entry (i, j) of the n-fold tensor power of the canonical correlation unitary."""
    if not (0 <= i < 1 << n and 0 <= j < 1 << n):
        raise IndexError(f"indices ({i}, {j}) out of range for n = {n}")
    d = hamming_weight(i ^ j)
    sign = -1.0 if hamming_weight(i & j) % 2 else 1.0
    return sign * pair.a ** (n - d) * pair.b ** d


def u_tensor_power(pair: QubitPair, n: int) -> np.ndarray:
    """Dense n-fold tensor power of the canonical correlation unitary (real)."""
    return kernels.qubit_tensor_power(pair.a, pair.b, n)
