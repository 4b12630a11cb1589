"""Identification schemes for a pair of qubit observables.

Everything here works in the canonical frame of :class:`QubitPair`
(S = sigma_z, T with real correlation unitary ``[[a, b], [b, -a]]``).
:func:`realize` carries a canonical scheme over to an arbitrary pair of
qubit apparatus with the same Bloch angle.

Outcome strings are tuples of eigenvector indices; bit ``k`` of a basis
index ``i`` (most significant first) is the outcome of slot ``k``.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from . import kernels, numkit, tolerances
from .apparatus import (ProjectiveMeasurement, QubitPair, canonical_frame, hamming_weight,
                        u_tensor_power)
from .protocol import KnownMeasure, Scheme, SchemeError, SecretMeasure

N_MAX = 6


def min_uses(theta: float) -> int:
    """Smallest n with n * theta >= pi."""
    return max(1, math.ceil(math.pi / theta - 1e-9))


def _bits(i: int, n: int) -> tuple:
    i = int(i)
    return tuple((i >> (n - 1 - k)) & 1 for k in range(n))


def _index(bits: tuple) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def even_weight_indices(n: int) -> list[int]:
    return [i for i in range(1 << n) if hamming_weight(i) % 2 == 0]


def w_indices(n: int) -> list[int]:
    return [1 << (n - 1 - k) for k in range(n)]


def simple_diagonal(xi: np.ndarray, u_n: np.ndarray) -> np.ndarray:
    """Diagonal of |xi><xi| U_n."""
    xi = np.asarray(xi)
    return xi * (u_n.T @ np.conj(xi))


def check_simple_state(xi: np.ndarray, pair: QubitPair, n: int) -> tuple[bool, float]:
    """Whether ``xi`` nullifies the diagonal of |xi><xi| U^(x)n, and the worst entry."""
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape != (1 << n,):
        raise ValueError(f"state of length {1 << n} expected for n = {n}, got {xi.shape}")
    worst = float(np.max(np.abs(simple_diagonal(xi, u_tensor_power(pair, n)))))
    return worst <= tolerances.current().num, worst


def build_gn(n: int) -> np.ndarray:
    """Even-weight superposition with signs (-1)^{w(i)/2}; ``build_gn(0)`` is [1]."""
    if n < 0:
        raise ValueError("n must be non-negative")
    g = np.zeros(1 << n, dtype=np.complex128)
    for i in even_weight_indices(n):
        g[i] = (-1) ** (hamming_weight(i) // 2)
    return g / np.linalg.norm(g)


def build_w_state(n: int) -> np.ndarray:
    w = np.zeros(1 << n, dtype=np.complex128)
    w[w_indices(n)] = 1 / math.sqrt(n)
    return w


def gn_diagonal(pair: QubitPair, n: int) -> float:
    """Common value of the diagonal of |G_n><G_n| U^(x)n on even-weight indices."""
    return math.cos(n * pair.theta / 2) / 2 ** (n - 1)


def _singular(a: np.ndarray, tol: float) -> bool:
    return bool(np.linalg.svd(a, compute_uv=False)[-1] <= tol)


def search_simple_submatrix(pair: QubitPair, n: int, max_subset: int | None = None,
                            n_max: int = N_MAX) -> Optional[tuple]:
    """Index set of a singular principal submatrix of U^(x)n, if one exists.

    The closed-form candidates (weight-one strings, then even-weight strings)
    are tried first, then every subset in order of size and, within a size,
    lexicographically. ``max_subset`` caps the subset size of the scan.
    """
    if not 1 <= n <= n_max:
        raise ValueError(f"n must lie in [1, {n_max}]")
    u = u_tensor_power(pair, n)
    # measured against the whole matrix (norm 1), so 1 x 1 blocks can qualify
    tol = tolerances.current().sing * np.linalg.norm(u, 2)
    for cand in (w_indices(n), even_weight_indices(n)):
        idx = sorted(cand)
        if _singular(u[np.ix_(idx, idx)], tol):
            return tuple(idx)
    dim = 1 << n
    cap = dim if max_subset is None else min(max_subset, dim)
    for k in range(1, cap + 1):
        hit = kernels.scan_principal_submatrices(u, k, tol)
        if hit is not None:
            return tuple(hit)
    return None


def simple_state_from_subset(pair: QubitPair, n: int, subset) -> np.ndarray:
    """Nullifying state built from the kernel of a singular principal submatrix.

    The entries on ``subset`` form a null vector of the adjoint submatrix, so
    <xi|U^(x)n|i> vanishes for every i in the subset and the diagonal is zero.
    """
    idx = list(subset)
    u = u_tensor_power(pair, n)
    left, _, _ = np.linalg.svd(u[np.ix_(idx, idx)].astype(np.complex128))
    xi = np.zeros(1 << n, dtype=np.complex128)
    xi[idx] = left[:, -1]
    return xi / np.linalg.norm(xi)


@dataclasses.dataclass(frozen=True, eq=False)
class SimpleScheme(Scheme):
    """Measure every slot of ``probe`` and decide by support membership."""

    n: int
    probe: np.ndarray
    support_m: frozenset
    support_n: frozenset
    m_apparatus: ProjectiveMeasurement
    n_apparatus: ProjectiveMeasurement
    rule: str = "outcome string in support of M => M, otherwise N"
    kind = "simple"

    @property
    def dims(self) -> tuple:
        return (self.m_apparatus.dim,) * self.n

    def steps(self) -> list:
        return [SecretMeasure(k) for k in range(self.n)]

    def decide(self, record: tuple) -> str:
        rec = tuple(record)
        if rec in self.support_m:
            return "M"
        if rec in self.support_n:
            return "N"
        raise SchemeError(f"outcome string {rec} lies outside both supports")


def _supports(probe: np.ndarray, m: ProjectiveMeasurement, t: ProjectiveMeasurement, n: int):
    eps = tolerances.current().num
    out = []
    for app in (m, t):
        basis = np.stack([numkit.range_basis(p)[:, 0] for p in app.projectors], axis=1)
        amps = numkit.dagger(numkit.kron_power(basis, n)) @ probe
        out.append(frozenset(_bits(i, n) for i in np.nonzero(np.abs(amps) ** 2 > eps)[0]))
    return out


def build_simple_scheme(pair: QubitPair, n: int, xi: np.ndarray,
                        rule: str | None = None) -> SimpleScheme:
    """Simple scheme with probe ``xi`` (canonical frame, so U_M = I)."""
    ok, worst = check_simple_state(xi, pair, n)
    if not ok:
        raise ValueError(f"state does not nullify the diagonal (max |entry| {worst:.3e})")
    xi = np.asarray(xi, dtype=np.complex128)
    s_app, t_app = pair.apparatus()
    sup_m, sup_n = _supports(xi, s_app, t_app, n)
    kwargs = {} if rule is None else {"rule": rule}
    return SimpleScheme(n, xi, sup_m, sup_n, s_app, t_app, **kwargs)


def build_w_scheme(n: int) -> tuple[float, SimpleScheme]:
    """Bloch angle with sin^2(theta/2) = 1/n and its W-state simple scheme."""
    if n < 2:
        raise ValueError("the W scheme needs n >= 2")
    theta = 2 * math.asin(1 / math.sqrt(n))
    scheme = build_simple_scheme(QubitPair(theta), n, build_w_state(n),
                                 rule="exactly one outcome -1 => M, otherwise N")
    return theta, scheme


def find_simple_scheme(pair: QubitPair, n_max: int = N_MAX, search_n_max: int = 3,
                       max_subset: int | None = None) -> Optional[SimpleScheme]:
    """Fewest-use simple scheme found among closed forms and a submatrix search."""
    tol = tolerances.current()
    for n in range(1, n_max + 1):
        if abs(gn_diagonal(pair, n)) <= tol.num and check_simple_state(build_gn(n), pair, n)[0]:
            return build_simple_scheme(pair, n, build_gn(n))
        if n >= 2 and check_simple_state(build_w_state(n), pair, n)[0]:
            return build_simple_scheme(pair, n, build_w_state(n),
                                       rule="exactly one outcome -1 => M, otherwise N")
        if n <= search_n_max:
            subset = search_simple_submatrix(pair, n, max_subset=max_subset, n_max=n_max)
            if subset is not None:
                return build_simple_scheme(pair, n, simple_state_from_subset(pair, n, subset))
    return None


# --- M-M scheme -------------------------------------------------------------

def suffix_block(i: int, n: int) -> int:
    """Block k of the suffix partition of even-weight strings (1-based).

    Block 1 holds strings ending in 0; block k >= 2 holds strings ending in
    1 0^{k-2} 1, the last block being the string 1 0^{n-2} 1 itself.
    """
    if i & 1 == 0:
        return 1
    rest = i >> 1
    k = 2
    while rest & 1 == 0:
        rest >>= 1
        k += 1
        if k > n:
            raise ValueError(f"{i:0{n}b} has odd weight")
    return k


def suffix_part_state(n: int, k: int) -> np.ndarray:
    """|G_{n-k}> followed by the suffix 0 (k = 1) or 1 0^{k-2} 1."""
    if k == 1:
        suffix = np.array([1, 0], dtype=np.complex128)
    else:
        suffix = np.zeros(1 << k, dtype=np.complex128)
        suffix[(1 << (k - 1)) | 1] = 1
    return np.kron(build_gn(n - k), suffix)


@dataclasses.dataclass(frozen=True, eq=False)
class GnFamily:
    n: int
    gn: np.ndarray
    parts: tuple
    weights: np.ndarray  # weight of gn first, then of each part

    @property
    def states(self) -> tuple:
        return (self.gn,) + tuple(self.parts)

    def density(self) -> np.ndarray:
        return sum(w * np.outer(s, s.conj()) for w, s in zip(self.weights, self.states))


def mm_diagonal(rho: np.ndarray, u_n: np.ndarray) -> np.ndarray:
    """Diagonal of rho U_n."""
    return np.einsum("ij,ji->i", rho, u_n)


def check_mm_density(rho: np.ndarray, pair: QubitPair, n: int) -> tuple[bool, float]:
    rho = numkit.as_matrix(rho)
    if rho.shape != (1 << n, 1 << n) or not numkit.is_density_matrix(rho):
        raise ValueError("a density matrix on 2^n dimensions is required")
    worst = float(np.max(np.abs(mm_diagonal(rho, u_tensor_power(pair, n)))))
    return worst <= tolerances.current().num, worst


def gn_family(pair: QubitPair, n: int | None = None) -> GnFamily:
    """Mixture of |G_n> and the suffix states whose density nullifies diag(rho U^(x)n).

    The weights solve the linear system "block value = 0 on every suffix
    block, weights sum to 1", with per-block values read off the dense
    diagonals.
    """
    n = min_uses(pair.theta) if n is None else n
    tol = tolerances.current()
    u_n = u_tensor_power(pair, n)
    states = [build_gn(n)] + [suffix_part_state(n, k) for k in range(1, n + 1)]
    blocks = {i: suffix_block(i, n) for i in even_weight_indices(n)}
    values = np.zeros((n, n + 1))
    for col, s in enumerate(states):
        diag = simple_diagonal(s, u_n)
        for k in range(1, n + 1):
            members = [i for i, blk in blocks.items() if blk == k]
            values[k - 1, col] = float(np.mean(diag[members].real))
    system = np.vstack([values, np.ones(n + 1)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    weights = np.linalg.lstsq(system, rhs, rcond=None)[0]
    if np.min(weights) < -tol.num:
        raise ValueError(f"no valid mixture at n = {n} (weights {weights})")
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum()
    return GnFamily(n, states[0], tuple(states[1:]), weights)


@dataclasses.dataclass(frozen=True, eq=False)
class MMScheme(Scheme):
    """Measure n system slots, then (if needed) a known measurement on the ancilla.

    ``table`` maps each outcome string to "M", "N", a two-outcome known
    measurement labelled ("M", "N"), or None for strings impossible under
    both hypotheses.
    """

    n: int
    probe: np.ndarray
    ancilla_dim: int
    table: dict
    m_apparatus: ProjectiveMeasurement
    n_apparatus: ProjectiveMeasurement
    rho: Optional[np.ndarray] = None
    kind = "mm"

    @property
    def dims(self) -> tuple:
        return (self.m_apparatus.dim,) * self.n + (self.ancilla_dim,)

    def steps(self) -> list:
        return [SecretMeasure(k) for k in range(self.n)] + [KnownMeasure(self.n, self.final_measurement)]

    def final_measurement(self, record: tuple):
        entry = self.table.get(tuple(record[:self.n]))
        return entry if isinstance(entry, ProjectiveMeasurement) else None

    def decide(self, record: tuple) -> str:
        key = tuple(record[:self.n])
        entry = self.table.get(key)
        if isinstance(entry, str):
            return entry
        if isinstance(entry, ProjectiveMeasurement):
            return entry.labels[record[self.n]]
        raise SchemeError(f"outcome string {key} is impossible under both hypotheses")


def residuals(probe: np.ndarray, basis: np.ndarray, n: int, ancilla_dim: int) -> np.ndarray:
    """Row i: unnormalized ancilla state left after outcome string i."""
    x = np.asarray(probe).reshape(1 << n, ancilla_dim)
    return numkit.dagger(numkit.kron_power(basis, n)) @ x


def decision_table(probe: np.ndarray, n: int, ancilla_dim: int, s_basis: np.ndarray,
                   t_basis: np.ndarray) -> dict:
    """Per-outcome decisions from the residual ancilla states under both hypotheses."""
    eps = tolerances.current().num
    res_m = residuals(probe, s_basis, n, ancilla_dim)
    res_n = residuals(probe, t_basis, n, ancilla_dim)
    table: dict = {}
    for i in range(1 << n):
        hat, tilde = res_m[i], res_n[i]
        pm, pn = np.vdot(hat, hat).real, np.vdot(tilde, tilde).real
        key = _bits(i, n)
        if pm <= eps and pn <= eps:
            table[key] = None
        elif pm <= eps:
            table[key] = "N"
        elif pn <= eps:
            table[key] = "M"
        else:
            overlap = abs(np.vdot(tilde, hat)) / math.sqrt(pm * pn)
            if overlap > 1e-9:
                raise ValueError(f"residual states for {key} overlap ({overlap:.3e})")
            proj = np.outer(hat, hat.conj()) / pm
            table[key] = ProjectiveMeasurement(("M", "N"), (proj, np.eye(ancilla_dim) - proj))
    return table


def build_mm_optimal(pair: QubitPair) -> MMScheme:
    """The M-M scheme using the unknown apparatus ceil(pi/theta) times."""
    if not 0 < pair.theta < math.pi:
        raise ValueError("theta must lie in (0, pi); use a one-use simple scheme at pi")
    family = gn_family(pair)
    n = family.n
    rho = family.density()
    ok, worst = check_mm_density(rho, pair, n)
    if not ok:
        raise ValueError(f"mixture does not nullify the diagonal (max |entry| {worst:.3e})")
    probe = numkit.purify(rho)
    anc = probe.size >> n
    s_app, t_app = pair.apparatus()
    table = decision_table(probe, n, anc, pair.s_basis(), pair.t_basis())
    return MMScheme(n, probe, anc, table, s_app, t_app, rho=rho)


def certify_lower_bound(theta: float, n: int) -> bool:
    """Whether a zero-diagonal rho U^(x)n can exist with n uses.

    (U sigma_z)^(x)n has eigenphases spread over [-n theta/2, n theta/2]; a
    zero-trace combination needs that spread to cover at least pi.
    """
    if not 0 < theta < math.pi:
        raise ValueError("theta must lie in (0, pi)")
    pair = QubitPair(theta)
    phases = np.angle(np.linalg.eigvals(pair.unitary @ np.diag([1.0, -1.0])))
    spread = n * (phases.max() - phases.min())
    return bool(spread >= math.pi - 1e-9 * max(1, n))


def mm_residual_pair(scheme: MMScheme, prefix: tuple):
    """Normalized states left on (last slot, ancilla) after n-1 outcomes ``prefix``.

    Returns ``(xi_S, xi_T)``; an entry is None when the prefix has zero
    probability under that hypothesis. Canonical frame only.
    """
    n, anc = scheme.n, scheme.ancilla_dim
    if len(prefix) != n - 1:
        raise ValueError("prefix must have n - 1 outcomes")
    out = []
    for app in (scheme.m_apparatus, scheme.n_apparatus):
        basis = np.stack([numkit.range_basis(p)[:, 0] for p in app.projectors], axis=1)
        x = scheme.probe.reshape(1 << (n - 1), 2 * anc)
        row = numkit.dagger(numkit.kron_power(basis, n - 1)) @ x
        v = row[_index(prefix)] if n > 1 else row[0]
        nv = np.linalg.norm(v)
        out.append(None if nv ** 2 <= tolerances.current().num else v / nv)
    return tuple(out)


def build_final_unitary(xi_s: np.ndarray, xi_t: np.ndarray, pair: QubitPair) -> np.ndarray:
    """Unitary V with V xi_S in |0> (x) anything and V xi_T in |psi_1> (x) anything.

    Both states live on (qubit, ancilla) with the qubit first. A
    one-dimensional ancilla is zero-padded to two dimensions; the returned
    unitary then acts on the padded space.
    """
    tol = tolerances.current()
    xi_s = np.asarray(xi_s, dtype=np.complex128)
    xi_t = np.asarray(xi_t, dtype=np.complex128)
    if xi_s.shape != xi_t.shape or xi_s.size % 2:
        raise ValueError("states must share a (2 x ancilla) shape")
    c = np.vdot(xi_s, xi_t)
    b = pair.b
    if abs(c) > b + tol.norm:
        raise ValueError(f"overlap {abs(c):.6g} exceeds sin(theta/2) = {b:.6g}")
    anc = xi_s.size // 2
    if anc == 1:
        pad = lambda v: np.kron(v, np.array([1, 0]))  # noqa: E731
        xi_s, xi_t, anc = pad(xi_s), pad(xi_t), 2
    t = c / b
    if abs(t) > 1:
        t /= abs(t)
    e0 = np.zeros(anc, dtype=np.complex128)
    e0[0] = 1
    e1 = np.zeros(anc, dtype=np.complex128)
    e1[1] = 1
    target_s = np.kron(np.array([1, 0]), e0)
    target_t = np.kron(pair.t_basis()[:, 1], t * e0 + math.sqrt(max(0.0, 1 - abs(t) ** 2)) * e1)
    return numkit.isometric_extension(np.stack([xi_s, xi_t], axis=1),
                                      np.stack([target_s, target_t], axis=1))


# --- canonical -> actual apparatus -------------------------------------------

def realize(scheme, s: ProjectiveMeasurement, t: ProjectiveMeasurement):
    """Carry a canonical qubit scheme over to the apparatus pair (s, t).

    The probe becomes F^(x)n (x) I applied to the canonical probe, where F is
    the frame unitary of the pair; supports and decision tables are
    unchanged because every outcome amplitude only picks up a phase.
    """
    pair, frame = canonical_frame(s, t)
    n = scheme.n
    anc = getattr(scheme, "ancilla_dim", 1)
    lift = np.kron(numkit.kron_power(frame, n), np.eye(anc))
    probe = lift @ scheme.probe
    if isinstance(scheme, SimpleScheme):
        return dataclasses.replace(scheme, probe=probe, m_apparatus=s, n_apparatus=t)
    if isinstance(scheme, MMScheme):
        rho = None
        if scheme.rho is not None:
            fn = numkit.kron_power(frame, n)
            rho = fn @ scheme.rho @ numkit.dagger(fn)
        return dataclasses.replace(scheme, probe=probe, m_apparatus=s, n_apparatus=t, rho=rho)
    raise TypeError(f"cannot realize {type(scheme).__name__}")
