import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdisc import numkit, tolerances
from conftest import rand_state, rand_unitary


def test_kron_matches_numpy_fold():
    rng = np.random.default_rng(0)
    a, b, c = (rng.standard_normal((2, 2)) for _ in range(3))
    assert np.abs(numkit.kron(a, b, c) - np.kron(np.kron(a, b), c)).max() < 1e-14
    assert numkit.kron().shape == (1, 1)
    assert np.abs(numkit.kron_power(a, 3) - numkit.kron(a, a, a)).max() < 1e-14


def test_kron_power_zero_and_negative():
    assert numkit.kron_power(np.eye(2), 0).shape == (1, 1)
    with pytest.raises(ValueError):
        numkit.kron_power(np.eye(2), -1)


def test_projector_helpers():
    rng = np.random.default_rng(1)
    u = rand_unitary(5, rng)
    p = numkit.projector_onto(u[:, :2])
    assert numkit.is_projector(p)
    assert numkit.projector_rank(p) == 2
    basis = numkit.range_basis(p)
    assert basis.shape == (5, 2)
    assert np.abs(numkit.projector_onto(basis) - p).max() < 1e-12
    assert not numkit.is_projector(0.5 * p)


def test_orthonormalize_drops_dependent_columns():
    v = np.array([[1, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    q = numkit.orthonormalize(v)
    assert q.shape == (3, 2)
    assert np.abs(q.conj().T @ q - np.eye(2)).max() < 1e-14
    q2 = numkit.orthonormalize(np.array([[1.0], [1.0], [0.0]]), against=np.eye(3)[:, :1])
    assert np.abs(q2[:, 0] - [0, 1, 0]).max() < 1e-14


def test_complete_basis_is_unitary():
    rng = np.random.default_rng(2)
    cols = numkit.orthonormalize(rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2)))
    full = numkit.complete_basis(cols)
    assert numkit.unitarity_error(full) < 1e-12
    assert np.abs(full[:, :2] - cols).max() < 1e-14


def test_psd_sqrt():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = g @ g.conj().T
    s = numkit.psd_sqrt(a)
    assert np.abs(s @ s - a).max() < 1e-10
    with pytest.raises(ValueError):
        numkit.psd_sqrt(-np.eye(2))
    with pytest.raises(ValueError):
        numkit.psd_sqrt(np.array([[0, 1], [0, 0]]))


@settings(max_examples=40, deadline=None)
@given(r=st.integers(1, 3), extra=st.integers(0, 3), seed=st.integers(0, 2**31))
def test_unitary_dilation_property(r, extra, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    v = g / (numkit.operator_norm(g) * (1 + rng.random()))
    w = numkit.unitary_dilation(v, 2 * r + extra)
    assert numkit.unitarity_error(w) < 1e-10
    assert np.abs(w[:r, :r] - v).max() < 1e-14


def test_unitary_dilation_errors():
    with pytest.raises(ValueError):
        numkit.unitary_dilation(2 * np.eye(1), 2)
    with pytest.raises(ValueError):
        numkit.unitary_dilation(0.5 * np.eye(2), 3)


def test_purify_and_partial_trace():
    rng = np.random.default_rng(4)
    vecs = numkit.orthonormalize(rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
    rho = vecs @ np.diag([0.7, 0.3]) @ vecs.conj().T
    psi = numkit.purify(rho)
    assert psi.size == 8
    assert np.abs(numkit.partial_trace(psi, (4, 2), (0,)) - rho).max() < 1e-12
    big = np.outer(psi, psi.conj())
    assert np.abs(numkit.partial_trace(big, (4, 2), (0,)) - rho).max() < 1e-12
    with pytest.raises(ValueError):
        numkit.purify(np.diag([1.0, 1.0]))


def test_partial_trace_of_product():
    rng = np.random.default_rng(5)
    a, b, c = rand_state(2, rng), rand_state(3, rng), rand_state(2, rng)
    psi = numkit.kron(a[:, None], b[:, None], c[:, None])[:, 0]
    red = numkit.partial_trace(psi, (2, 3, 2), (0, 2))
    expect = np.kron(np.outer(a, a.conj()), np.outer(c, c.conj()))
    assert np.abs(red - expect).max() < 1e-12


def test_subspace_meet():
    p = np.diag([1.0, 1.0, 0.0, 0.0])
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    v = np.zeros((4, 2))
    v[0, 0] = 1
    v[1:3, 1] = h[:, 0]
    q = v @ v.T
    meet = numkit.subspace_meet(p, q)
    assert np.abs(meet - np.diag([1.0, 0, 0, 0])).max() < 1e-12
    assert numkit.projector_rank(numkit.subspace_meet(p, np.eye(4) - p)) == 0


@settings(max_examples=30, deadline=None)
@given(d=st.integers(2, 5), k=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_isometric_extension_property(d, k, seed):
    k = min(k, d)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    y = rand_unitary(d, rng) @ x
    w = numkit.isometric_extension(x, y)
    assert numkit.unitarity_error(w) < 1e-10
    assert np.abs(w @ x - y).max() < 1e-9


def test_isometric_extension_rejects_gram_mismatch():
    with pytest.raises(ValueError):
        numkit.isometric_extension(np.array([1.0, 0.0]), np.array([2.0, 0.0]))


def test_strict_profile_changes_thresholds():
    tolerances.use_profile("strict")
    assert tolerances.current().num == 1e-12
    assert tolerances.current_name() == "strict"
    with pytest.raises(ValueError):
        tolerances.use_profile("sloppy")


def test_profile_from_env(monkeypatch):
    monkeypatch.setenv("MDISC_TOL", "strict")
    assert tolerances.profile_from_env().proj == 1e-10
    monkeypatch.delenv("MDISC_TOL")
    assert tolerances.profile_from_env().proj == 1e-8
