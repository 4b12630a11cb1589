import itertools
import math

import numpy as np
import pytest

from mdisc import _kernels_py, kernels
from mdisc.apparatus import QubitPair, u_tensor_entry


def backends():
    out = [("python", _kernels_py)]
    try:
        from mdisc import _kernels
        out.append(("compiled", _kernels))
    except ImportError:
        pass
    return out


@pytest.mark.parametrize("name,mod", backends())
def test_tensor_power_matches_kron(name, mod):
    pair = QubitPair(1.1)
    for n in range(1, 6):
        dense = np.real(pair.unitary)
        expect = dense
        for _ in range(n - 1):
            expect = np.kron(expect, dense)
        got = mod.qubit_tensor_power(pair.a, pair.b, n)
        assert np.abs(got - expect).max() < 1e-14


def test_entry_formula_matches_dense():
    pair = QubitPair(0.9)
    dense = kernels.qubit_tensor_power(pair.a, pair.b, 4)
    for i, j in itertools.product(range(16), repeat=2):
        assert abs(dense[i, j] - u_tensor_entry(pair, 4, i, j)) < 1e-15


def test_backends_agree_exactly():
    mods = backends()
    if len(mods) < 2:
        pytest.skip("compiled backend not built")
    for n in range(1, 8):
        a, b = math.cos(0.35), math.sin(0.35)
        x = mods[0][1].qubit_tensor_power(a, b, n)
        y = mods[1][1].qubit_tensor_power(a, b, n)
        assert np.array_equal(x, y)


@pytest.mark.parametrize("name,mod", backends())
def test_scan_finds_planted_singular_block(name, mod):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 7))
    a = a + a.T
    # make rows/cols 2 and 5 a singular 2x2 principal block
    a[2, 2], a[5, 5], a[2, 5] = 1.0, 4.0, 2.0
    a[5, 2] = 2.0
    hit = mod.scan_principal_submatrices(a, 2, 1e-12)
    assert hit is not None
    sub = a[np.ix_(hit, hit)]
    assert abs(np.linalg.det(sub)) < 1e-10
    assert mod.scan_principal_submatrices(np.eye(5), 3, 1e-12) is None


@pytest.mark.parametrize("name,mod", backends())
def test_scan_flags_vanishing_diagonal_entry(name, mod):
    a = np.array([[0.3, 0.5, 0.1], [0.5, 1e-14, 0.2], [0.1, 0.2, 0.7]])
    assert mod.scan_principal_submatrices(a, 1, 1e-10) == (1,)
    assert mod.scan_principal_submatrices(a, 1, 1e-15) is None


def test_scan_backends_return_same_first_hit():
    mods = backends()
    if len(mods) < 2:
        pytest.skip("compiled backend not built")
    pair = QubitPair(2 * math.asin(1 / math.sqrt(3)))
    u = kernels.qubit_tensor_power(pair.a, pair.b, 3)
    hits = [m.scan_principal_submatrices(u, 3, 1e-8) for _, m in mods]
    assert hits[0] == hits[1] is not None


def test_backend_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.available_backends()
