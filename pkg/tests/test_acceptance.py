"""Acceptance gate: one test per criterion, at the stated tolerances and time limits."""

import math
import time
from functools import reduce

import numpy as np
import pytest
from scipy import optimize

from mdisc import distance as D
from mdisc import general_schemes as gs
from mdisc import numkit
from mdisc import qubit_schemes as qs
from mdisc import simulator as sim
from mdisc import tolerances
from mdisc.apparatus import QubitPair
from conftest import pauli_pair, qutrit_pair
from generators import degenerate_pair, rank_mismatch_pair, separation_instance

pytestmark = pytest.mark.acceptance


def theta_grid(count=20):
    return np.linspace(math.pi / count, math.pi, count)


def test_criterion_1_intro_example(acceptance_report):
    t0 = time.perf_counter()
    z, x = pauli_pair()
    pair = QubitPair(math.pi / 2)
    scheme = qs.realize(qs.find_simple_scheme(pair), z, x)
    gn_probe = scheme.n == 2 and np.abs(np.abs(scheme.probe) - np.abs(qs.build_gn(2))).max() < 1e-15
    stats = sim.evaluate(scheme, 10000, seed=1)
    elapsed = time.perf_counter() - t0
    ok = (gn_probe and stats.accuracy_given_M == 1.0 and stats.accuracy_given_N == 1.0
          and elapsed < 1.0)
    assert acceptance_report(1, ok, f"sigma_z vs sigma_x, G_2 probe, accuracy "
                                    f"{stats.accuracy_given_M}/{stats.accuracy_given_N}", elapsed)


def test_criterion_2_gn_diagonal(acceptance_report):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(2, 9):
        g = qs.build_gn(n)
        rho = np.outer(g, g.conj())
        even = np.zeros(1 << n, dtype=bool)
        even[qs.even_weight_indices(n)] = True
        for theta in theta_grid():
            pair = QubitPair(theta)
            dense = reduce(np.kron, [pair.unitary] * n)
            diag = np.diag(rho @ dense)
            expect = np.where(even, math.cos(n * theta / 2) / 2 ** (n - 1), 0.0)
            worst = max(worst, float(np.abs(diag - expect).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5
    assert acceptance_report(2, ok, f"G_n diagonal, n = 2..8, max deviation {worst:.2e}", elapsed)


def test_criterion_3_w_scheme(acceptance_report):
    t0 = time.perf_counter()
    ok, notes = True, []
    for n in (3, 4, 5):
        theta, scheme = qs.build_w_scheme(n)
        pair = QubitPair(theta)
        idx = qs.w_indices(n)
        smin = np.linalg.svd(qs.u_tensor_power(pair, n)[np.ix_(idx, idx)], compute_uv=False)[-1]
        stats = sim.evaluate(scheme, 10000, seed=n)
        ok &= smin < 1e-10 and stats.accuracy_given_M == 1.0 and stats.accuracy_given_N == 1.0
        notes.append(f"n={n}: s_min {smin:.1e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5
    assert acceptance_report(3, ok, "W scheme, " + ", ".join(notes), elapsed)


def test_criterion_4_optimal_mm(acceptance_report):
    t0 = time.perf_counter()
    ok, notes = True, []
    for theta in (0.7, 1.0, 2.0, 2.8):
        pair = QubitPair(theta)
        scheme = qs.build_mm_optimal(pair)
        n = scheme.n
        fam = qs.gn_family(pair)
        weights_ok = fam.weights.min() >= 0 and abs(fam.weights.sum() - 1) < 1e-12
        diag = np.abs(qs.mm_diagonal(scheme.rho, qs.u_tensor_power(pair, n))).max()
        stats = sim.evaluate(scheme, 10000, seed=11)
        ok &= (n == math.ceil(math.pi / theta) and weights_ok and diag <= 1e-10
               and stats.accuracy_given_M == 1.0 and stats.accuracy_given_N == 1.0
               and not qs.certify_lower_bound(theta, n - 1) and qs.certify_lower_bound(theta, n))
        notes.append(f"theta={theta}: n={n}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    assert acceptance_report(4, ok, "optimal M-M, " + ", ".join(notes), elapsed)


def test_criterion_5_separation_sweep(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = {"unitarity": 0.0, "p_fixed": 0.0, "q_separated": 0.0, "v_excess": 0.0}
    for k in range(200):
        p, q = separation_instance(rng, boundary=k % 10 == 0)
        cert = gs.separation_unitary(p, q)
        u = cert.u
        pq = numkit.operator_norm(p @ q)
        worst["unitarity"] = max(worst["unitarity"], numkit.unitarity_error(u))
        worst["p_fixed"] = max(worst["p_fixed"], float(np.abs(u @ p.conj() @ u.conj().T - p).max()))
        worst["q_separated"] = max(worst["q_separated"],
                                   abs(np.trace(q @ u @ q.conj() @ u.conj().T)))
        excess = numkit.operator_norm(cert.v) - pq ** 2 / (1 - pq ** 2)
        worst["v_excess"] = max(worst["v_excess"], excess)
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-9 and elapsed < 30
    detail = "200 instances, " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert acceptance_report(5, ok, detail, elapsed)


def test_criterion_6_qutrit_mum(acceptance_report):
    t0 = time.perf_counter()
    m, n = qutrit_pair()
    plan = gs.plan_general(m, n)
    scheme = plan.scheme
    rep_m = gs.mum_repeat_probability(scheme, "M")
    rep_n = gs.mum_repeat_probability(scheme, "N")
    # the hand-built U_1 of the worked example, as an independent witness
    r = math.sqrt(24)
    u1 = np.array([[5, 0, 0], [0, -1, r], [0, -r, -1]]) / 5
    p1, q1 = m.projectors[0], n.projectors[0]
    witness = (np.abs(u1 @ p1.conj() @ u1.conj().T - p1).max() <= 1e-10
               and abs(np.trace(q1 @ u1 @ q1.conj() @ u1.conj().T)) <= 1e-10)
    stats = sim.evaluate(scheme, 10000, seed=6)
    elapsed = time.perf_counter() - t0
    ok = (isinstance(plan, gs.DirectMUM) and abs(rep_m - 1) <= 1e-10 and rep_n <= 1e-10 and witness
          and stats.accuracy_given_M == 1.0 and stats.accuracy_given_N == 1.0 and elapsed < 5)
    assert acceptance_report(6, ok, f"qutrit M-U-M, repeat probability {rep_m:.12f} / {rep_n:.1e}",
                             elapsed)


def test_criterion_7_distances(acceptance_report):
    t0 = time.perf_counter()
    worst_d = worst_f = 0.0
    certified = True
    for theta in theta_grid():
        s, t = QubitPair(theta).apparatus()
        worst_d = max(worst_d, abs(D.dmax(s, t).value - math.sin(theta / 2)))
        for stab in (False, True):
            rep = D.fidelity(s, t, stabilized=stab)
            certified &= rep.certified
            worst_f = max(worst_f, abs(rep.value - math.cos(theta / 2)))
    stab_dev = 0.0
    for theta in (math.pi / 2, 2.0, 2.5):
        s, t = QubitPair(theta).apparatus()
        stab_dev = max(stab_dev, abs(D.dstab(s.tensor_power(2), t.tensor_power(2)).value - 1))
    s, t = QubitPair(2.0).apparatus()
    dmax2 = D.dmax(s.tensor_power(2), t.tensor_power(2)).value
    elapsed = time.perf_counter() - t0
    ok = (worst_d <= 1e-9 and worst_f <= 1e-6 and certified and stab_dev <= 1e-9
          and dmax2 < 1 - 1e-6 and elapsed < 60)
    detail = (f"dmax dev {worst_d:.1e}, fidelity dev {worst_f:.1e}, dstab(2 copies) dev "
              f"{stab_dev:.1e}, dmax(2 copies, theta=2) {dmax2:.6f}")
    assert acceptance_report(7, ok, detail, elapsed)


def test_criterion_8_general_planner(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(88)
    ok = True
    for _ in range(50):
        m, n = rank_mismatch_pair(rng)
        plan = gs.plan_general(m, n)
        ok &= isinstance(plan, gs.OrthogonalProbe) and plan.scheme.uses == 1
        stats = sim.evaluate(plan.scheme, 200, seed=8)
        ok &= stats.accuracy_given_M == 1.0 and stats.accuracy_given_N == 1.0
        ok &= all(abs(sim.exact_accuracy(plan.scheme, h) - 1) < 1e-10 for h in "MN")
    worst_reduced = 0.0
    for _ in range(50):
        m, n, _ = degenerate_pair(rng)
        plan = gs.plan_general(m, n)
        ok &= isinstance(plan, gs.ReducedThenPlan)
        worst_reduced = max(worst_reduced, max(gs.overlap_norms(plan.reduction.m, plan.reduction.n)))
    z, x = pauli_pair()
    plan = gs.plan_general(z, x)
    lifted = isinstance(plan, gs.LiftedMUM) and plan.copies == 2
    stats = sim.evaluate(plan.scheme, 10000, seed=3)
    ok &= lifted and stats.accuracy_given_M == 1.0 and stats.accuracy_given_N == 1.0
    ok &= worst_reduced < 1
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    detail = (f"50 rank-mismatch, 50 degenerate (max reduced overlap {worst_reduced:.3f}), "
              f"sigma_z/sigma_x lifted L={getattr(plan, 'copies', None)}")
    assert acceptance_report(8, ok, detail, elapsed)


def min_diagonal_residual(pair, n, seed, starts=12):
    """Oracle: smallest sum |diag(|xi><xi| U^(x)n)|^2 over unit xi, by multistart least squares."""
    dense = reduce(np.kron, [pair.unitary] * n)
    dim = 1 << n
    rng = np.random.default_rng(seed)

    def residual(v):
        xi = v[:dim] + 1j * v[dim:]
        xi = xi / np.linalg.norm(xi)
        r = xi * (dense.T @ xi.conj())
        return np.concatenate([r.real, r.imag])

    best = np.inf
    for _ in range(starts):
        res = optimize.least_squares(residual, rng.standard_normal(2 * dim), xtol=1e-14,
                                     ftol=1e-14, gtol=1e-14)
        best = min(best, float(np.sum(res.fun ** 2)))
    return best


def test_criterion_9_submatrix_equivalence(acceptance_report):
    t0 = time.perf_counter()
    special = [math.pi / 3, math.pi / 2, 2 * math.asin(1 / math.sqrt(3)), math.pi]
    grid = sorted(list(np.linspace(0.05, 3.05, 46)) + special)
    ok = True
    found = gap = 0
    for k, theta in enumerate(grid):
        pair = QubitPair(theta)
        for n in (1, 2, 3):
            subset = qs.search_simple_submatrix(pair, n)
            if subset is not None:
                xi = qs.simple_state_from_subset(pair, n, subset)
                ok &= qs.check_simple_state(xi, pair, n)[0]
                found += 1
            else:
                residual = min_diagonal_residual(pair, n, seed=k * 3 + n)
                # a block with smallest singular value s admits residual about s**2
                ok &= residual > tolerances.current().sing ** 2
                gap = min(gap, residual) if gap else residual
    elapsed = time.perf_counter() - t0
    ok &= found > 0 and elapsed < 60
    detail = (f"{len(grid)} angles x n = 1..3, {found} singular cases, smallest oracle residual "
              f"elsewhere {gap:.1e}")
    assert acceptance_report(9, ok, detail, elapsed)
