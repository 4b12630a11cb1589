import math
from collections import Counter

import numpy as np
import pytest

from mdisc import general_schemes as gs, qubit_schemes as qs, simulator as sim
from mdisc.apparatus import ProjectiveMeasurement, QubitPair
from mdisc.protocol import SchemeError
from conftest import pauli_pair, qutrit_pair


def sz():
    return pauli_pair()[0]


def test_born_sample_eigenstate():
    label, post = sim.born_sample(np.array([1, 0]), sz(), sim.trial_rng(0, "M", 0))
    assert label == "+1"
    assert np.abs(post - [1, 0]).max() < 1e-15


def test_born_sample_plus_state_frequency_and_replay():
    plus = np.array([1, 1]) / math.sqrt(2)
    streams = sim.TrialStreams()
    draws = [sim.born_sample(plus, sz(), streams.rng(5, "M", i))[0] for i in range(100000)]
    assert abs(draws.count("+1") / len(draws) - 0.5) < 0.01
    again = [sim.born_sample(plus, sz(), sim.trial_rng(5, "M", i))[0] for i in range(50)]
    assert again == draws[:50]


def test_repeated_measurement_repeats():
    rng = np.random.default_rng(0)
    m, _ = qutrit_pair()
    for trial in range(200):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        z /= np.linalg.norm(z)
        gen = sim.trial_rng(1, "N", trial)
        first, post = sim.born_sample(z, m, gen)
        second, _ = sim.born_sample(post, m, gen)
        assert first == second


def test_born_sample_on_slot_of_product_state():
    state = np.kron([0, 1], np.array([1, 1]) / math.sqrt(2))
    label, post = sim.born_sample(state, sz(), sim.trial_rng(0, "M", 0), dims=(2, 2), slot=0)
    assert label == "-1"
    assert np.abs(post - state).max() < 1e-15
    with pytest.raises(ValueError):
        sim.born_sample(state, sz(), sim.trial_rng(0, "M", 0), dims=(4,), slot=0)


def test_zero_probability_outcomes_never_drawn():
    eps_state = np.array([1, 1e-9])
    eps_state = eps_state / np.linalg.norm(eps_state)
    for i in range(2000):
        assert sim.born_sample(eps_state, sz(), sim.trial_rng(3, "M", i))[0] == "+1"
    with pytest.raises(SchemeError):
        sim.born_sample(np.zeros(2), sz(), sim.trial_rng(0, "M", 0))


def schemes():
    return {
        "simple": qs.find_simple_scheme(QubitPair(math.pi / 2)),
        "mm": qs.build_mm_optimal(QubitPair(2.0)),
        "mum": gs.build_mum(*qutrit_pair()),
    }


@pytest.mark.parametrize("name", ["simple", "mm", "mum"])
def test_empirical_distribution_converges(name):
    scheme = schemes()[name]
    for truth in "MN":
        exact = sim.exact_distribution(scheme, truth)
        assert abs(sum(exact.values()) - 1) < 1e-10
        trials = 100000
        streams = sim.TrialStreams()
        counts = Counter(sim.run_scheme(scheme, truth, streams.rng(17, truth, i)).record
                         for i in range(trials))
        keys = set(exact) | set(counts)
        tv = 0.5 * sum(abs(counts.get(k, 0) / trials - exact.get(k, 0.0)) for k in keys)
        assert tv <= 0.01
        assert set(counts) <= set(exact)


def test_transcript_contents():
    scheme = schemes()["mum"]
    t = sim.run_scheme(scheme, "M", sim.trial_rng(2, "M", 0))
    assert t.correct and t.decision == "M"
    assert len(t.steps) == 3 and t.steps[1][1] is None
    assert t.steps[0][1] == t.steps[2][1]


def test_intro_scheme_outcomes_differ_under_x():
    scheme = schemes()["simple"]
    for i in range(200):
        t = sim.run_scheme(scheme, "N", sim.trial_rng(9, "N", i))
        assert t.record[0] != t.record[1] and t.decision == "N"


def test_evaluate_deterministic_and_worker_independent():
    scheme = schemes()["mm"]
    a = sim.evaluate(scheme, 300, seed=42)
    b = sim.evaluate(scheme, 300, seed=42)
    c = sim.evaluate(scheme, 300, seed=42, workers=2)
    assert a == b == c
    assert a.accuracy_given_M == a.accuracy_given_N == 1.0
    assert a.uses_per_trial == 2


def test_single_trial_stats_match_transcript():
    scheme = schemes()["simple"]
    stats = sim.evaluate(scheme, 1, seed=3)
    for truth, acc in (("M", stats.accuracy_given_M), ("N", stats.accuracy_given_N)):
        t = sim.run_scheme(scheme, truth, sim.trial_rng(3, truth, 0))
        assert acc == float(t.correct)


def test_evaluate_rejects_zero_trials():
    with pytest.raises(ValueError):
        sim.evaluate(schemes()["simple"], 0, seed=0)


def test_errors_carry_trial_index():
    m = ProjectiveMeasurement(("+1", "-1"), pauli_pair()[0].projectors)
    scheme = qs.SimpleScheme(1, np.array([1, 0j]), frozenset(), frozenset(), m, m)
    with pytest.raises(SchemeError, match="trial 0"):
        sim.evaluate(scheme, 3, seed=0)


def test_reusable_streams_match_fresh_generators():
    streams = sim.TrialStreams()
    for seed, truth, trial in [(0, "M", 0), (7, "N", 3), (2**64 - 1, "M", 2**32 - 1)]:
        fresh = sim.trial_rng(seed, truth, trial)
        reused = streams.rng(seed, truth, trial)
        assert np.array_equal(fresh.random(9), reused.random(9))


def test_trial_rng_streams_are_distinct():
    a = sim.trial_rng(1, "M", 0).random(4)
    b = sim.trial_rng(1, "N", 0).random(4)
    c = sim.trial_rng(1, "M", 1).random(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)
    with pytest.raises(ValueError):
        sim.trial_rng(1, "M", -1)


@pytest.mark.parametrize("name", sorted(schemes()))
@pytest.mark.parametrize("limit", [0, 1 << 22])
def test_branch_cache_matches_run_scheme(name, limit):
    scheme = schemes()[name]
    for truth in sim.HYPOTHESES:
        cache = sim.BranchCache(scheme, truth, limit=limit)
        for trial in range(200):
            cached = cache.sample(sim.trial_rng(9, truth, trial))
            plain = sim.run_scheme(scheme, truth, sim.trial_rng(9, truth, trial)).record
            assert cached == plain
