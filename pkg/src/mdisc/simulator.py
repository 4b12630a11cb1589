"""Born-rule execution of identification schemes.

Sampling and exact branch enumeration share one step interpreter, so the
Monte-Carlo path can be checked against the exact outcome distribution.
Each trial draws from its own Philox stream keyed by (seed, truth, trial),
which makes results independent of execution order and worker count.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import tolerances
from .apparatus import ProjectiveMeasurement
from .protocol import (HYPOTHESES, ConditionalUnitary, KnownMeasure, Scheme, SchemeError,
                       SecretMeasure)


@dataclasses.dataclass(frozen=True)
class Transcript:
    truth: str
    steps: tuple  # (description, outcome label or None)
    decision: str
    record: tuple

    @property
    def correct(self) -> bool:
        return self.decision == self.truth


@dataclasses.dataclass(frozen=True)
class RunStats:
    trials: int
    accuracy_given_M: float
    accuracy_given_N: float
    seed: int
    uses_per_trial: int

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _key(seed: int, truth: str, trial: int) -> np.ndarray:
    if not 0 <= trial < 1 << 32:
        raise ValueError("trial index out of range")
    # an explicit uint64 array keeps keys above 2**63 exact
    return np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, (HYPOTHESES.index(truth) << 32) | int(trial)],
                    dtype=np.uint64)


def trial_rng(seed: int, truth: str, trial: int) -> np.random.Generator:
    """Independent counter-based stream keyed by (seed, truth, trial)."""
    return np.random.Generator(np.random.Philox(key=_key(seed, truth, trial)))


class TrialStreams:
    """Reusable generator that is re-keyed per trial.

    ``streams.rng(seed, truth, trial)`` yields the same stream as
    :func:`trial_rng` but avoids building a new bit generator each time.
    The returned generator is only valid until the next call.
    """

    def __init__(self):
        self._bits = np.random.Philox(key=[0, 0])
        self._gen = np.random.Generator(self._bits)
        self._state = self._bits.state

    def rng(self, seed: int, truth: str, trial: int) -> np.random.Generator:
        state = self._state
        state["state"]["counter"] = np.zeros(4, dtype=np.uint64)
        state["state"]["key"] = _key(seed, truth, trial)
        state["buffer"] = np.zeros(4, dtype=np.uint64)
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        self._bits.state = state
        return self._gen


def _split(psi: np.ndarray, slot: int) -> np.ndarray:
    """View ``psi`` as (left, slot, right)."""
    shape = psi.shape
    left = math.prod(shape[:slot])
    return psi.reshape(left, shape[slot], -1)


def _apply_on_slot(op: np.ndarray, psi: np.ndarray, slot: int) -> np.ndarray:
    return np.matmul(op, _split(psi, slot)).reshape(psi.shape)


def _branches(psi: np.ndarray, m: ProjectiveMeasurement, slot: int):
    """Outcome probabilities and unnormalized post-states, all outcomes at once."""
    posts = np.matmul(m.stacked[:, None], _split(psi, slot)[None])
    probs = np.einsum("kabc,kabc->k", posts.conj(), posts).real
    return probs, posts.reshape((len(m),) + psi.shape)


def _clean(probs: np.ndarray, eps: float):
    """Probabilities below the guard set to zero, and their total."""
    probs = [p if p >= eps else 0.0 for p in probs.tolist()]
    total = sum(probs)
    if total <= eps:
        raise SchemeError("every outcome has vanishing probability")
    return probs, total


def _choose(probs: list, total: float, u: float) -> int:
    """First outcome whose cumulative weight exceeds ``u * total``."""
    u *= total
    k, acc = 0, 0.0
    for k, p in enumerate(probs):
        acc += p
        if u < acc:
            break
    while probs[k] == 0.0:  # only reachable through floating-point edge cases
        k -= 1
    return k


def _pick(branches, rng: np.random.Generator):
    probs, posts = branches
    probs, total = _clean(probs, tolerances.current().num)
    k = _choose(probs, total, rng.random())
    return k, posts[k] / np.sqrt(probs[k])


def born_sample(state: np.ndarray, m: ProjectiveMeasurement, rng: np.random.Generator,
                dims: tuple | None = None, slot: int = 0):
    """Measure ``slot`` of ``state`` with ``m``; return (outcome label, post state).

    Outcomes below the zero-probability guard are never drawn.
    """
    state = np.asarray(state, dtype=np.complex128)
    dims = (state.size,) if dims is None else tuple(dims)
    if dims[slot] != m.dim:
        raise ValueError(f"slot dimension {dims[slot]} != measurement dimension {m.dim}")
    psi = state.reshape(dims)
    idx, post = _pick(_branches(psi, m, slot), rng)
    return m.labels[idx], post.reshape(-1)


def _measurement_for(step, scheme: Scheme, truth: str, record: tuple):
    if isinstance(step, SecretMeasure):
        return scheme.apparatus(truth)
    return step.choose(record)


def _describe(step, scheme: Scheme) -> str:
    if isinstance(step, SecretMeasure):
        return f"measure slot {step.slot} with the unknown apparatus"
    if isinstance(step, ConditionalUnitary):
        return f"apply unitary to slot {step.slot} conditioned on step {step.on_step}"
    return f"known measurement on slot {step.slot}"


def _unitary_for(step: ConditionalUnitary, record: tuple) -> np.ndarray:
    key = record[step.on_step]
    try:
        return step.unitaries[key]
    except KeyError:
        raise SchemeError(f"no unitary for outcome index {key!r}") from None


def run_scheme(scheme: Scheme, truth: str, rng: np.random.Generator) -> Transcript:
    """Execute one trial of ``scheme`` against the apparatus named by ``truth``."""
    psi = np.asarray(scheme.probe, dtype=np.complex128).reshape(scheme.dims)
    record: tuple = ()
    log = []
    for step in scheme.steps():
        if isinstance(step, ConditionalUnitary):
            psi = _apply_on_slot(_unitary_for(step, record), psi, step.slot)
            record += (None,)
            log.append((_describe(step, scheme), None))
            continue
        m = _measurement_for(step, scheme, truth, record)
        if m is None:
            record += (None,)
            log.append((_describe(step, scheme) + " (skipped)", None))
            continue
        idx, psi = _pick(_branches(psi, m, step.slot), rng)
        record += (idx,)
        log.append((_describe(step, scheme), m.labels[idx]))
    decision = scheme.decide(record)
    return Transcript(truth, tuple(log), decision, record)


class BranchCache:
    """Post-states and outcome weights keyed by record prefix.

    The state after a given prefix is fixed by the scheme and the truth, so
    it is computed once and reused by later trials. Cached and uncached runs
    do the same arithmetic and consume the same draws. The cache is emptied
    when it holds more than ``limit`` complex entries.
    """

    def __init__(self, scheme: Scheme, truth: str, limit: int = 1 << 22):
        self.scheme, self.truth, self.limit = scheme, truth, limit
        self.steps = scheme.steps()
        self.eps = tolerances.current().num
        self._probe = np.asarray(scheme.probe, dtype=np.complex128).reshape(scheme.dims)
        self.clear()

    def clear(self):
        self.states = {(): self._probe}
        self.weights: dict = {}
        self._size = self._probe.size

    def _store(self, record: tuple, psi: np.ndarray):
        self._size += psi.size
        self.states[record] = psi

    def sample(self, rng: np.random.Generator) -> tuple:
        """Outcome record of one trial; same draws as :func:`run_scheme`."""
        if self._size > self.limit:
            self.clear()
        record: tuple = ()
        for step in self.steps:
            if isinstance(step, ConditionalUnitary):
                child = record + (None,)
                if child not in self.states:
                    self._store(child, _apply_on_slot(_unitary_for(step, record),
                                                      self.states[record], step.slot))
                record = child
                continue
            m = _measurement_for(step, self.scheme, self.truth, record)
            if m is None:
                child = record + (None,)
                self.states.setdefault(child, self.states[record])
                record = child
                continue
            node = self.weights.get(record)
            if node is None:
                probs, posts = _branches(self.states[record], m, step.slot)
                node = self.weights[record] = _clean(probs, self.eps) + (posts,)
            probs, total, posts = node
            k = _choose(probs, total, rng.random())
            child = record + (k,)
            if child not in self.states:
                self._store(child, posts[k] / np.sqrt(probs[k]))
            record = child
        return record


def exact_distribution(scheme: Scheme, truth: str) -> dict:
    """Probability of every outcome record, by exhaustive branch expansion."""
    eps = tolerances.current().num
    live = [((), 1.0, np.asarray(scheme.probe, dtype=np.complex128).reshape(scheme.dims))]
    for step in scheme.steps():
        nxt = []
        for record, weight, psi in live:
            if isinstance(step, ConditionalUnitary):
                nxt.append((record + (None,), weight,
                            _apply_on_slot(_unitary_for(step, record), psi, step.slot)))
                continue
            m = _measurement_for(step, scheme, truth, record)
            if m is None:
                nxt.append((record + (None,), weight, psi))
                continue
            probs, posts = _branches(psi, m, step.slot)
            for idx, (p, post) in enumerate(zip(probs, posts)):
                if p > eps:
                    nxt.append((record + (idx,), weight * p, post / np.sqrt(p)))
        live = nxt
    dist: dict = {}
    for record, weight, _ in live:
        dist[record] = dist.get(record, 0.0) + weight
    return dist


def exact_accuracy(scheme: Scheme, truth: str) -> float:
    """Probability that the decision equals ``truth``."""
    return sum(p for rec, p in exact_distribution(scheme, truth).items()
               if scheme.decide(rec) == truth)


def _count_correct(args) -> int:
    scheme, truth, seed, start, stop = args
    correct = 0
    streams = TrialStreams()
    cache = BranchCache(scheme, truth)
    for trial in range(start, stop):
        try:
            record = cache.sample(streams.rng(seed, truth, trial))
            correct += scheme.decide(record) == truth
        except SchemeError as exc:
            raise SchemeError(f"trial {trial} (truth {truth}): {exc}") from exc
    return correct


def evaluate(scheme: Scheme, trials: int, seed: int, workers: int = 1) -> RunStats:
    """Run ``trials`` trials under each hypothesis and report accuracies."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = []
    chunk = -(-trials // max(1, workers))
    for truth in HYPOTHESES:
        for start in range(0, trials, chunk):
            jobs.append((scheme, truth, seed, start, min(trials, start + chunk)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_count_correct, jobs))
    else:
        counts = [_count_correct(j) for j in jobs]
    per_truth = {t: 0 for t in HYPOTHESES}
    for job, c in zip(jobs, counts):
        per_truth[job[1]] += c
    return RunStats(trials, per_truth["M"] / trials, per_truth["N"] / trials, int(seed),
                    scheme.uses)
