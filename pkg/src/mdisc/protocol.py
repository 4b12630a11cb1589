"""Step plans shared by every identification scheme.

A scheme is a probe state on a tuple of slots plus an ordered list of steps.
The simulator interprets the steps either by sampling or by enumerating
every branch exactly. Outcome records are tuples of outcome indices, with
``None`` for a step that was skipped.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Mapping, Optional

import numpy as np

from .apparatus import ProjectiveMeasurement

HYPOTHESES = ("M", "N")


class SchemeError(RuntimeError):
    """A trial reached a branch the scheme declares impossible."""


@dataclasses.dataclass(frozen=True)
class SecretMeasure:
    """Measure ``slot`` with the unknown apparatus."""
    slot: int


@dataclasses.dataclass(frozen=True)
class ConditionalUnitary:
    """Apply ``unitaries[record[on_step]]`` to ``slot``."""
    slot: int
    on_step: int
    unitaries: Mapping[int, np.ndarray]


@dataclasses.dataclass(frozen=True)
class KnownMeasure:
    """Measure ``slot`` with a known measurement chosen from the record so far.

    ``choose`` returns ``None`` when no measurement is needed.
    """
    slot: int
    choose: Callable[[tuple], Optional[ProjectiveMeasurement]]


class Scheme:
    """Interface implemented by every scheme dataclass.

    Subclasses provide ``probe``, ``dims``, ``m_apparatus``, ``n_apparatus``
    and implement :meth:`steps` and :meth:`decide`.
    """

    kind: str = "abstract"
    probe: np.ndarray
    dims: tuple
    m_apparatus: ProjectiveMeasurement
    n_apparatus: ProjectiveMeasurement

    def apparatus(self, truth: str) -> ProjectiveMeasurement:
        if truth == "M":
            return self.m_apparatus
        if truth == "N":
            return self.n_apparatus
        raise ValueError(f"unknown hypothesis {truth!r}")

    def steps(self) -> list:
        raise NotImplementedError

    def decide(self, record: tuple) -> str:
        raise NotImplementedError

    @property
    def uses(self) -> int:
        """Queries of the unknown apparatus per run."""
        return sum(isinstance(s, SecretMeasure) for s in self.steps())
