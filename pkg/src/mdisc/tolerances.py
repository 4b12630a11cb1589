"""Numerical tolerance profiles.

All modules read the active profile through :func:`current` at call time,
so switching profiles (``MDISC_TOL=strict``) affects every later call.
"""

from __future__ import annotations

import dataclasses
import os


@dataclasses.dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-9  # norms, traces, unitarity
    proj: float = 1e-8  # projector / Hermiticity validation
    sing: float = 1e-8  # relative singularity, scaled by the matrix norm
    eig: float = 1e-8  # "eigenvalue equals 1" tests
    num: float = 1e-10  # round-trip identities, zero-probability guard
    angle: float = 1e-9  # identical-observable detection
    degenerate_overlap: float = 1e-7  # ||PQ|| >= 1 - this counts as intersecting

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


PROFILES = {
    "default": Tolerances(),
    "strict": Tolerances(norm=1e-11, proj=1e-10, sing=1e-10, eig=1e-10, num=1e-12,
                         angle=1e-11, degenerate_overlap=1e-8),
}

_active = PROFILES["default"]
_active_name = "default"


def current() -> Tolerances:
    return _active


def current_name() -> str:
    return _active_name


def use_profile(name: str) -> Tolerances:
    global _active, _active_name
    try:
        _active = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown tolerance profile {name!r}; "
                         f"choose from {sorted(PROFILES)}") from None
    _active_name = name
    return _active


def profile_from_env() -> Tolerances:
    return use_profile(os.environ.get("MDISC_TOL", "default"))
