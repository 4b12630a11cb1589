import numpy as np
import pytest
from scipy.stats import unitary_group

from mdisc import tolerances
from mdisc.apparatus import ProjectiveMeasurement


@pytest.fixture(autouse=True)
def default_profile():
    tolerances.use_profile("default")
    yield
    tolerances.use_profile("default")


def rand_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng)


def rand_state(d, rng):
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def rand_measurement(d, ranks, rng, labels=None):
    """Random projective measurement with the given projector ranks."""
    u = rand_unitary(d, rng)
    labels = tuple(range(len(ranks))) if labels is None else tuple(labels)
    projs, start = [], 0
    for r in ranks:
        v = u[:, start:start + r]
        projs.append(v @ v.conj().T)
        start += r
    assert start == d
    return ProjectiveMeasurement(labels, tuple(projs))


def pauli_pair():
    z = ProjectiveMeasurement.from_basis(np.eye(2), ("+1", "-1"))
    x = ProjectiveMeasurement.from_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2), ("+1", "-1"))
    return z, x


def qutrit_pair():
    psi = np.stack([np.array([1, -2, 1]) / np.sqrt(6), np.array([1, 1, 1]) / np.sqrt(3),
                    np.array([1, 0, -1]) / np.sqrt(2)], axis=1)
    labels = ("1", "2", "3")
    return (ProjectiveMeasurement.from_basis(np.eye(3), labels),
            ProjectiveMeasurement.from_basis(psi, labels))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion and print it."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def record(number, ok, detail, elapsed):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({elapsed:.2f} s)"
        ACCEPTANCE_LINES.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
