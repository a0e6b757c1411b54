import pytest

from socsched.config import DEFAULT_CATALOG, DEFAULT_PLATFORM
from socsched.kernel import Assignment, Scheduler
from socsched.platform import PeProfile, Platform
from socsched.workload import JobDag, JobTypeCatalog, TaskTemplate


@pytest.fixture(scope="session")
def catalog():
    return JobTypeCatalog.load(DEFAULT_CATALOG)


@pytest.fixture(scope="session")
def platform():
    return Platform.load(DEFAULT_PLATFORM)


def one_job_catalog(exec_times, edges, pe_types=None):
    """Catalog with a single job type; ``exec_times[t]`` maps PE type -> clocks."""
    tasks = [TaskTemplate(i, dict(e)) for i, e in enumerate(exec_times)]
    return JobTypeCatalog([JobDag(0, tasks, list(edges))], [1.0])


def uniform_platform(num_pes, bandwidth=1.0, types=None, active=1.0, idle=0.0):
    types = types or list(range(num_pes))
    pes = [PeProfile(i, types[i], active, idle) for i in range(num_pes)]
    bw = [[0 if i == j else bandwidth for j in range(num_pes)] for i in range(num_pes)]
    return Platform(pes, bw)


class FixedScheduler(Scheduler):
    """Maps task ids to PEs through a dict (default PE 0)."""

    name = "fixed"

    def __init__(self, mapping=None):
        self.mapping = mapping or {}
        self.calls = []

    def decide(self, ready, kernel):
        self.calls.append((kernel.clk, [t.task_id for t in ready]))
        return [Assignment(t, self.mapping.get(t.task_id, 0)) for t in ready]


# no arrivals inside any test horizon
NO_ARRIVALS = 1e12


# acceptance verdicts, one line per criterion, echoed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
