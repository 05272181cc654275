import time
from contextlib import contextmanager
from types import SimpleNamespace

import pytest

from trimer_optics.beam import SourceModel, beam_kinematics
from trimer_optics.pipeline import solve_trimer
from trimer_optics.potentials import sample_potential
from trimer_optics.runconfig import Numerics
from trimer_optics.units import M_HE4

_CRITERIA = {}


@pytest.fixture(scope="session")
def he_solution():
    """Dimer and trimer of the shipped helium potential (about 12 s), with its solve time."""
    t0 = time.perf_counter()
    spectrum, inter, dimers = solve_trimer(sample_potential(), M_HE4, Numerics())
    return SimpleNamespace(spectrum=spectrum, interaction=inter, dimers=dimers,
                           seconds=time.perf_counter() - t0)


@pytest.fixture(scope="session")
def he_spectrum(he_solution):
    return he_solution.spectrum, he_solution.interaction, he_solution.dimers


@pytest.fixture(scope="session")
def beam6k():
    return beam_kinematics(SourceModel(6.0))


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion and its runtime budget.

    Inside the block, ``rec.info`` collects a short summary and
    ``rec.extra_seconds`` adds time spent in shared fixtures.
    """

    @contextmanager
    def run(number, title, budget):
        rec = SimpleNamespace(info="", extra_seconds=0.0)
        t0 = time.perf_counter()
        try:
            yield rec
        except BaseException:
            elapsed = time.perf_counter() - t0 + rec.extra_seconds
            _record(number, False, title, elapsed, budget, rec.info or "check failed")
            raise
        elapsed = time.perf_counter() - t0 + rec.extra_seconds
        ok = elapsed < budget
        _record(number, ok, title, elapsed, budget, rec.info if ok else "over runtime budget")
        assert ok, f"criterion {number} took {elapsed:.2f} s (budget {budget} s)"

    return run


def _record(number, ok, title, elapsed, budget, info):
    line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  "
            f"[{elapsed:.2f} s / {budget:g} s]  {info}")
    _CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
