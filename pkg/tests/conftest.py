"""Shared fixtures for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hypergrowth.dataset import Observation, TimeSeries, bundled_benchmarks

FIXTURES = Path(__file__).parent / "fixtures"


def series_from_reciprocal(region, years, recips):
    return TimeSeries(region, tuple(Observation(float(t), 1.0 / r) for t, r in zip(years, recips)))


@pytest.fixture
def five_point_hyperbola() -> TimeSeries:
    t = np.array([0.0, 500.0, 1000.0, 1500.0, 2000.0])
    return series_from_reciprocal("H", t, 5.0 - 0.002 * t)


@pytest.fixture
def long_hyperbola() -> TimeSeries:
    """Noiseless 1/y = 5 - 0.002 t, dense enough for break tests around 1750."""
    t = np.arange(1400.0, 2201.0, 50.0)
    return series_from_reciprocal("H", t, 5.0 - 0.002 * t)


@pytest.fixture
def two_slope() -> TimeSeries:
    t1 = np.array([0.0, 250.0, 500.0, 750.0, 1000.0])
    t2 = np.array([1250.0, 1500.0, 1750.0, 2000.0])
    return series_from_reciprocal(
        "TwoSlope", np.r_[t1, t2], np.r_[3.0 - 0.001 * t1, 3.5 - 0.0015 * t2]
    )


@pytest.fixture
def stagnation_then_takeoff() -> TimeSeries:
    pre = np.arange(1500.0, 1751.0, 50.0)
    post = np.arange(1760.0, 1901.0, 20.0)
    years = np.r_[pre, post]
    gdp = np.r_[np.full(pre.size, 0.5), 0.5 * np.exp(0.01 * (post - 1750.0))]
    return TimeSeries.from_pairs("Control", years, gdp)


@pytest.fixture(scope="session")
def benchmarks():
    return bundled_benchmarks()


# -- acceptance reporting -----------------------------------------------------

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on ``ok`` itself."""

    def record(cid: str, ok: bool, detail: str) -> bool:
        line = f"criterion {cid}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        _CRITERIA.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda l: l.split(":")[0]):
            terminalreporter.write_line(line)
