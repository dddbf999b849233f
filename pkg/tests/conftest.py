"""Shared fixtures: canned networks and fixture file paths."""

from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for oracles.py

from gridrisk.caseio import load_case
from gridrisk.model import Bus, CostCurve, Generator, Line, Load, Network

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "src", "gridrisk",
                        "fixtures")


def fixture_path(name: str) -> str:
    return os.path.normpath(os.path.join(FIXTURES, name))


@pytest.fixture(scope="session")
def case39() -> Network:
    return load_case(fixture_path("case39.grid"))


@pytest.fixture(scope="session")
def case3() -> Network:
    return load_case(fixture_path("case3.grid"))


def two_bus(rating=200.0, demand=100.0, b_cost=10.0, p_max=200.0,
            c_cost=0.0) -> Network:
    """Single generator at bus 1 feeding one load at bus 2."""
    return Network(
        base_mva=100.0,
        buses=[Bus(1, "gen"), Bus(2, "load")],
        lines=[Line(1, 1, 2, 0.1, rating)],
        generators=[Generator(1, 1, "thermal", 0.0, p_max,
                              CostCurve(0.0, b_cost, c_cost))],
        loads=[Load(1, 2, demand)])


def triangle(rating_13=50.0, a1=0.0, a2=0.0, b1=10.0, b2=50.0) -> Network:
    """Two generators and one load on a symmetric triangle; the cheap
    unit's direct path is rating-limited."""
    return Network(
        base_mva=100.0,
        buses=[Bus(1, "cheap"), Bus(2, "dear"), Bus(3, "sink")],
        lines=[Line(1, 1, 2, 0.1, 200.0),
               Line(2, 1, 3, 0.1, rating_13),
               Line(3, 2, 3, 0.1, 200.0)],
        generators=[Generator(1, 1, "thermal", 0.0, 150.0,
                              CostCurve(a1, b1, 0.0)),
                    Generator(2, 2, "thermal", 0.0, 150.0,
                              CostCurve(a2, b2, 0.0))],
        loads=[Load(1, 3, 100.0)])


def ring4(with_load2=True) -> Network:
    """Four-bus ring: cheap unit at 1, expensive at 3, load at 2."""
    loads = [Load(1, 2, 120.0)] if with_load2 else []
    return Network(
        base_mva=100.0,
        buses=[Bus(i, f"r{i}") for i in range(1, 5)],
        lines=[Line(1, 1, 2, 0.1, 90.0),
               Line(2, 2, 3, 0.1, 90.0),
               Line(3, 3, 4, 0.1, 90.0),
               Line(4, 4, 1, 0.1, 90.0)],
        generators=[Generator(1, 1, "thermal", 0.0, 200.0,
                              CostCurve(0.0, 8.0, 0.0)),
                    Generator(2, 3, "thermal", 0.0, 200.0,
                              CostCurve(0.0, 40.0, 0.0))],
        loads=loads)


def exact_sample(network, index=1):
    """Sample pinned at nominal values (sigma = 0 draws)."""
    from gridrisk.sampler import default_spec, draw_sample
    return draw_sample(default_spec(network, sigma_fraction=0.0), 0, index)
