"""Monte Carlo sampling of load and wind uncertainty, and wind scenarios.

Every stochastic element (each load, each wind generator) gets its own
counter-based Philox stream keyed by (seed, element kind, element id), with
the sample index as the block counter. Draw i of element e is therefore a
pure function of (seed, spec, e, i): identical no matter how many samples
are drawn, in what order, or on which worker. That is what makes the
common-random-numbers contract hold by construction -- the i-th sample seen
by the base case is bit-identical to the i-th sample seen by every
contingency of the same scenario.

Draws come from Normal(mu, sigma) clamped to [0, mu + 3*sigma]; negative
load or wind is unphysical and rejection sampling would break the keyed
determinism. The clamping bias is quantified in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import CostCurve, Generator, ModelError, Network

RNG_ID = "philox4x64-10/numpy-ziggurat-normal"

_LOAD_TAG = 1
_WIND_TAG = 2
DEFAULT_SIGMA_FRACTION = 0.10


@dataclass(frozen=True)
class StochasticSpec:
    """Per-element normal distributions: element id -> (mu, sigma) in MW."""

    loads: dict
    winds: dict

    def __post_init__(self):
        for name, table in (("load", self.loads), ("wind", self.winds)):
            for elem, (mu, sigma) in table.items():
                if sigma < 0:
                    raise ModelError(f"{name} {elem} has negative sigma")
                if mu < 0:
                    raise ModelError(f"{name} {elem} has negative mean")

    @staticmethod
    def ceiling(mu: float, sigma: float) -> float:
        return mu + 3.0 * sigma


def default_spec(network: Network,
                 sigma_fraction: float = DEFAULT_SIGMA_FRACTION) -> StochasticSpec:
    """Spec with sigma = sigma_fraction * mu for every load and wind unit.

    Wind generators already present in a case file carry no explicit mean,
    so their mu is taken as p_max / (1 + 3*sigma_fraction): the clamp
    ceiling then coincides with the unit's p_max.
    """
    loads = {d.id: (d.p_nominal, sigma_fraction * d.p_nominal)
             for d in network.loads}
    winds = {}
    for g in network.generators:
        if g.kind == "wind":
            mu = g.p_max / (1.0 + 3.0 * sigma_fraction)
            winds[g.id] = (mu, sigma_fraction * mu)
    return StochasticSpec(loads=loads, winds=winds)


@dataclass(frozen=True)
class Sample:
    """One Monte Carlo realization of all demands and wind availabilities."""

    index: int
    load_p: dict
    wind_avail: dict


def _draw(seed: int, tag: int, element_id: int, i: int, mu: float,
          sigma: float) -> float:
    if sigma == 0.0:
        return mu
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, (tag << 32) | element_id],
                   dtype=np.uint64)
    counter = np.array([i, 0, 0, 0], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(counter=counter, key=key))
    value = gen.normal(mu, sigma)
    return float(min(max(value, 0.0), mu + 3.0 * sigma))


def draw_sample(spec: StochasticSpec, seed: int, i: int) -> Sample:
    """Deterministic sample i >= 1; independent of call order and threads."""
    if i < 1:
        raise ValueError(f"sample index must be >= 1, got {i}")
    load_p = {elem: _draw(seed, _LOAD_TAG, elem, i, mu, sigma)
              for elem, (mu, sigma) in sorted(spec.loads.items())}
    wind_avail = {elem: _draw(seed, _WIND_TAG, elem, i, mu, sigma)
                  for elem, (mu, sigma) in sorted(spec.winds.items())}
    return Sample(index=i, load_p=load_p, wind_avail=wind_avail)


def draw_samples(spec: StochasticSpec, seed: int, n: int) -> list[Sample]:
    return [draw_sample(spec, seed, i) for i in range(1, n + 1)]


@dataclass(frozen=True)
class McStats:
    """Convergence statistics of a cost series C_i."""

    n_s: int
    c_o: float       # mean $/h
    c_sigma: float   # sample std-dev (n-1 denominator)
    c_cov: float     # c_sigma / c_o
    c_err: float     # c_sigma / sqrt(n_s)


def mc_stats(costs) -> McStats:
    costs = np.asarray(costs, dtype=np.float64)
    if costs.size == 0:
        raise ValueError("cost series is empty")
    n = int(costs.size)
    mean = float(np.mean(costs))
    sigma = float(np.std(costs, ddof=1)) if n > 1 else 0.0
    cov = sigma / mean if mean != 0.0 else 0.0
    return McStats(n_s=n, c_o=mean, c_sigma=sigma, c_cov=cov,
                   c_err=sigma / math.sqrt(n))


@dataclass(frozen=True)
class WindConversion:
    """Replace one thermal unit by wind purchased under the given curve."""

    generator_id: int
    curve: CostCurve


@dataclass(frozen=True)
class PenetrationScenario:
    label: str
    conversions: tuple = ()
    source: str = field(default="", compare=False)

    def converted_ids(self) -> set[int]:
        return {c.generator_id for c in self.conversions}


def penetration_fraction(base: Network, scenario: PenetrationScenario) -> float:
    """Share of original thermal active power replaced by wind."""
    thermal = {g.id: g.p_max for g in base.generators if g.kind == "thermal"}
    total = sum(thermal.values())
    if total == 0:
        return 0.0
    replaced = 0.0
    for conv in scenario.conversions:
        if conv.generator_id not in thermal:
            raise ModelError(f"scenario {scenario.label!r} converts unknown or "
                             f"non-thermal generator {conv.generator_id}")
        replaced += thermal[conv.generator_id]
    return replaced / total


def build_penetration_case(base: Network, scenario: PenetrationScenario,
                           sigma_fraction: float = DEFAULT_SIGMA_FRACTION):
    """Apply wind conversions to a copy of the base case.

    Each converted unit becomes a wind generator whose availability mean is
    the replaced thermal active power (its former p_max), with sigma =
    sigma_fraction * mu and p_max set to the clamp ceiling. Returns the new
    network together with the matching StochasticSpec. Wind curves keep the
    scenario's quadratic coefficients; the linear-vs-quadratic choice is a
    solve-time cost mode.
    """
    penetration_fraction(base, scenario)  # validates the conversion list
    by_id = {c.generator_id: c for c in scenario.conversions}
    if len(by_id) != len(scenario.conversions):
        raise ModelError(f"scenario {scenario.label!r} converts a generator twice")
    generators = []
    winds = {}
    for g in base.generators:
        conv = by_id.get(g.id)
        if conv is None:
            generators.append(g)
            continue
        mu = g.p_max
        sigma = sigma_fraction * mu
        generators.append(Generator(id=g.id, bus=g.bus, kind="wind", p_min=0.0,
                                    p_max=StochasticSpec.ceiling(mu, sigma),
                                    cost=conv.curve, in_service=g.in_service))
        winds[g.id] = (mu, sigma)
    network = Network(base_mva=base.base_mva, buses=list(base.buses),
                      lines=list(base.lines), generators=generators,
                      loads=list(base.loads))
    loads = {d.id: (d.p_nominal, sigma_fraction * d.p_nominal)
             for d in network.loads}
    for g in network.generators:
        if g.kind == "wind" and g.id not in winds:
            mu = g.p_max / (1.0 + 3.0 * sigma_fraction)
            winds[g.id] = (mu, sigma_fraction * mu)
    return network, StochasticSpec(loads=loads, winds=winds)


class ScenarioSyntaxError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def parse_scenario(text: str, source: str = "") -> PenetrationScenario:
    """Parse a scenario file::

        [scenario]
        label = 52%

        [convert]
        generator cost_a cost_b cost_c
        1 0.004 2.1 0.0
    """
    label = None
    conversions: list[WindConversion] = []
    section = None
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0].startswith("[") and tokens[0].endswith("]") and len(tokens) == 1:
            section = tokens[0][1:-1]
            if section not in ("scenario", "convert"):
                raise ScenarioSyntaxError(lineno, f"unknown section [{section}]")
            header_seen = False
            continue
        if section == "scenario":
            if len(tokens) != 3 or tokens[0] != "label" or tokens[1] != "=":
                raise ScenarioSyntaxError(lineno, "expected 'label = <text>'")
            label = tokens[2]
        elif section == "convert":
            if not header_seen:
                if tuple(tokens) != ("generator", "cost_a", "cost_b", "cost_c"):
                    raise ScenarioSyntaxError(
                        lineno, "[convert] header must be: generator cost_a cost_b cost_c")
                header_seen = True
                continue
            if len(tokens) != 4:
                raise ScenarioSyntaxError(lineno, "expected 4 fields per conversion")
            try:
                conversions.append(WindConversion(
                    generator_id=int(tokens[0]),
                    curve=CostCurve(a=float(tokens[1]), b=float(tokens[2]),
                                    c=float(tokens[3]))))
            except ValueError:
                raise ScenarioSyntaxError(lineno, "malformed conversion row") from None
        else:
            raise ScenarioSyntaxError(lineno, "data before any section header")
    if label is None:
        raise ScenarioSyntaxError(1, "missing [scenario] section with label")
    return PenetrationScenario(label=label, conversions=tuple(conversions),
                               source=source)


def load_scenario(path) -> PenetrationScenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), source=str(path))
