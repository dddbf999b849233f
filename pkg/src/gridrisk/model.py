"""Static network data model: buses, lines, generators, loads, contingencies.

A :class:`Network` is immutable after construction and safe to share across
worker processes. Outages never touch the base network; they are expressed
as cheap :class:`NetworkState` views, so any number of contingency
evaluations can run against the same base data concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field


class ModelError(ValueError):
    """Semantic defect in network data (dangling reference, bad range)."""


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""


@dataclass(frozen=True)
class CostCurve:
    """Operating cost a*P^2 + b*P + c in $/h for P in MW."""

    a: float
    b: float
    c: float

    def cost(self, p_mw: float) -> float:
        return self.a * p_mw * p_mw + self.b * p_mw + self.c

    def marginal(self, p_mw: float) -> float:
        return 2.0 * self.a * p_mw + self.b


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    reactance: float  # p.u. on system base
    rating: float     # MW
    in_service: bool = True


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    kind: str  # "thermal" | "wind"
    p_min: float
    p_max: float
    cost: CostCurve
    in_service: bool = True


@dataclass(frozen=True)
class Load:
    id: int
    bus: int
    p_nominal: float  # MW


GENERATOR_KINDS = ("thermal", "wind")


@dataclass
class Network:
    """Validated static grid model. Treat as immutable once constructed."""

    base_mva: float
    buses: list[Bus]
    lines: list[Line]
    generators: list[Generator]
    loads: list[Load]

    bus_ids: frozenset[int] = field(init=False, repr=False)
    _line_by_id: dict[int, Line] = field(init=False, repr=False)
    _gen_by_id: dict[int, Generator] = field(init=False, repr=False)
    _lines_at_bus: dict[int, tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        self._validate()
        self.bus_ids = frozenset(b.id for b in self.buses)
        self._line_by_id = {l.id: l for l in self.lines}
        self._gen_by_id = {g.id: g for g in self.generators}
        incident: dict[int, list[int]] = {b.id: [] for b in self.buses}
        for line in self.lines:
            incident[line.from_bus].append(line.id)
            incident[line.to_bus].append(line.id)
        self._lines_at_bus = {b: tuple(sorted(ids)) for b, ids in incident.items()}

    def _validate(self):
        if self.base_mva <= 0:
            raise ModelError(f"base_mva must be positive, got {self.base_mva}")
        seen: set[int] = set()
        for bus in self.buses:
            if bus.id < 1:
                raise ModelError(f"bus id must be >= 1, got {bus.id}")
            if bus.id in seen:
                raise ModelError(f"duplicate bus id {bus.id}")
            seen.add(bus.id)
        ids = seen
        for kind, items in (("line", self.lines), ("generator", self.generators),
                            ("load", self.loads)):
            dup: set[int] = set()
            for item in items:
                if item.id in dup:
                    raise ModelError(f"duplicate {kind} id {item.id}")
                dup.add(item.id)
        for line in self.lines:
            if line.from_bus == line.to_bus:
                raise ModelError(f"line {line.id} connects bus {line.from_bus} to itself")
            for end in (line.from_bus, line.to_bus):
                if end not in ids:
                    raise ModelError(f"line {line.id} references unknown bus {end}")
            if line.reactance <= 0:
                raise ModelError(f"line {line.id} reactance must be positive")
            if line.rating <= 0:
                raise ModelError(f"line {line.id} rating must be positive")
        if not self.generators:
            raise ModelError("network has no generators")
        for gen in self.generators:
            if gen.bus not in ids:
                raise ModelError(f"generator {gen.id} references unknown bus {gen.bus}")
            if gen.kind not in GENERATOR_KINDS:
                raise ModelError(f"generator {gen.id} has unknown kind {gen.kind!r}")
            if not 0.0 <= gen.p_min <= gen.p_max:
                raise ModelError(f"generator {gen.id} violates 0 <= p_min <= p_max")
            if gen.cost.a < 0:
                raise ModelError(f"generator {gen.id} cost curve is concave (a < 0)")
        for load in self.loads:
            if load.bus not in ids:
                raise ModelError(f"load {load.id} references unknown bus {load.bus}")
            if load.p_nominal < 0:
                raise ModelError(f"load {load.id} has negative demand")

    def line(self, line_id: int) -> Line:
        try:
            return self._line_by_id[line_id]
        except KeyError:
            raise ModelError(f"unknown line id {line_id}") from None

    def generator(self, gen_id: int) -> Generator:
        try:
            return self._gen_by_id[gen_id]
        except KeyError:
            raise ModelError(f"unknown generator id {gen_id}") from None

    def lines_at(self, bus_id: int) -> tuple[int, ...]:
        return self._lines_at_bus[bus_id]

    def line_label(self, line_id: int) -> str:
        """Human label "L<from>-<to>"; parallel lines get a "#id" suffix."""
        line = self.line(line_id)
        ends = (line.from_bus, line.to_bus)
        parallel = any(l.id != line_id and (l.from_bus, l.to_bus) in (ends, ends[::-1])
                       for l in self.lines)
        label = f"L{line.from_bus}-{line.to_bus}"
        return f"{label}#{line_id}" if parallel else label


@dataclass(frozen=True)
class Contingency:
    """An outage event: a set of 1-3 lines, or a single bus."""

    lines: tuple[int, ...]   # empty for a bus outage
    bus: int | None
    probability: float
    label: str

    def __post_init__(self):
        if self.bus is None:
            if not 1 <= len(self.lines) <= 3:
                raise ModelError(f"contingency {self.label!r} must outage 1-3 lines")
        elif self.lines:
            raise ModelError(f"contingency {self.label!r} mixes bus and line outages")
        if not 0.0 < self.probability < 1.0:
            raise ModelError(f"contingency {self.label!r} probability out of (0,1)")

    @property
    def is_bus(self) -> bool:
        return self.bus is not None


def line_set_label(network: Network, line_ids: tuple[int, ...]) -> str:
    return "+".join(network.line_label(i) for i in line_ids)


@dataclass(frozen=True)
class NetworkState:
    """A post-contingency view of a base network. Never mutates the base."""

    base: Network
    removed_lines: frozenset[int] = frozenset()
    removed_bus: int | None = None

    def line_in_service(self, line: Line) -> bool:
        return (line.in_service and line.id not in self.removed_lines
                and line.from_bus != self.removed_bus
                and line.to_bus != self.removed_bus)

    def bus_in_service(self, bus_id: int) -> bool:
        return bus_id != self.removed_bus

    def gen_in_service(self, gen: Generator) -> bool:
        return gen.in_service and gen.bus != self.removed_bus

    def load_in_service(self, load: Load) -> bool:
        return load.bus != self.removed_bus

    def in_service_lines(self) -> list[Line]:
        return [l for l in self.base.lines if self.line_in_service(l)]

    def in_service_buses(self) -> list[int]:
        return [b.id for b in self.base.buses if self.bus_in_service(b.id)]

    def forced_out_loads(self) -> list[Load]:
        """Loads disconnected by a bus outage; they shed at full demand."""
        return [d for d in self.base.loads if not self.load_in_service(d)]


def intact_state(network: Network) -> NetworkState:
    return NetworkState(base=network)


def apply_contingency(network: Network, contingency: Contingency) -> NetworkState:
    """Materialize an outage as a NetworkState.

    A bus outage removes the bus, every incident line, and every generator
    and load at that bus; the stranded demand is later priced as forced
    shedding so bus impacts stay comparable with line impacts.
    """
    if contingency.is_bus:
        bus = contingency.bus
        if bus not in network.bus_ids:
            raise ModelError(f"unknown bus id {bus}")
        return NetworkState(base=network,
                            removed_lines=frozenset(network.lines_at(bus)),
                            removed_bus=bus)
    removed = frozenset(contingency.lines)
    for line_id in removed:
        network.line(line_id)  # raises on unknown id
    return NetworkState(base=network, removed_lines=removed)


@dataclass(frozen=True)
class Island:
    """One connected component of the in-service network."""

    buses: frozenset[int]
    lines: frozenset[int]
    generators: frozenset[int]
    loads: frozenset[int]
    has_generation: bool


def islands(state: NetworkState) -> list[Island]:
    """Partition in-service buses into electrical islands.

    Returned islands are ordered by their smallest bus id, so the result is
    deterministic for a given state.
    """
    alive_buses = state.in_service_buses()
    adjacency: dict[int, list[tuple[int, int]]] = {b: [] for b in alive_buses}
    for line in state.in_service_lines():
        adjacency[line.from_bus].append((line.to_bus, line.id))
        adjacency[line.to_bus].append((line.from_bus, line.id))

    gens_at: dict[int, list[int]] = {}
    for gen in state.base.generators:
        if state.gen_in_service(gen):
            gens_at.setdefault(gen.bus, []).append(gen.id)
    loads_at: dict[int, list[int]] = {}
    for load in state.base.loads:
        if state.load_in_service(load):
            loads_at.setdefault(load.bus, []).append(load.id)

    seen: set[int] = set()
    result: list[Island] = []
    for start in sorted(alive_buses):
        if start in seen:
            continue
        comp_buses: set[int] = {start}
        comp_lines: set[int] = set()
        stack = [start]
        seen.add(start)
        while stack:
            bus = stack.pop()
            for other, line_id in adjacency[bus]:
                comp_lines.add(line_id)
                if other not in seen:
                    seen.add(other)
                    comp_buses.add(other)
                    stack.append(other)
        comp_gens = frozenset(itertools.chain.from_iterable(
            gens_at.get(b, ()) for b in comp_buses))
        comp_loads = frozenset(itertools.chain.from_iterable(
            loads_at.get(b, ()) for b in comp_buses))
        result.append(Island(buses=frozenset(comp_buses),
                             lines=frozenset(comp_lines),
                             generators=comp_gens,
                             loads=comp_loads,
                             has_generation=bool(comp_gens)))
    return result
