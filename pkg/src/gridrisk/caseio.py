"""Case-file parsing and serialization.

The case format is a sectioned, whitespace-separated text format::

    [system]
    base_mva = 100.0

    [bus]
    id name
    1 north

    [line]
    id from to reactance_pu rating_mw
    1 1 2 0.0411 600

    [generator]
    id bus kind pmin_mw pmax_mw cost_a cost_b cost_c
    1 1 thermal 0 1040 0.0019 6.9 510

    [load]
    id bus p_mw
    1 2 322

Column headers are mandatory and their names are part of the contract;
unknown sections or fields are rejected. `#` starts a comment. Bus names
are single tokens; `-` denotes an empty name.
"""

from __future__ import annotations

from .model import Bus, CostCurve, Generator, Line, Load, ModelError, Network

SECTIONS = {
    "bus": ("id", "name"),
    "line": ("id", "from", "to", "reactance_pu", "rating_mw"),
    "generator": ("id", "bus", "kind", "pmin_mw", "pmax_mw",
                  "cost_a", "cost_b", "cost_c"),
    "load": ("id", "bus", "p_mw"),
}


class CaseSyntaxError(ValueError):
    """Malformed case text; message carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _tokenize(text: str):
    """Yield (lineno, tokens) for non-empty, non-comment lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise CaseSyntaxError(lineno, f"{what}: expected integer, got {token!r}") from None


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise CaseSyntaxError(lineno, f"{what}: expected number, got {token!r}") from None


def parse_case(text: str) -> Network:
    """Parse case text into a validated :class:`Network`.

    Raises :class:`CaseSyntaxError` for malformed text (with line number)
    and :class:`ModelError` for semantic defects (named element).
    """
    base_mva: float | None = None
    rows: dict[str, list[tuple[int, list[str]]]] = {name: [] for name in SECTIONS}
    seen_sections: set[str] = set()
    section: str | None = None
    header: tuple[str, ...] | None = None

    any_content = False
    for lineno, tokens in _tokenize(text):
        any_content = True
        word = tokens[0]
        if word.startswith("[") and word.endswith("]") and len(tokens) == 1:
            name = word[1:-1]
            if name != "system" and name not in SECTIONS:
                raise CaseSyntaxError(lineno, f"unknown section [{name}]")
            if name in seen_sections:
                raise CaseSyntaxError(lineno, f"duplicate section [{name}]")
            seen_sections.add(name)
            section = name
            header = None
            continue
        if section is None:
            raise CaseSyntaxError(lineno, "data before any section header")
        if section == "system":
            if len(tokens) != 3 or tokens[0] != "base_mva" or tokens[1] != "=":
                raise CaseSyntaxError(lineno, "expected 'base_mva = <number>'")
            base_mva = _parse_float(tokens[2], lineno, "base_mva")
            continue
        if header is None:
            expected = SECTIONS[section]
            if tuple(tokens) != expected:
                raise CaseSyntaxError(
                    lineno, f"[{section}] header must be exactly: {' '.join(expected)}")
            header = expected
            continue
        if len(tokens) != len(header):
            raise CaseSyntaxError(
                lineno, f"[{section}] row has {len(tokens)} fields, expected {len(header)}")
        rows[section].append((lineno, tokens))

    if not any_content:
        raise CaseSyntaxError(1, "empty case document")
    if base_mva is None:
        raise CaseSyntaxError(1, "missing [system] section with base_mva")
    if "bus" not in seen_sections:
        raise CaseSyntaxError(1, "missing [bus] section")

    buses = [Bus(id=_parse_int(t[0], ln, "bus id"),
                 name="" if t[1] == "-" else t[1])
             for ln, t in rows["bus"]]
    lines = [Line(id=_parse_int(t[0], ln, "line id"),
                  from_bus=_parse_int(t[1], ln, "line from"),
                  to_bus=_parse_int(t[2], ln, "line to"),
                  reactance=_parse_float(t[3], ln, "reactance_pu"),
                  rating=_parse_float(t[4], ln, "rating_mw"))
             for ln, t in rows["line"]]
    generators = [Generator(id=_parse_int(t[0], ln, "generator id"),
                            bus=_parse_int(t[1], ln, "generator bus"),
                            kind=t[2],
                            p_min=_parse_float(t[3], ln, "pmin_mw"),
                            p_max=_parse_float(t[4], ln, "pmax_mw"),
                            cost=CostCurve(a=_parse_float(t[5], ln, "cost_a"),
                                           b=_parse_float(t[6], ln, "cost_b"),
                                           c=_parse_float(t[7], ln, "cost_c")))
                  for ln, t in rows["generator"]]
    loads = [Load(id=_parse_int(t[0], ln, "load id"),
                  bus=_parse_int(t[1], ln, "load bus"),
                  p_nominal=_parse_float(t[2], ln, "p_mw"))
             for ln, t in rows["load"]]

    return Network(base_mva=base_mva, buses=buses, lines=lines,
                   generators=generators, loads=loads)


def serialize_case(network: Network) -> str:
    """Render a Network in the canonical case format (round-trips)."""
    out: list[str] = []
    out.append("[system]")
    out.append(f"base_mva = {network.base_mva!r}")
    out.append("")
    out.append("[bus]")
    out.append("id name")
    for bus in network.buses:
        out.append(f"{bus.id} {bus.name or '-'}")
    out.append("")
    out.append("[line]")
    out.append("id from to reactance_pu rating_mw")
    for ln in network.lines:
        out.append(f"{ln.id} {ln.from_bus} {ln.to_bus} {ln.reactance!r} {ln.rating!r}")
    out.append("")
    out.append("[generator]")
    out.append("id bus kind pmin_mw pmax_mw cost_a cost_b cost_c")
    for g in network.generators:
        out.append(f"{g.id} {g.bus} {g.kind} {g.p_min!r} {g.p_max!r} "
                   f"{g.cost.a!r} {g.cost.b!r} {g.cost.c!r}")
    out.append("")
    out.append("[load]")
    out.append("id bus p_mw")
    for d in network.loads:
        out.append(f"{d.id} {d.bus} {d.p_nominal!r}")
    out.append("")
    return "\n".join(out)


def load_case(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_case(fh.read())
