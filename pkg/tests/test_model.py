"""Network model: validation, contingency application, island detection."""

import pytest
from conftest import two_bus

from gridrisk.model import (Bus, Contingency, CostCurve, Generator, Line,
                            ModelError, Network, apply_contingency,
                            intact_state, islands, line_set_label)
from oracles import components_oracle


def make_contingency(network, lines=(), bus=None, pr=1e-2):
    label = f"B{bus}" if bus is not None else line_set_label(network, lines)
    return Contingency(lines=tuple(lines), bus=bus, probability=pr,
                       label=label)


class TestValidation:
    def test_unknown_bus_reference(self):
        with pytest.raises(ModelError, match="99"):
            Network(base_mva=100.0, buses=[Bus(1), Bus(2)],
                    lines=[Line(1, 1, 99, 0.1, 100.0)],
                    generators=[Generator(1, 1, "thermal", 0, 10,
                                          CostCurve(0, 1, 0))],
                    loads=[])

    def test_nonpositive_reactance(self):
        with pytest.raises(ModelError, match="reactance"):
            Network(base_mva=100.0, buses=[Bus(1), Bus(2)],
                    lines=[Line(1, 1, 2, 0.0, 100.0)],
                    generators=[Generator(1, 1, "thermal", 0, 10,
                                          CostCurve(0, 1, 0))],
                    loads=[])

    def test_needs_a_generator(self):
        with pytest.raises(ModelError, match="no generators"):
            Network(base_mva=100.0, buses=[Bus(1)], lines=[], generators=[],
                    loads=[])

    def test_duplicate_bus(self):
        with pytest.raises(ModelError, match="duplicate bus"):
            Network(base_mva=100.0, buses=[Bus(1), Bus(1)], lines=[],
                    generators=[Generator(1, 1, "thermal", 0, 1,
                                          CostCurve(0, 1, 0))],
                    loads=[])

    def test_pmin_range(self):
        with pytest.raises(ModelError, match="p_min"):
            Network(base_mva=100.0, buses=[Bus(1)], lines=[],
                    generators=[Generator(1, 1, "thermal", 5, 1,
                                          CostCurve(0, 1, 0))],
                    loads=[])

    def test_contingency_shape(self):
        with pytest.raises(ModelError, match="1-3 lines"):
            Contingency(lines=(1, 2, 3, 4), bus=None, probability=0.5,
                        label="x")
        with pytest.raises(ModelError, match="probability"):
            Contingency(lines=(1,), bus=None, probability=0.0, label="x")


class TestApplyContingency:
    def test_bus_outage_removes_incident_elements(self, case39):
        state = apply_contingency(case39, make_contingency(case39, bus=39))
        assert state.removed_bus == 39
        assert state.removed_lines == frozenset({2, 15})  # L1-39, L9-39
        gen10 = case39.generator(10)
        assert not state.gen_in_service(gen10)
        load39 = [d for d in case39.loads if d.bus == 39]
        assert load39 and state.forced_out_loads() == load39

    def test_single_line_outage(self, case39):
        state = apply_contingency(case39, make_contingency(case39, lines=(1,)))
        assert state.removed_lines == frozenset({1})
        assert len(state.in_service_lines()) == len(case39.lines) - 1

    def test_double_outage_strands_bus_1(self, case39):
        # bus 1 connects only through L1-2 and L1-39
        state = apply_contingency(case39,
                                  make_contingency(case39, lines=(1, 2)))
        assert not any(l for l in state.in_service_lines()
                       if 1 in (l.from_bus, l.to_bus))

    def test_unknown_ids_rejected(self, case39):
        with pytest.raises(ModelError, match="unknown line"):
            apply_contingency(case39, Contingency(lines=(999,), bus=None,
                                                  probability=0.5, label="x"))
        with pytest.raises(ModelError, match="unknown bus"):
            apply_contingency(case39, Contingency(lines=(), bus=999,
                                                  probability=0.5, label="x"))

    def test_base_network_untouched(self, case39):
        before = [l.in_service for l in case39.lines]
        s1 = apply_contingency(case39, make_contingency(case39, lines=(1,)))
        s2 = apply_contingency(case39, make_contingency(case39, bus=16))
        assert [l.in_service for l in case39.lines] == before
        assert s1.removed_lines != s2.removed_lines  # independent views


class TestIslands:
    def test_intact_core_is_one_island(self, case39):
        isl = islands(intact_state(case39))
        # 34 lines cannot connect 39 buses; the fixture keeps 11 satellite
        # buses. The line-connected core must be a single 28-bus island.
        cores = [i for i in isl if i.lines]
        assert len(cores) == 1 and len(cores[0].buses) == 28
        satellites = [i for i in isl if not i.lines]
        assert len(satellites) == 11
        assert all(len(i.buses) == 1 and not i.generators and not i.loads
                   for i in satellites)

    def test_partition_property(self, case39):
        state = apply_contingency(case39, make_contingency(case39, bus=16))
        isl = islands(state)
        seen = [b for i in isl for b in i.buses]
        assert sorted(seen) == sorted(state.in_service_buses())

    def test_matches_bruteforce_for_every_single_line_outage(self, case39):
        for line in case39.lines:
            state = apply_contingency(case39,
                                      make_contingency(case39,
                                                       lines=(line.id,)))
            expected = components_oracle(
                state.in_service_buses(),
                [(l.from_bus, l.to_bus) for l in state.in_service_lines()])
            got = [i.buses for i in islands(state)]
            assert sorted(got, key=min) == sorted(expected, key=min)

    def test_double_outage_isolates_bus_1(self, case39):
        state = apply_contingency(case39,
                                  make_contingency(case39, lines=(1, 2)))
        isl = islands(state)
        one = [i for i in isl if i.buses == {1}]
        assert len(one) == 1 and not one[0].has_generation

    def test_bus39_outage_components(self, case39):
        state = apply_contingency(case39, make_contingency(case39, bus=39))
        isl = islands(state)
        assert 39 not in {b for i in isl for b in i.buses}
        expected = components_oracle(
            state.in_service_buses(),
            [(l.from_bus, l.to_bus) for l in state.in_service_lines()])
        assert sorted([i.buses for i in isl], key=min) == sorted(expected,
                                                                 key=min)

    def test_ordering_deterministic(self, case39):
        state = intact_state(case39)
        first = [min(i.buses) for i in islands(state)]
        assert first == sorted(first)
        assert [i.buses for i in islands(state)] == \
               [i.buses for i in islands(state)]

    def test_generation_flag(self):
        net = two_bus()
        isl = islands(intact_state(net))
        assert len(isl) == 1 and isl[0].has_generation
        state = apply_contingency(net, make_contingency(net, lines=(1,)))
        flags = {min(i.buses): i.has_generation for i in islands(state)}
        assert flags == {1: True, 2: False}


class TestLabels:
    def test_line_label_convention(self, case39):
        assert case39.line_label(1) == "L1-2"
        assert case39.line_label(22) == "L16-19"

    def test_multi_line_label(self, case39):
        assert line_set_label(case39, (1, 2)) == "L1-2+L1-39"

    def test_parallel_lines_disambiguated(self):
        net = Network(
            base_mva=100.0, buses=[Bus(1), Bus(2)],
            lines=[Line(1, 1, 2, 0.1, 50.0), Line(2, 1, 2, 0.2, 50.0)],
            generators=[Generator(1, 1, "thermal", 0, 10, CostCurve(0, 1, 0))],
            loads=[])
        assert net.line_label(1) == "L1-2#1"
        assert net.line_label(2) == "L1-2#2"
