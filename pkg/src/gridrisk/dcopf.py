"""DC optimal power flow with integrated load shedding.

Each post-contingency :class:`~gridrisk.model.NetworkState` decomposes into
electrical islands. Islands holding generation each become one bounded LP
(generator segment variables, bus angles with the smallest-id bus as slack,
explicit line-flow variables, and per-load shed variables priced at the
penalty); islands without generation, and loads stranded by a bus outage,
shed their whole sampled demand at the same penalty. Because the shed
variables are always present, the LP stays feasible whenever total p_min
does not exceed demand, which folds the "minimize load shedding" fallback
into the ordinary cost minimization.

The constraint matrix of an island depends only on the network state and
the cost mode, so a :class:`OpfTemplate` is built once per state and only
the RHS and bounds are rewritten per Monte Carlo sample. That per-sample
rewrite plus one kernel call is the hot path of a contingency sweep.
"""

from __future__ import annotations

import numpy as np

from . import lp
from .model import CostCurve, Network, NetworkState, intact_state, islands

DEFAULT_PENALTY = 10_000.0  # $/MWh of shed load
COST_MODES = ("lf", "qf")


class OpfError(Exception):
    """Problem construction failed (data mismatch, unsupported data)."""


class OpfInfeasibleError(OpfError):
    """An island LP is structurally infeasible (p_min exceeds demand)."""

    def __init__(self, island_buses):
        self.island_buses = tuple(sorted(island_buses))
        super().__init__(f"island with buses {self.island_buses} is infeasible "
                         "(total p_min exceeds servable demand)")


class OpfSolverError(OpfError):
    """The LP kernel reported a numerical breakdown."""


def effective_curve(gen, cost_mode: str) -> CostCurve:
    """Wind curves lose their quadratic term under the linear cost mode."""
    if cost_mode == "lf" and gen.kind == "wind":
        return CostCurve(a=0.0, b=gen.cost.b, c=gen.cost.c)
    return gen.cost


class _IslandLp:
    """Static LP skeleton for one island; per-sample data is patched in."""

    def __init__(self, state: NetworkState, island, cost_mode: str, k_segments: int,
                 penalty: float):
        net = state.base
        base = net.base_mva
        buses = sorted(island.buses)
        gens = [net.generator(g) for g in sorted(island.generators)]
        loads = [d for d in net.loads if d.id in island.loads]
        lines = [net.line(l) for l in sorted(island.lines)]
        bus_row = {b: i for i, b in enumerate(buses)}
        n_rows = len(buses) + len(lines)

        cols: list[dict] = []   # per-column metadata
        c: list[float] = []
        lower: list[float] = []
        upper: list[float] = []
        vstatus0: list[int] = []

        self.gen_segments: list[tuple] = []  # (gen, first_col, k, breakpoints_pu)
        for gen in gens:
            curve = effective_curve(gen, cost_mode)
            if gen.kind == "wind" and gen.p_min > 0:
                raise OpfError(f"wind generator {gen.id} has p_min > 0")
            k = k_segments if curve.a > 0 else 1
            if gen.p_max > gen.p_min:
                segs = lp.piecewise_linearize(curve, gen.p_min, gen.p_max, k)
                first = len(cols)
                for width, slope in zip(segs.widths, segs.slopes):
                    cols.append({"kind": "seg", "bus": gen.bus})
                    c.append(slope * base)
                    lower.append(0.0)
                    upper.append(width / base)
                    vstatus0.append(lp.AT_LOWER)
                self.gen_segments.append((gen, first, k, segs.breakpoints / base))
            else:  # p_min == p_max: fixed injection, no decision columns
                self.gen_segments.append((gen, len(cols), 0, None))
        slack = buses[0]
        theta_first = len(cols)
        for b in buses:
            cols.append({"kind": "theta", "bus": b})
            c.append(0.0)
            if b == slack:
                lower.append(0.0)
                upper.append(0.0)
                vstatus0.append(lp.AT_LOWER)
            else:
                lower.append(-np.inf)
                upper.append(np.inf)
                vstatus0.append(lp.FREE)
        flow_first = len(cols)
        for line in lines:
            cols.append({"kind": "flow", "line": line.id})
            c.append(0.0)
            lower.append(-line.rating / base)
            upper.append(line.rating / base)
            vstatus0.append(lp.AT_LOWER)
        shed_first = len(cols)
        for load in loads:
            cols.append({"kind": "shed", "load": load.id})
            c.append(penalty * base)
            lower.append(0.0)
            upper.append(0.0)  # patched per sample
            vstatus0.append(lp.AT_UPPER)

        n = len(cols)
        a_eq = np.zeros((n_rows, n))
        for (gen, first, k, _) in self.gen_segments:
            for s in range(k):
                a_eq[bus_row[gen.bus], first + s] = 1.0
        for i, line in enumerate(lines):
            col = flow_first + i
            row = len(buses) + i
            a_eq[bus_row[line.from_bus], col] = -1.0
            a_eq[bus_row[line.to_bus], col] = 1.0
            a_eq[row, col] = 1.0
            a_eq[row, theta_first + bus_row[line.from_bus]] = -1.0 / line.reactance
            a_eq[row, theta_first + bus_row[line.to_bus]] = 1.0 / line.reactance
        for i, load in enumerate(loads):
            a_eq[bus_row[load.bus], shed_first + i] = 1.0

        # Crash basis: line flows carry their definition rows; at each bus
        # with demand one shed column carries the balance row, which makes
        # the all-shed "blackstart" vertex the starting point and lets
        # phase 1 be skipped whenever p_min sums to zero.
        basis0 = np.full(n_rows, -1, dtype=np.int64)
        for i, line in enumerate(lines):
            basis0[len(buses) + i] = flow_first + i
        first_shed_at: dict[int, int] = {}
        for i, load in enumerate(loads):
            first_shed_at.setdefault(load.bus, shed_first + i)
        for b, col in first_shed_at.items():
            basis0[bus_row[b]] = col

        pmin_at = np.zeros(len(buses))
        for gen in gens:
            pmin_at[bus_row[gen.bus]] += gen.p_min / base

        self.base_mva = base
        self.buses = buses
        self.loads = loads
        self.lines = lines
        self.gens = gens
        self.a_eq = a_eq
        self.c = np.asarray(c)
        self.lower0 = np.asarray(lower)
        self.upper0 = np.asarray(upper)
        self.vstatus0 = np.asarray(vstatus0, dtype=np.int64)
        self.basis0 = basis0
        self.b0 = np.concatenate([-pmin_at, np.zeros(len(lines))])
        self.load_rows = np.asarray([bus_row[d.bus] for d in loads], dtype=np.int64)
        self.shed_cols = np.arange(shed_first, shed_first + len(loads))
        self.flow_cols = np.arange(flow_first, flow_first + len(lines))
        self.const_cost = sum(effective_curve(g, cost_mode).cost(g.p_min) for g in gens)
        self.wind_updates = [(gen, first, k, bp) for gen, first, k, bp
                             in self.gen_segments if gen.kind == "wind" and k > 0]

    def patch(self, demand_pu: np.ndarray, wind_avail: dict):
        """Per-sample RHS and bounds."""
        b = self.b0.copy()
        np.add.at(b, self.load_rows, demand_pu)
        upper = self.upper0.copy()
        upper[self.shed_cols] = demand_pu
        for gen, first, k, bp in self.wind_updates:
            avail = min(wind_avail[gen.id], gen.p_max) / self.base_mva
            widths = np.diff(bp)
            upper[first:first + k] = np.clip(avail - bp[:-1], 0.0, widths)
        return b, upper

    def solve(self, sample):
        demand_pu = np.asarray([sample.load_p[d.id] for d in self.loads]) / self.base_mva
        b, upper = self.patch(demand_pu, sample.wind_avail)
        return lp.solve_kernel(self.c, self.a_eq, b, self.lower0, upper,
                               basis0=self.basis0, vstatus0=self.vstatus0,
                               eps_feas=lp.EPS_FEAS, eps_opt=lp.EPS_OPT)


class OpfTemplate:
    """All islands of one network state, ready for repeated sample solves."""

    def __init__(self, state: NetworkState, cost_mode: str = "lf",
                 k_segments: int = lp.DEFAULT_SEGMENTS,
                 penalty: float = DEFAULT_PENALTY):
        if cost_mode not in COST_MODES:
            raise OpfError(f"cost_mode must be one of {COST_MODES}, got {cost_mode!r}")
        if k_segments < 1:
            raise OpfError("k_segments must be >= 1")
        self.state = state
        self.cost_mode = cost_mode
        self.penalty = penalty
        self.islands = islands(state)
        self.island_lps = [_IslandLp(state, isl, cost_mode, k_segments, penalty)
                           for isl in self.islands if isl.has_generation]
        net = state.base
        dead_load_ids = [d.id for isl in self.islands if not isl.has_generation
                         for d in net.loads if d.id in isl.loads]
        self.forced_load_ids = sorted(
            [d.id for d in state.forced_out_loads()] + dead_load_ids)

    def _check_sample(self, sample):
        for isl_lp in self.island_lps:
            for d in isl_lp.loads:
                if d.id not in sample.load_p:
                    raise OpfError(f"sample is missing load {d.id}")
            for gen, _, k, _ in isl_lp.wind_updates:
                if gen.id not in sample.wind_avail:
                    raise OpfError(f"sample is missing wind generator {gen.id}")
        for load_id in self.forced_load_ids:
            if load_id not in sample.load_p:
                raise OpfError(f"sample is missing load {load_id}")

    def forced_shed_mw(self, sample) -> float:
        return float(sum(sample.load_p[i] for i in self.forced_load_ids))

    def cost(self, sample) -> float:
        """Total operating cost in $/h for one Monte Carlo sample."""
        try:
            total = self.penalty * self.forced_shed_mw(sample)
            for isl_lp in self.island_lps:
                status, _, obj, _, _, _, _ = isl_lp.solve(sample)
                if status == lp.INFEASIBLE:
                    raise OpfInfeasibleError(isl_lp.buses)
                if status != lp.OPTIMAL:
                    raise OpfSolverError(f"LP kernel status {status} on island "
                                         f"{tuple(isl_lp.buses)}")
                total += obj + isl_lp.const_cost
        except KeyError as exc:
            raise OpfError(f"sample is missing element {exc.args[0]}") from None
        return total

    def solution(self, sample) -> "OpfSolution":
        self._check_sample(sample)
        dispatch: dict[int, float] = {}
        flows: dict[int, float] = {}
        shed: dict[int, float] = {}
        total = self.penalty * self.forced_shed_mw(sample)
        for load_id in self.forced_load_ids:
            shed[load_id] = sample.load_p[load_id]
        status = "optimal"
        infeasible_islands: list[tuple[int, ...]] = []
        for isl_lp in self.island_lps:
            st, x, obj, _, _, _, _ = isl_lp.solve(sample)
            if st == lp.INFEASIBLE:
                status = "infeasible"
                infeasible_islands.append(tuple(isl_lp.buses))
                continue
            if st != lp.OPTIMAL:
                raise OpfSolverError(f"LP kernel status {st} on island "
                                     f"{tuple(isl_lp.buses)}")
            total += obj + isl_lp.const_cost
            base = isl_lp.base_mva
            for gen, first, k, _ in isl_lp.gen_segments:
                dispatch[gen.id] = gen.p_min + float(x[first:first + k].sum()) * base
            for i, line in enumerate(isl_lp.lines):
                flows[line.id] = float(x[isl_lp.flow_cols[i]]) * base
            for i, load in enumerate(isl_lp.loads):
                shed[load.id] = float(x[isl_lp.shed_cols[i]]) * base
        return OpfSolution(status=status, cost=total, dispatch=dispatch,
                           flows=flows, shed=shed,
                           infeasible_islands=tuple(infeasible_islands))


class OpfSolution:
    """Dispatch, flows, shed and total cost for one (state, sample) pair."""

    def __init__(self, status, cost, dispatch, flows, shed, infeasible_islands=()):
        self.status = status
        self.cost = cost
        self.dispatch = dispatch
        self.flows = flows
        self.shed = shed
        self.infeasible_islands = infeasible_islands


class OpfProblem:
    """A template paired with one sample (the spec-level problem object)."""

    def __init__(self, template: OpfTemplate, sample):
        self.template = template
        self.sample = sample
        self.penalty = template.penalty


def build_problem(state: NetworkState, sample, cost_mode: str = "lf",
                  k_segments: int = lp.DEFAULT_SEGMENTS,
                  penalty: float = DEFAULT_PENALTY) -> OpfProblem:
    template = OpfTemplate(state, cost_mode=cost_mode, k_segments=k_segments,
                           penalty=penalty)
    template._check_sample(sample)
    return OpfProblem(template, sample)


def solve_opf(problem: OpfProblem) -> OpfSolution:
    return problem.template.solution(problem.sample)


def scenario_cost(network: Network, state: NetworkState, sample,
                  cost_mode: str = "lf", k_segments: int = lp.DEFAULT_SEGMENTS,
                  penalty: float = DEFAULT_PENALTY) -> float:
    """Operating cost C_i of one (state, sample) scenario, in $/h."""
    if state.base is not network:
        raise OpfError("state does not belong to the given network")
    template = OpfTemplate(state, cost_mode=cost_mode, k_segments=k_segments,
                           penalty=penalty)
    template._check_sample(sample)
    return template.cost(sample)


def base_case_cost(network: Network, sample, **kwargs) -> float:
    return scenario_cost(network, intact_state(network), sample, **kwargs)
