"""Contingency enumeration, Monte Carlo sweeps, and risk indicators.

Risk of an outage is its probability times the deviation of the mean
post-contingency optimal cost from the base-case mean optimal cost. Class
totals and the average cost deviation follow the same convention:

    risk_n      = Pr(class) * (mean_cost_n - c_o)
    total_risk  = Pr(class) * sum_n (mean_cost_n - c_o)   (fixed order)
    avg_delta_c = sum_n (mean_cost_n - c_o) / count

Deviations are signed: removing a line can lower optimal cost in congested
networks (a Braess-type effect), and such rows are flagged for review
rather than clamped to zero.

All (contingency x sample) evaluations are embarrassingly parallel; the
sweep farms whole contingencies out to a process pool and reduces in
enumeration order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import itertools
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .dcopf import DEFAULT_PENALTY, OpfTemplate
from .lp import DEFAULT_SEGMENTS
from .model import (Contingency, ModelError, Network, apply_contingency,
                    intact_state, line_set_label)
from .sampler import (DEFAULT_SIGMA_FRACTION, McStats, PenetrationScenario,
                      build_penetration_case, draw_samples, mc_stats,
                      penetration_fraction)

CLASSES = ("L1", "L2", "L3", "BUS")


class SweepError(Exception):
    """Evaluation failure, tagged with its (contingency, sample) coordinates."""


@dataclass(frozen=True)
class ProbabilityTable:
    """Per-class outage probabilities."""

    pr_l1: float = 1e-2
    pr_l2: float = 1e-4
    pr_l3: float = 1e-6
    pr_bus: float = 1e-7

    def __post_init__(self):
        for name, p in self.as_dict().items():
            if not 0.0 < p < 1.0:
                raise ModelError(f"probability {name} must be in (0,1), got {p}")

    def as_dict(self) -> dict:
        return {"L1": self.pr_l1, "L2": self.pr_l2, "L3": self.pr_l3,
                "BUS": self.pr_bus}

    def for_class(self, class_name: str) -> float:
        return self.as_dict()[class_name]


def contingency_class(contingency: Contingency) -> str:
    return "BUS" if contingency.is_bus else f"L{len(contingency.lines)}"


def enumerate_contingencies(network: Network, orders,
                            table: ProbabilityTable | None = None
                            ) -> list[Contingency]:
    """Brute-force outage list: all k-line combinations and/or all buses.

    Ordering is deterministic: classes in (L1, L2, L3, BUS) sequence, and
    within a class lexicographic by element ids.
    """
    table = table or ProbabilityTable()
    orders = {o.upper() for o in orders}
    unknown = orders - set(CLASSES)
    if unknown:
        raise ModelError(f"unknown contingency classes: {sorted(unknown)}")
    line_ids = sorted(l.id for l in network.lines if l.in_service)
    out: list[Contingency] = []
    for k, class_name in ((1, "L1"), (2, "L2"), (3, "L3")):
        if class_name not in orders:
            continue
        pr = table.for_class(class_name)
        for combo in itertools.combinations(line_ids, k):
            out.append(Contingency(lines=combo, bus=None, probability=pr,
                                   label=line_set_label(network, combo)))
    if "BUS" in orders:
        pr = table.for_class("BUS")
        for bus in sorted(network.bus_ids):
            out.append(Contingency(lines=(), bus=bus, probability=pr,
                                   label=f"B{bus}"))
    return out


def _mean_cost(template: OpfTemplate, samples, label: str) -> float:
    costs = np.empty(len(samples))
    for idx, sample in enumerate(samples):
        try:
            costs[idx] = template.cost(sample)
        except Exception as exc:
            raise SweepError(f"contingency {label!r}, sample {sample.index}: "
                             f"{exc}") from exc
    return float(np.mean(costs))


def contingency_mean_cost(network: Network, contingency: Contingency,
                          samples, cost_mode: str = "lf",
                          k_segments: int = DEFAULT_SEGMENTS,
                          penalty: float = DEFAULT_PENALTY) -> float:
    """Mean scenario cost over the shared sample stream (Eq. 3/6 input)."""
    state = apply_contingency(network, contingency)
    template = OpfTemplate(state, cost_mode=cost_mode, k_segments=k_segments,
                           penalty=penalty)
    return _mean_cost(template, samples, contingency.label)


def base_mean_costs(network: Network, samples, cost_mode: str = "lf",
                    k_segments: int = DEFAULT_SEGMENTS,
                    penalty: float = DEFAULT_PENALTY) -> np.ndarray:
    """Per-sample base-case costs C_i of the intact network."""
    template = OpfTemplate(intact_state(network), cost_mode=cost_mode,
                           k_segments=k_segments, penalty=penalty)
    costs = np.empty(len(samples))
    for idx, sample in enumerate(samples):
        try:
            costs[idx] = template.cost(sample)
        except Exception as exc:
            raise SweepError(f"base case, sample {sample.index}: {exc}") from exc
    return costs


# Worker-side state for the sweep pool (populated by the fork initializer).
_POOL_CTX: dict = {}


def _pool_init(network, contingencies, samples, cost_mode, k_segments, penalty):
    _POOL_CTX.update(network=network, contingencies=contingencies,
                     samples=samples, cost_mode=cost_mode,
                     k_segments=k_segments, penalty=penalty)


def _pool_eval(index: int) -> float:
    ctx = _POOL_CTX
    return contingency_mean_cost(ctx["network"], ctx["contingencies"][index],
                                 ctx["samples"], cost_mode=ctx["cost_mode"],
                                 k_segments=ctx["k_segments"],
                                 penalty=ctx["penalty"])


def sweep_contingencies(network: Network, contingencies, samples,
                        cost_mode: str = "lf",
                        k_segments: int = DEFAULT_SEGMENTS,
                        penalty: float = DEFAULT_PENALTY, workers: int = 1,
                        progress=None) -> list[float]:
    """Mean post-contingency cost per contingency, in enumeration order.

    The reduction is a fixed-order gather, so the result (and every report
    derived from it) is byte-identical for any worker count.
    """
    if workers <= 1:
        _pool_init(network, contingencies, samples, cost_mode, k_segments,
                   penalty)
        out = []
        for i in range(len(contingencies)):
            out.append(_pool_eval(i))
            if progress:
                progress(i + 1, len(contingencies))
        return out
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(contingencies) // (workers * 8))
    with ctx.Pool(processes=workers, initializer=_pool_init,
                  initargs=(network, contingencies, samples, cost_mode,
                            k_segments, penalty)) as pool:
        out = []
        for i, value in enumerate(pool.imap(_pool_eval,
                                            range(len(contingencies)),
                                            chunksize=chunk)):
            out.append(value)
            if progress:
                progress(i + 1, len(contingencies))
    return out


@dataclass(frozen=True)
class ContingencyResult:
    contingency: Contingency
    mean_cost: float
    delta_c: float
    risk: float

    @property
    def class_name(self) -> str:
        return contingency_class(self.contingency)

    @property
    def label(self) -> str:
        return self.contingency.label


@dataclass(frozen=True)
class ClassSummary:
    class_name: str
    count: int
    total_risk: float
    avg_delta_c: float
    most_critical: str
    least_critical: str


def compute_risk(contingencies, mean_costs, c_o: float):
    """Per-contingency deviations and risks plus per-class summaries.

    Class totals factor the common probability out of a fixed-order sum
    (total_risk = Pr * sum delta_c), which is the exactly-assertable form
    of the summation identities. Criticality ties break toward the
    lexicographically smaller label.
    """
    if len(contingencies) != len(mean_costs):
        raise ValueError("contingencies and mean_costs length mismatch")
    if not contingencies:
        raise ValueError("no contingency results to aggregate (empty class)")
    results: list[ContingencyResult] = []
    for contingency, mean_cost in zip(contingencies, mean_costs):
        delta = mean_cost - c_o
        results.append(ContingencyResult(contingency=contingency,
                                         mean_cost=mean_cost, delta_c=delta,
                                         risk=contingency.probability * delta))
    summaries: list[ClassSummary] = []
    for class_name in CLASSES:
        members = [r for r in results if r.class_name == class_name]
        if not members:
            continue
        pr = members[0].contingency.probability
        sum_delta = 0.0
        for r in members:
            sum_delta += r.delta_c
        most = min(members, key=lambda r: (-r.risk, r.label))
        least = min(members, key=lambda r: (r.risk, r.label))
        summaries.append(ClassSummary(class_name=class_name,
                                      count=len(members),
                                      total_risk=pr * sum_delta,
                                      avg_delta_c=sum_delta / len(members),
                                      most_critical=most.label,
                                      least_critical=least.label))
    return results, summaries


@dataclass(frozen=True)
class RunSettings:
    """Numeric knobs of one assessment run (everything but file paths)."""

    seed: int = 1
    n_s: int = 200
    orders: tuple = ("L1", "BUS")
    k_segments: int = DEFAULT_SEGMENTS
    penalty: float = DEFAULT_PENALTY
    probabilities: ProbabilityTable = field(default_factory=ProbabilityTable)
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION

    def __post_init__(self):
        if self.n_s < 1:
            raise ModelError(f"n_s must be >= 1, got {self.n_s}")
        if not self.orders:
            raise ModelError("orders must be nonempty")


@dataclass(frozen=True)
class ScenarioRun:
    """One (scenario, cost mode) pass: MC stats plus all risk indicators."""

    label: str
    penetration: float
    cost_mode: str
    mc: McStats
    results: tuple
    summaries: tuple

    def negative_labels(self) -> list[str]:
        return [r.label for r in self.results if r.delta_c < 0.0]

    def summary(self, class_name: str) -> ClassSummary:
        for s in self.summaries:
            if s.class_name == class_name:
                return s
        raise KeyError(class_name)


def assess_scenario(base: Network, scenario: PenetrationScenario,
                    settings: RunSettings, cost_mode: str = "lf",
                    workers: int = 1, progress=None) -> ScenarioRun:
    """Full pipeline for one scenario: sample, base OPF, sweep, aggregate."""
    network, spec = build_penetration_case(base, scenario,
                                           sigma_fraction=settings.sigma_fraction)
    samples = draw_samples(spec, settings.seed, settings.n_s)
    base_costs = base_mean_costs(network, samples, cost_mode=cost_mode,
                                 k_segments=settings.k_segments,
                                 penalty=settings.penalty)
    stats = mc_stats(base_costs)
    contingencies = enumerate_contingencies(network, settings.orders,
                                            settings.probabilities)
    means = sweep_contingencies(network, contingencies, samples,
                                cost_mode=cost_mode,
                                k_segments=settings.k_segments,
                                penalty=settings.penalty, workers=workers,
                                progress=progress)
    results, summaries = compute_risk(contingencies, means, stats.c_o)
    return ScenarioRun(label=scenario.label,
                       penetration=penetration_fraction(base, scenario),
                       cost_mode=cost_mode, mc=stats, results=tuple(results),
                       summaries=tuple(summaries))


@dataclass(frozen=True)
class ThresholdScan:
    """Across penetration levels: indicator rows and the worst-case level."""

    rows: tuple  # ScenarioRun per scenario, one cost mode
    worst_by_avg_delta: str
    worst_by_total_risk: str

    @property
    def criteria_agree(self) -> bool:
        return self.worst_by_avg_delta == self.worst_by_total_risk

    @property
    def worst_case(self) -> str:
        """Default criterion: maximum class-wise average cost deviation."""
        return self.worst_by_avg_delta


def _worst(rows, score) -> str:
    best = max(rows, key=lambda r: (score(r), -r.penetration))
    return best.label


def threshold_scan(base: Network, scenarios, settings: RunSettings,
                   cost_mode: str = "lf", workers: int = 1,
                   progress=None) -> ThresholdScan:
    """Run the pipeline per scenario and locate the worst-case level.

    Two criteria are computed: maximum class-wise average cost deviation
    (default) and maximum class-wise total risk; ties break toward the
    lower penetration. Disagreement between the criteria is surfaced, not
    resolved.
    """
    if not scenarios:
        raise ModelError("threshold scan needs at least one scenario")
    rows = []
    for scenario in scenarios:
        rows.append(assess_scenario(base, scenario, settings,
                                    cost_mode=cost_mode, workers=workers,
                                    progress=progress))
    return ThresholdScan(
        rows=tuple(rows),
        worst_by_avg_delta=_worst(rows, lambda r: max(s.avg_delta_c
                                                      for s in r.summaries)),
        worst_by_total_risk=_worst(rows, lambda r: max(s.total_risk
                                                       for s in r.summaries)))


def convergence_probe(network: Network, spec, seed: int, ns_list,
                      cost_mode: str = "lf",
                      k_segments: int = DEFAULT_SEGMENTS,
                      penalty: float = DEFAULT_PENALTY) -> list[McStats]:
    """McStats of the intact network for each sample count in ns_list.

    Streams are keyed by sample index, so the n-sample series is a prefix
    of the larger ones; costs are computed once for max(ns_list).
    """
    ns_list = sorted(set(int(n) for n in ns_list))
    if not ns_list or ns_list[0] < 1:
        raise ModelError("sample counts must be positive")
    samples = draw_samples(spec, seed, ns_list[-1])
    costs = base_mean_costs(network, samples, cost_mode=cost_mode,
                            k_segments=k_segments, penalty=penalty)
    return [mc_stats(costs[:n]) for n in ns_list]
