"""Report assembly and serialization (JSON + CSV tables + plot data).

Every number in a report is a pure function of the run configuration and
seed. Worker count and output location deliberately do not appear in the
config echo: they cannot influence results, and excluding them keeps
reports byte-identical across parallelism choices. Floating-point values
are serialized with shortest round-trip repr in both JSON and CSV, so the
two formats carry identical numbers.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .lp import backend_name
from .risk import ProbabilityTable, RunSettings, ScenarioRun
from .sampler import RNG_ID

SCHEMA = "gridrisk-report/1"

# Deviations smaller than this (relative to c_o) are solver round-off, not
# cost-reducing outages; the flag uses the floor, the values stay signed.
NEGATIVE_FLAG_REL = 1e-9

CSV_FILES = ("contingencies.csv", "summary.csv", "threshold.csv",
             "fig_risk_l1.csv", "fig_risk_bus.csv", "fig_rt.csv",
             "fig_dcavg.csv", "fig_lf_qf.csv")


@dataclass
class RunConfig:
    """Full configuration of an assess/probe invocation."""

    case: str
    scenarios: tuple = ()
    seed: int = 1
    n_s: int = 200
    orders: tuple = ("L1", "BUS")
    cost_mode: str = "lf"           # lf | qf | both
    k_segments: int = 10
    penalty: float = 10_000.0
    probabilities: ProbabilityTable = field(default_factory=ProbabilityTable)
    sigma_fraction: float = 0.10
    out_dir: str = "out"            # not echoed into reports
    workers: int = 1                # not echoed into reports

    def settings(self) -> RunSettings:
        return RunSettings(seed=self.seed, n_s=self.n_s,
                           orders=tuple(o.upper() for o in self.orders),
                           k_segments=self.k_segments, penalty=self.penalty,
                           probabilities=self.probabilities,
                           sigma_fraction=self.sigma_fraction)

    def modes(self) -> tuple:
        return ("lf", "qf") if self.cost_mode == "both" else (self.cost_mode,)

    def echo(self) -> dict:
        return {
            "case": self.case,
            "scenarios": list(self.scenarios),
            "seed": self.seed,
            "samples": self.n_s,
            "orders": [o.upper() for o in self.orders],
            "cost_mode": self.cost_mode,
            "segments": self.k_segments,
            "penalty_usd_per_mw": self.penalty,
            "probabilities": self.probabilities.as_dict(),
            "sigma_fraction": self.sigma_fraction,
        }


def _generator_block() -> dict:
    return {"name": "gridrisk", "version": __version__, "rng": RNG_ID,
            "lp_backend": backend_name(), "numpy": np.__version__}


def _mc_block(mc) -> dict:
    return {"n_s": mc.n_s, "c_o": mc.c_o, "c_sigma": mc.c_sigma,
            "c_cov": mc.c_cov, "c_err": mc.c_err}


def _negative_floor(run: ScenarioRun) -> float:
    return -NEGATIVE_FLAG_REL * max(1.0, abs(run.mc.c_o))


def flagged_negative(run: ScenarioRun) -> list:
    floor = _negative_floor(run)
    return [r.label for r in run.results if r.delta_c < floor]


def _scenario_block(run: ScenarioRun) -> dict:
    floor = _negative_floor(run)
    rankings = {}
    for summary in run.summaries:
        members = [r for r in run.results if r.class_name == summary.class_name]
        members.sort(key=lambda r: (-r.risk, r.label))
        rankings[summary.class_name] = [r.label for r in members]
    return {
        "label": run.label,
        "penetration": run.penetration,
        "cost_mode": run.cost_mode,
        "mc": _mc_block(run.mc),
        "classes": [{
            "class": s.class_name, "count": s.count,
            "total_risk": s.total_risk, "avg_delta_c": s.avg_delta_c,
            "most_critical": s.most_critical,
            "least_critical": s.least_critical,
        } for s in run.summaries],
        "rankings": rankings,
        "contingencies": [{
            "label": r.label, "class": r.class_name,
            "probability": r.contingency.probability,
            "mean_cost": r.mean_cost, "delta_c": r.delta_c, "risk": r.risk,
            "negative": bool(r.delta_c < floor),
        } for r in run.results],
    }


def qf_below_lf_rows(runs_by_mode: dict) -> list:
    """Per-contingency rows where the quadratic wind cost run undercuts
    the linear one by more than round-off (flagged, never asserted)."""
    out = []
    if "lf" not in runs_by_mode or "qf" not in runs_by_mode:
        return out
    for run_lf, run_qf in zip(runs_by_mode["lf"], runs_by_mode["qf"]):
        for r_lf, r_qf in zip(run_lf.results, run_qf.results):
            tol = NEGATIVE_FLAG_REL * max(1.0, abs(r_lf.delta_c))
            if r_qf.delta_c < r_lf.delta_c - tol:
                out.append({"scenario": run_lf.label, "label": r_lf.label,
                            "lf_delta_c": r_lf.delta_c,
                            "qf_delta_c": r_qf.delta_c})
    return out


def observations(runs_by_mode: dict, scans_by_mode: dict) -> list:
    """Qualitative findings logged for the analyst, never asserted."""
    notes = []
    for mode, runs in runs_by_mode.items():
        tops = []
        for run in runs:
            for s in run.summaries:
                if s.class_name == "BUS":
                    tops.append((run.label, s.most_critical))
        if tops:
            buses = {b for _, b in tops}
            if len(buses) == 1:
                notes.append(f"[{mode}] bus {tops[0][1]} ranks most critical "
                             "in every scenario")
            else:
                notes.append(f"[{mode}] most critical bus varies by scenario: "
                             + ", ".join(f"{l}={b}" for l, b in tops))
        for run in runs:
            bus_avg = {s.class_name: s.avg_delta_c for s in run.summaries}
            if "BUS" in bus_avg and len(bus_avg) > 1:
                others = max(v for k, v in bus_avg.items() if k != "BUS")
                if bus_avg["BUS"] > others:
                    notes.append(f"[{mode}] scenario {run.label}: bus-outage "
                                 "avg cost deviation exceeds every line class")
    for mode, scan in scans_by_mode.items():
        if scan is None:
            continue
        labels = [r.label for r in scan.rows]
        for name, worst in (("avg-delta", scan.worst_by_avg_delta),
                            ("total-risk", scan.worst_by_total_risk)):
            pos = labels.index(worst)
            interior = 0 < pos < len(labels) - 1
            notes.append(f"[{mode}] worst case by {name}: {worst}"
                         + (" (interior penetration level)" if interior else ""))
        if not scan.criteria_agree:
            notes.append(f"[{mode}] worst-case criteria disagree: "
                         f"{scan.worst_by_avg_delta} (avg-delta) vs "
                         f"{scan.worst_by_total_risk} (total-risk)")
    return notes


def build_report(config: RunConfig, runs_by_mode: dict,
                 scans_by_mode: dict) -> dict:
    negative = [{"scenario": run.label, "cost_mode": run.cost_mode, "label": l}
                for mode in sorted(runs_by_mode)
                for run in runs_by_mode[mode]
                for l in flagged_negative(run)]
    threshold = {}
    for mode in sorted(scans_by_mode):
        scan = scans_by_mode[mode]
        if scan is None:
            continue
        threshold[mode] = {
            "rows": [{
                "label": r.label, "penetration": r.penetration,
                "c_o": r.mc.c_o,
                "classes": [{"class": s.class_name,
                             "total_risk": s.total_risk,
                             "avg_delta_c": s.avg_delta_c}
                            for s in r.summaries],
            } for r in scan.rows],
            "worst_by_avg_delta": scan.worst_by_avg_delta,
            "worst_by_total_risk": scan.worst_by_total_risk,
            "criteria_agree": scan.criteria_agree,
        }
    return {
        "schema": SCHEMA,
        "generator": _generator_block(),
        "config": config.echo(),
        "scenarios": [_scenario_block(run)
                      for mode in sorted(runs_by_mode)
                      for run in runs_by_mode[mode]],
        "threshold": threshold,
        "flags": {
            "negative_delta": negative,
            "criteria_disagree": {mode: not scan.criteria_agree
                                  for mode, scan in sorted(scans_by_mode.items())
                                  if scan is not None},
            "qf_below_lf": qf_below_lf_rows(runs_by_mode),
        },
        "observations": observations(runs_by_mode, scans_by_mode),
    }


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_outputs(report: dict, runs_by_mode: dict, scans_by_mode: dict,
                  out_dir) -> list:
    """Write report.json and all CSV duals; returns the file list."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def out(name):
        p = os.path.join(out_dir, name)
        paths.append(p)
        return p

    with open(out("report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    all_runs = [run for mode in sorted(runs_by_mode)
                for run in runs_by_mode[mode]]

    rows = []
    for run in all_runs:
        floor = _negative_floor(run)
        for r in run.results:
            rows.append([run.label, run.cost_mode, r.class_name, r.label,
                         r.contingency.probability, r.mean_cost, r.delta_c,
                         r.risk, int(r.delta_c < floor)])
    _write_csv(out("contingencies.csv"),
               ["scenario", "cost_mode", "class", "label", "probability",
                "mean_cost", "delta_c", "risk", "negative"], rows)

    rows = []
    for run in all_runs:
        for s in run.summaries:
            rows.append([run.label, run.cost_mode, s.class_name, s.count,
                         run.mc.c_o, s.total_risk, s.avg_delta_c,
                         s.most_critical, s.least_critical])
    _write_csv(out("summary.csv"),
               ["scenario", "cost_mode", "class", "count", "c_o",
                "total_risk", "avg_delta_c", "most_critical",
                "least_critical"], rows)

    rows = []
    for mode in sorted(scans_by_mode):
        scan = scans_by_mode[mode]
        if scan is None:
            continue
        for r in scan.rows:
            for s in r.summaries:
                rows.append([r.label, r.penetration, mode, s.class_name,
                             r.mc.c_o, s.total_risk, s.avg_delta_c,
                             scan.worst_by_avg_delta,
                             scan.worst_by_total_risk])
    _write_csv(out("threshold.csv"),
               ["scenario", "penetration", "cost_mode", "class", "c_o",
                "total_risk", "avg_delta_c", "worst_by_avg_delta",
                "worst_by_total_risk"], rows)

    for class_name, fname in (("L1", "fig_risk_l1.csv"),
                              ("BUS", "fig_risk_bus.csv")):
        rows = []
        for run in all_runs:
            for r in run.results:
                if r.class_name == class_name:
                    rows.append([run.label, run.cost_mode, r.label, r.risk])
        _write_csv(out(fname), ["scenario", "cost_mode", "label", "risk"], rows)

    rows = []
    for run in all_runs:
        for s in run.summaries:
            rows.append([run.label, run.penetration, run.cost_mode,
                         s.class_name, s.total_risk])
    _write_csv(out("fig_rt.csv"),
               ["scenario", "penetration", "cost_mode", "class",
                "total_risk"], rows)

    rows = []
    for run in all_runs:
        for s in run.summaries:
            rows.append([run.label, run.penetration, run.cost_mode,
                         s.class_name, s.avg_delta_c])
    _write_csv(out("fig_dcavg.csv"),
               ["scenario", "penetration", "cost_mode", "class",
                "avg_delta_c"], rows)

    rows = []
    if "lf" in runs_by_mode and "qf" in runs_by_mode:
        for run_lf, run_qf in zip(runs_by_mode["lf"], runs_by_mode["qf"]):
            for s_lf, s_qf in zip(run_lf.summaries, run_qf.summaries):
                rows.append([run_lf.label, run_lf.penetration,
                             s_lf.class_name, "total_risk",
                             s_lf.total_risk, s_qf.total_risk])
                rows.append([run_lf.label, run_lf.penetration,
                             s_lf.class_name, "avg_delta_c",
                             s_lf.avg_delta_c, s_qf.avg_delta_c])
    _write_csv(out("fig_lf_qf.csv"),
               ["scenario", "penetration", "class", "metric", "lf", "qf"],
               rows)
    return paths


def write_probe(stats_rows, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "probe.csv")
    _write_csv(path, ["n_s", "c_o", "c_sigma", "c_cov", "c_err"],
               [[s.n_s, s.c_o, s.c_sigma, s.c_cov, s.c_err]
                for s in stats_rows])
    return path
