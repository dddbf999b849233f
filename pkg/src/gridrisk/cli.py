"""Command-line orchestration: probe, assess, rank.

`probe` runs the Monte Carlo convergence check on the intact network,
`assess` executes the full pipeline (sample, base OPF, contingency sweep,
risk aggregation, threshold scan) and writes the report artifacts, and
`rank` prints criticality tables from an existing report.

Exit codes: 0 success, 1 configuration or data error, 2 solver failure,
3 internal invariant violation. Progress goes to stderr only; output files
are byte-identical for a given (config, seed) whatever the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import report as rpt
from .caseio import CaseSyntaxError, load_case
from .dcopf import OpfError
from .lp import LpError
from .model import ModelError, Network
from .risk import (CLASSES, ProbabilityTable, SweepError, assess_scenario,
                   convergence_probe, threshold_scan)
from .sampler import (PenetrationScenario, ScenarioSyntaxError, default_spec,
                      load_scenario)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INTERNAL = 0, 1, 2, 3

_CONFIG_ERRORS = (CaseSyntaxError, ScenarioSyntaxError, ModelError, LpError,
                  OSError, ValueError)


def _default_seed() -> int:
    return int(os.environ.get("GRIDRISK_SEED", "1"))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--case", required=True, help="case file path")
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help="RNG seed (default: $GRIDRISK_SEED or 1)")
    p.add_argument("--cost-mode", default="lf", choices=("lf", "qf", "both"),
                   help="wind cost function mode")
    p.add_argument("--segments", type=int, default=10,
                   help="piecewise segments per quadratic curve")
    p.add_argument("--penalty", type=float, default=10_000.0,
                   help="load shedding price in $/MWh")
    p.add_argument("--sigma", type=float, default=0.10,
                   help="sigma as a fraction of the mean for loads and wind")
    p.add_argument("--out", default="out", help="output directory")
    for name, default in (("l1", 1e-2), ("l2", 1e-4), ("l3", 1e-6),
                          ("bus", 1e-7)):
        p.add_argument(f"--pr-{name}", type=float, default=default,
                       help=f"outage probability for class {name.upper()}")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridrisk",
        description="Risk-based static security assessment "
                    "(Monte Carlo + brute-force outages + DC-OPF)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="MC convergence probe on the base case")
    _add_common(p)
    p.add_argument("--samples-set", default="100,1000,10000",
                   help="comma-separated sample counts")

    p = sub.add_parser("assess", help="full risk assessment run")
    _add_common(p)
    p.add_argument("--scenarios", nargs="*", default=[],
                   help="penetration scenario files (empty: base case only)")
    p.add_argument("--samples", type=int, default=200,
                   help="Monte Carlo samples per scenario")
    p.add_argument("--orders", default="l1,bus",
                   help="contingency classes, e.g. l1,l2,l3,bus")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers for the contingency sweep")

    p = sub.add_parser("rank", help="print a criticality ranking")
    p.add_argument("--report", required=True, help="path to report.json")
    p.add_argument("--class", dest="class_name", required=True,
                   help="contingency class: l1, l2, l3 or bus")
    p.add_argument("--scenario", default=None,
                   help="scenario label (default: first in report)")
    p.add_argument("--cost-mode", default=None, choices=("lf", "qf"),
                   help="cost mode to rank (default: first in report)")
    return parser


def _warn_penalty(network: Network, penalty: float):
    worst = max(g.cost.marginal(g.p_max) for g in network.generators)
    if penalty <= worst:
        print(f"warning: shed penalty {penalty} $/MWh does not exceed the "
              f"highest generator marginal cost {worst:.2f} $/MWh; shedding "
              "may beat dispatch", file=sys.stderr)


def _config(args, scenarios=()) -> rpt.RunConfig:
    table = ProbabilityTable(pr_l1=args.pr_l1, pr_l2=args.pr_l2,
                             pr_l3=args.pr_l3, pr_bus=args.pr_bus)
    orders = tuple(o.strip().upper() for o in
                   getattr(args, "orders", "l1,bus").split(",") if o.strip())
    return rpt.RunConfig(case=args.case, scenarios=tuple(scenarios),
                         seed=args.seed,
                         n_s=getattr(args, "samples", 200), orders=orders,
                         cost_mode=args.cost_mode, k_segments=args.segments,
                         penalty=args.penalty, probabilities=table,
                         sigma_fraction=args.sigma, out_dir=args.out,
                         workers=getattr(args, "workers", 1))


def _cmd_probe(args) -> int:
    network = load_case(args.case)
    _warn_penalty(network, args.penalty)
    if args.cost_mode == "both":
        print("error: probe needs a single cost mode (lf or qf)",
              file=sys.stderr)
        return EXIT_CONFIG
    ns_list = [int(tok) for tok in args.samples_set.split(",") if tok.strip()]
    if min(ns_list) < 1:
        raise ModelError("sample counts must be >= 1")
    if min(ns_list) == 1:
        print("warning: n_s = 1 has undefined dispersion; c_sigma reported "
              "as 0", file=sys.stderr)
    spec = default_spec(network, sigma_fraction=args.sigma)
    rows = convergence_probe(network, spec, args.seed, ns_list,
                             cost_mode=args.cost_mode,
                             k_segments=args.segments, penalty=args.penalty)
    path = rpt.write_probe(rows, args.out)
    print(f"{'n_s':>8} {'c_o':>16} {'c_sigma':>14} {'c_cov':>7} {'c_err':>12}")
    for s in rows:
        print(f"{s.n_s:>8} {s.c_o:>16,.0f} {s.c_sigma:>14,.0f} "
              f"{s.c_cov:>7.2f} {s.c_err:>12,.0f}")
    print(f"wrote {path}")
    return EXIT_OK


def _progress(labeled, stream=sys.stderr):
    def cb(done, total):
        step = max(1, total // 20)
        if done % step == 0 or done == total:
            print(f"\r{labeled}: {done}/{total} contingencies", end="",
                  file=stream)
            if done == total:
                print(file=stream)
    return cb


def _cmd_assess(args) -> int:
    network = load_case(args.case)
    _warn_penalty(network, args.penalty)
    scenarios = [load_scenario(p) for p in args.scenarios]
    config = _config(args, scenarios=args.scenarios)
    settings = config.settings()
    if not scenarios:
        scenarios = [PenetrationScenario(label="0%")]
        run_threshold = False
    else:
        run_threshold = True

    runs_by_mode = {}
    scans_by_mode = {}
    for mode in config.modes():
        if run_threshold:
            scan = threshold_scan(network, scenarios, settings,
                                  cost_mode=mode, workers=config.workers,
                                  progress=_progress(f"[{mode}]"))
            scans_by_mode[mode] = scan
            runs_by_mode[mode] = list(scan.rows)
        else:
            scans_by_mode[mode] = None
            runs_by_mode[mode] = [
                assess_scenario(network, sc, settings, cost_mode=mode,
                                workers=config.workers,
                                progress=_progress(f"[{mode} {sc.label}]"))
                for sc in scenarios]

    report = rpt.build_report(config, runs_by_mode, scans_by_mode)
    paths = rpt.write_outputs(report, runs_by_mode, scans_by_mode,
                              config.out_dir)
    for note in report["observations"]:
        print(f"observation: {note}", file=sys.stderr)
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_rank(args) -> int:
    class_name = args.class_name.upper()
    if class_name not in CLASSES:
        print(f"error: unknown class {args.class_name!r} "
              f"(expected one of {', '.join(c.lower() for c in CLASSES)})",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    blocks = report.get("scenarios", [])
    if args.scenario is not None:
        blocks = [b for b in blocks if b["label"] == args.scenario]
        if not blocks:
            print(f"error: scenario {args.scenario!r} not in report",
                  file=sys.stderr)
            return EXIT_CONFIG
    if args.cost_mode is not None:
        blocks = [b for b in blocks if b["cost_mode"] == args.cost_mode]
        if not blocks:
            print(f"error: cost mode {args.cost_mode!r} not in report",
                  file=sys.stderr)
            return EXIT_CONFIG
    block = blocks[0]
    rows = [c for c in block["contingencies"] if c["class"] == class_name]
    if not rows:
        print(f"error: class not evaluated: {class_name.lower()}",
              file=sys.stderr)
        return EXIT_CONFIG
    rows.sort(key=lambda c: (-c["risk"], c["label"]))
    print(f"# scenario {block['label']} ({block['cost_mode']}), "
          f"class {class_name}")
    print(f"{'rank':>4} {'label':>24} {'risk':>18} {'delta_c':>18}")
    for rank, c in enumerate(rows, start=1):
        print(f"{rank:>4} {c['label']:>24} {c['risk']:>18.6f} "
              f"{c['delta_c']:>18.3f}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        if args.command == "probe":
            return _cmd_probe(args)
        if args.command == "assess":
            return _cmd_assess(args)
        return _cmd_rank(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SweepError, OpfError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:  # invariant breakage: never silently wrong
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
