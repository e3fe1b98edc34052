"""Command-line interface: ``topodetect {analyze,sensors,simulate,detect,path-demo}``.

Exit codes: 0 success, 1 input error, 2 infeasible sensor placement,
3 inconclusive detection (the report is still written).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .detector import (
    MARGINAL_RTOL,
    ZERO_COST_ATOL,
    ZERO_COST_RTOL,
    SamplePlan,
    Verdict,
    detect,
    kalman_bertram_check,
    observability_matrix,
    simulate_samples,
)
from .discern import (
    SensorSet,
    eigenvector_check,
    indiscernible_set,
    output_discernibility,
    sensor_placement,
)
from .io import (
    FormatError,
    Scenario,
    dump_report,
    load_graph,
    load_samples,
    load_scenario,
    samples_to_csv,
    samples_to_json,
)
from .model import NetworkModel, VariationSpec, applicable_variations, apply_variation
from .pathgraph import path_mode_index, solutions_table
from .spectral import DEFAULT_TOL, spectral_decompose

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_INCONCLUSIVE = 3


class CLIError(Exception):
    """Raised for user errors; turned into a one-line message and exit 1."""


def _tolerances() -> dict:
    out = DEFAULT_TOL.as_dict()
    out.update(zero_cost_rtol=ZERO_COST_RTOL, zero_cost_atol=ZERO_COST_ATOL,
               marginal_rtol=MARGINAL_RTOL)
    return out


def _is_unit_path(model: NetworkModel) -> bool:
    """Unit-weight consensus on ``1 - 2 - ... - n``."""
    n = model.n
    if model.edges != tuple((i, i + 1) for i in range(1, n)):
        return False
    if any(w != 1.0 for w in model.weights):
        return False
    return all(model.diag[i - 1] == -model.degree(i) for i in range(1, n + 1))


def _variations(model: NetworkModel, texts) -> list[VariationSpec]:
    if not texts:
        return applicable_variations(model)
    specs = []
    for t in texts:
        spec = VariationSpec.parse(t)
        spec.validate(model)
        specs.append(spec)
    return specs


def _parse_nodes(text: str | None):
    if text is None:
        return None
    return SensorSet.parse(text)


# --- analyze ---------------------------------------------------------------

def analyze_variation(model: NetworkModel, spec: VariationSpec,
                      sensors: SensorSet | None = None) -> dict:
    """Discernibility report for one variation as a plain dict."""
    e = spectral_decompose(model.to_dense())
    ebar = spectral_decompose(apply_variation(model, spec).to_dense())
    ana = indiscernible_set(e, ebar)
    path = _is_unit_path(model)
    shared = []
    for s in ana.shared:
        row = {"eigenvalue": s.value, "multiplicity": s.multiplicity,
               "multiplicity_modified": s.multiplicity_bar, "dim_common": s.psi.dim,
               "directions": s.psi.basis.T.tolist()}
        if path:
            row["path_mode"] = path_mode_index(model.n, s.value)
        shared.append(row)
    tests = []
    for g in e.groups:
        for c in range(g.multiplicity):
            chk = eigenvector_check(model, g.basis[:, c], spec)
            row = {"eigenvalue": g.value, "indiscernible": chk.indiscernible,
                   "statistic": chk.statistic, "threshold": chk.threshold,
                   "marginal": chk.marginal}
            if path:
                row["path_mode"] = path_mode_index(model.n, g.value)
            tests.append(row)
    out = {
        "variation": str(spec),
        "dim_indiscernible": ana.dim,
        "fully_discernible": ana.fully_discernible,
        "shared_eigenvalues": shared,
        "eigenvector_tests": tests,
        "marginal_eigenvalues": list(ana.marginal_eigenvalues),
    }
    if sensors is not None:
        sensors.validate(model.n)
        od = output_discernibility(e, ebar, sensors)
        out["output"] = {
            "sensors": list(sensors.measured),
            "output_discernible": od.output_discernible,
            "conditions": {"i": od.cond_i, "ii": od.cond_ii, "iii": od.cond_iii},
            "failures": [{"condition": f.condition, "eigenvalue": f.value,
                          "rank": f.rank, "required": f.required} for f in od.failures],
            "dim_indiscernible_M": od.i_of_m.dim,
            "sensor_lower_bound": od.sensor_lower_bound,
        }
    return out


def _print_analysis(rep: dict, out) -> None:
    print(f"variation {rep['variation']}: dim I = {rep['dim_indiscernible']}", file=out)
    for s in rep["shared_eigenvalues"]:
        if not s["dim_common"]:
            continue
        mode = f"  (path mode k = {s['path_mode']})" if "path_mode" in s else ""
        print(f"  lambda = {s['eigenvalue']:+.10g}  common dim {s['dim_common']}{mode}", file=out)
        for d in s["directions"]:
            print("    " + " ".join(f"{v:+.6f}" for v in d), file=out)
    hidden = [t for t in rep["eigenvector_tests"] if t["indiscernible"]]
    marg = [t for t in rep["eigenvector_tests"] if t["marginal"]]
    print(f"  eigenvector tests: {len(hidden)} of {len(rep['eigenvector_tests'])} indiscernible,"
          f" {len(marg)} marginal", file=out)
    if "output" in rep:
        o = rep["output"]
        print(f"  sensors {','.join(map(str, o['sensors']))}: output discernible = "
              f"{o['output_discernible']}, dim I(M) = {o['dim_indiscernible_M']}, "
              f"lower bound = {o['sensor_lower_bound']}", file=out)


def cmd_analyze(args, out) -> int:
    model = load_graph(args.graph)
    sensors = _parse_nodes(args.sensors)
    reports = [analyze_variation(model, s, sensors) for s in _variations(model, args.variation)]
    if args.json:
        print(dump_report({"command": "analyze", "n": model.n, "variations": reports},
                          _tolerances()), file=out)
    else:
        for rep in reports:
            _print_analysis(rep, out)
    return EXIT_OK


# --- sensors -----------------------------------------------------------------

def cmd_sensors(args, out) -> int:
    model = load_graph(args.graph)
    spec = VariationSpec.parse(args.variation)
    spec.validate(model)
    restrict = None
    if args.restrict is not None:
        restrict = SensorSet.parse(args.restrict)
        restrict.validate(model.n)
        restrict = restrict.measured
    e = spectral_decompose(model.to_dense())
    ebar = spectral_decompose(apply_variation(model, spec).to_dense())
    res = sensor_placement(e, ebar, args.budget, restrict)
    rep = {
        "command": "sensors",
        "variation": str(spec),
        "budget": res.budget,
        "lower_bound": res.lower_bound,
        "feasible": res.feasible,
        "sensors": list(res.sensors.measured) if res.feasible else None,
        "evaluated": res.evaluated,
        "restrict": list(restrict) if restrict is not None else None,
        "reason": res.reason,
    }
    if args.json:
        print(dump_report(rep, _tolerances()), file=out)
    elif res.feasible:
        print(f"variation {spec}: sensors {res.sensors} (lower bound {res.lower_bound}, "
              f"{res.evaluated} sets evaluated)", file=out)
    else:
        print(f"variation {spec}: infeasible: {res.reason}", file=out)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


# --- simulate / detect ------------------------------------------------------------

def _apply_overrides(sc: Scenario, args) -> Scenario:
    plan = sc.plan
    if args.T is not None or args.N is not None or args.t0 is not None:
        plan = SamplePlan(sc.plan.t0 if args.t0 is None else args.t0,
                          sc.plan.T if args.T is None else args.T,
                          sc.plan.N if args.N is None else args.N)
    sensors = sc.sensors
    if args.sensors is not None:
        sensors = SensorSet.parse(args.sensors)
        sensors.validate(sc.network.n)
    noise = sc.noise if args.Ev is None else args.Ev
    if noise < 0:
        raise CLIError(f"--Ev must be >= 0, got {noise}")
    return replace(sc, plan=plan, sensors=sensors, noise=noise)


def initial_state(sc: Scenario, seed: int) -> np.ndarray:
    """Scenario ``x0`` if given, else a seeded standard normal draw."""
    if sc.x0 is not None:
        return sc.x0
    return np.random.default_rng([seed, 1]).standard_normal(sc.network.n)


def simulate_scenario(sc: Scenario, seed: int = 0, switch_to: VariationSpec | None = None):
    """Samples from the nominal model, or from ``switch_to`` over the whole window."""
    model = sc.network
    if switch_to is not None:
        switch_to.validate(model)
        model = apply_variation(model, switch_to)
    e = spectral_decompose(model.to_dense())
    return simulate_samples(e, initial_state(sc, seed), sc.sensors, sc.plan, sc.noise, seed)


def run_detection(sc: Scenario, batch) -> list[dict]:
    """Classify ``batch`` against every variation of the scenario."""
    if tuple(batch.sensors.measured) != tuple(sc.sensors.measured):
        raise CLIError(f"samples use sensors {batch.sensors}, scenario uses {sc.sensors}")
    e = spectral_decompose(sc.network.to_dense())
    o_nom = observability_matrix(e, sc.sensors, batch.plan)
    reports = []
    for spec in sc.variations:
        ebar = spectral_decompose(apply_variation(sc.network, spec).to_dense())
        ok = kalman_bertram_check(np.concatenate([e.eigenvalues, ebar.eigenvalues]), batch.plan.T)
        o_mod = observability_matrix(ebar, sc.sensors, batch.plan)
        rep = detect(batch, o_nom, o_mod, batch.energy, ok)
        reports.append({"variation": str(spec), **rep.as_dict()})
    return reports


def cmd_simulate(args, out) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    switch = VariationSpec.parse(args.switch_to) if args.switch_to else None
    batch = simulate_scenario(sc, args.seed, switch)
    text = samples_to_json(batch) if args.json else samples_to_csv(batch)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def cmd_detect(args, out) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    if not sc.variations:
        raise CLIError("scenario lists no variations to test")
    batch = load_samples(args.samples, sc)
    if args.Ev is not None:
        batch = replace(batch, energy=args.Ev)
    reports = run_detection(sc, batch)
    inconclusive = any(r["verdict"] == Verdict.INCONCLUSIVE.value for r in reports)
    if args.json:
        print(dump_report({"command": "detect", "plan": {"t0": batch.plan.t0, "T": batch.plan.T,
                                                         "N": batch.plan.N},
                           "sensors": list(batch.sensors.measured), "reports": reports},
                          _tolerances()), file=out)
    else:
        for r in reports:
            flags = ("" if r["sampling_ok"] else "  [sampling check failed]") + \
                    ("  [marginal]" if r["marginal"] else "")
            print(f"{r['variation']}: pi = {r['pi']:.6g}  pi_bar = {r['pi_bar']:.6g}  "
                  f"E_v = {r['E_v']:.6g}  -> {r['verdict']}{flags}", file=out)
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


# --- path-demo ----------------------------------------------------------------

def cmd_path_demo(args, out) -> int:
    if args.n_max < 2:
        raise CLIError(f"--n-max must be >= 2, got {args.n_max}")
    rows = solutions_table(args.n_max)
    if args.json:
        print(dump_report({"command": "path-demo", "n_max": args.n_max,
                           "columns": ["k", "i", "n", "m"], "rows": rows}), file=out)
    else:
        print(f"{'k':>4} {'i':>4} {'n':>4} {'m':>4}", file=out)
        for k, i, n, m in rows:
            print(f"{k:>4} {i:>4} {n:>4} {m:>4}", file=out)
    return EXIT_OK


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topodetect",
                                description="Detectability of link and node removals in networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="indiscernible states for each variation")
    a.add_argument("--graph", required=True, help="graph JSON file")
    a.add_argument("--variation", action="append", metavar="KIND:I[,J]",
                   help="variation to analyse (repeatable; default: all applicable)")
    a.add_argument("--sensors", help="also check output discernibility for these nodes, e.g. 1,3")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sensors", help="smallest output-discernible sensor set")
    s.add_argument("--graph", required=True)
    s.add_argument("--variation", required=True, metavar="KIND:I[,J]")
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--restrict", help="only require visibility of modes supported on these nodes")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_sensors)

    for name, func, hlp in (("simulate", cmd_simulate, "sample outputs of a scenario"),
                            ("detect", cmd_detect, "classify samples against each variation")):
        c = sub.add_parser(name, help=hlp)
        c.add_argument("scenario", help="scenario JSON file")
        if name == "detect":
            c.add_argument("samples", help="samples file (.csv or .json)")
        else:
            c.add_argument("--seed", type=int, default=0)
            c.add_argument("--switch-to", metavar="KIND:I[,J]",
                           help="generate data with this variation applied over the whole window")
            c.add_argument("-o", "--output", help="write samples here instead of stdout")
        c.add_argument("--T", type=float)
        c.add_argument("--N", type=int)
        c.add_argument("--t0", type=float)
        c.add_argument("--Ev", type=float, help="noise energy")
        c.add_argument("--sensors")
        c.add_argument("--json", action="store_true")
        c.set_defaults(func=func)

    d = sub.add_parser("path-demo", help="hidden modes of path graphs")
    d.add_argument("--n-max", type=int, default=10)
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_path_demo)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except FileNotFoundError as exc:
        msg = f"file not found: {exc.filename}"
    except (CLIError, FormatError, ValueError) as exc:
        msg = str(exc)
    print(f"topodetect {args.command}: error: {msg}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
