"""Command-line front end.

Subcommands: ``solve`` (one barycenter), ``mmot`` (multi-marginal plan),
``verify`` (lemma-check suites as CSV), ``experiment`` (consistency /
absolute-continuity ladders as CSV).  JSON in, JSON/CSV out; report paths
also render figures next to the delimited files.  No interactive mode.

Exit codes: 0 ok, 1 spec/input error, 2 numerical non-convergence,
3 verification failure.
"""

import argparse
import os
import sys

import numpy as np

from .barycenter import Configuration, solve_barycenter
from .diagnostics import abs_continuity_experiment, consistency_experiment
from .errors import HbaryError, NonConvergence, SpecError
from .specio import (
    dump_json,
    load_json,
    parse_chart,
    parse_density_spec,
    parse_measure,
    parse_profile,
    write_csv,
)
from .tolerances import DEFAULT as TOL
from .transport import solve_mmot
from .verify import run_suite

EXIT_OK = 0
EXIT_SPEC = 1
EXIT_NONCONVERGED = 2
EXIT_VERIFY = 3


def _common_flags(sub):
    sub.add_argument("--spec", required=False, help="JSON spec file")
    sub.add_argument("--seed", type=int, default=0, help="instance seed")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--tol-scale", type=float, default=1.0, help="tolerance multiplier")
    sub.add_argument(
        "--allow-counterexample",
        action="store_true",
        help="permit the quarantined h(t)=t^2+t profile",
    )
    sub.add_argument("--workers", type=int, default=os.cpu_count(), help="parallel workers")


def build_parser():
    ap = argparse.ArgumentParser(prog="bary", description=__doc__)
    subs = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "mmot", "verify", "experiment"):
        sub = subs.add_parser(name)
        _common_flags(sub)
        if name == "verify":
            sub.add_argument(
                "--suite",
                default="all",
                choices=["all", "geometry", "transport", "invmap", "counterexample"],
            )
    return ap


def _ensure_out(args):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_solve(args) -> int:
    spec = load_json(args.spec)
    chart = parse_chart(spec["manifold"])
    profile = parse_profile(spec["profile"], allow_counterexample=args.allow_counterexample)
    config = Configuration(
        chart=chart,
        profile=profile,
        points=np.asarray(spec["points"], dtype=float),
        weights=np.asarray(spec["weights"], dtype=float),
    )
    code = EXIT_OK
    try:
        sol = solve_barycenter(config, allow_nonstandard=args.allow_counterexample)
    except NonConvergence as exc:
        sol = exc.best
        tol = TOL.grad_residual_sphere if chart.kind == "sphere" else TOL.grad_residual
        if sol.grad_residual > tol * args.tol_scale:
            code = EXIT_NONCONVERGED
    payload = {
        "point": [float(v) for v in np.atleast_1d(sol.point)],
        "value": sol.value,
        "grad_residual": sol.grad_residual,
        # infinite margins (flat charts have no cut locus) encode as null
        "cut_margins": [float(m) if np.isfinite(m) else None for m in sol.cut_margins],
        "alternates": [[float(v) for v in np.atleast_1d(a)] for a in sol.alternates],
        "converged": code == EXIT_OK,
    }
    text = dump_json(payload)
    sys.stdout.write(text)
    out = _ensure_out(args)
    if out:
        dump_json(payload, os.path.join(out, "solution.json"))
    return code


def cmd_mmot(args) -> int:
    spec = load_json(args.spec)
    chart = parse_chart(spec["manifold"])
    profile = parse_profile(spec["profile"], allow_counterexample=args.allow_counterexample)
    base_dir = os.path.dirname(os.path.abspath(args.spec))
    measures = [parse_measure(m, chart, base_dir) for m in spec["marginals"]]
    weights = np.asarray(spec["weights"], dtype=float)
    plan = solve_mmot(measures, weights, profile, allow_nonstandard=args.allow_counterexample)
    payload = plan.to_json_dict()
    payload["marginal_certificates"] = [float(v) for v in plan.marginal_certificates()]
    text = dump_json(payload)
    sys.stdout.write(text)
    out = _ensure_out(args)
    if out:
        dump_json(payload, os.path.join(out, "plan.json"))
    return EXIT_OK


VERIFY_HEADER = ["check", "instances", "max_violation", "verdict"]
LADDER_HEADER = ["level", "atoms", "bl_to_finest", "epsilon", "delta", "mass_at_delta", "verdict"]


def cmd_verify(args) -> int:
    rows = run_suite(args.suite, seed=args.seed, tol_scale=args.tol_scale, workers=args.workers)
    text = write_csv(rows, VERIFY_HEADER)
    sys.stdout.write(text)
    out = _ensure_out(args)
    if out:
        write_csv(rows, VERIFY_HEADER, os.path.join(out, f"verify_{args.suite}.csv"))
        from .plots import save_verify_figure

        save_verify_figure(rows, os.path.join(out, f"verify_{args.suite}.png"))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_VERIFY


def cmd_experiment(args) -> int:
    spec = load_json(args.spec)
    chart = parse_chart(spec["manifold"])
    profile = parse_profile(spec["profile"], allow_counterexample=args.allow_counterexample)
    weights = np.asarray(spec["weights"], dtype=float)
    specs = [parse_density_spec(d) for d in spec["marginals"]]
    command = spec.get("command", {})
    name = command.get("name")
    seed = int(spec.get("seed", args.seed))
    out = _ensure_out(args)

    if name == "consistency":
        ref = command.get("reference")
        ladder = consistency_experiment(
            chart,
            specs,
            weights,
            profile,
            levels=int(command.get("levels", 4)),
            reference_spec=parse_density_spec(ref) if ref else None,
            seed=seed,
        )
        rows = ladder.rows()
        if ladder.bl_to_reference is not None:
            rows.append(
                {
                    "level": "reference",
                    "atoms": "",
                    "bl_to_finest": ladder.bl_to_reference,
                    "epsilon": "",
                    "delta": "",
                    "mass_at_delta": "",
                    "verdict": "",
                }
            )
        text = write_csv(rows, LADDER_HEADER)
        sys.stdout.write(text)
        if out:
            write_csv(rows, LADDER_HEADER, os.path.join(out, "consistency.csv"))
            from .plots import save_consistency_figure

            save_consistency_figure(ladder, os.path.join(out, "consistency.png"))
        return EXIT_OK

    if name in ("case1", "case2"):
        case = 1 if name == "case1" else 2
        ladder = abs_continuity_experiment(
            case,
            chart,
            profile,
            weights,
            specs,
            levels=int(command.get("levels", 4)),
            k_max=int(command.get("k_max", 4)),
            alpha=float(command.get("alpha", 0.05)),
            seed=seed,
        )
        rows = ladder.rows()
        text = write_csv(rows, LADDER_HEADER)
        sys.stdout.write(text)
        if out:
            write_csv(rows, LADDER_HEADER, os.path.join(out, f"{name}.csv"))
            from .plots import save_case_figure

            save_case_figure(ladder, os.path.join(out, f"{name}.png"))
        ok = all(v.passed for v in ladder.final_verdicts())
        if case == 2:
            ok = ok and all(not v.passed for v in ladder.control)
        return EXIT_OK if ok else EXIT_VERIFY

    raise SpecError(f"unknown experiment command {name!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "solve": cmd_solve,
        "mmot": cmd_mmot,
        "verify": cmd_verify,
        "experiment": cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except HbaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (KeyError, ValueError, OSError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
