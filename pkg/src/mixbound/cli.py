"""Command-line entry point: ``mixbound analyze|certify|bound|generate``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

from . import bounds
from ._backend import BACKENDS
from .bounds import BoundDomainError
from .chains import ChainSpecError, dump_chain_spec, generate_chain, parse_chain_spec, parse_family
from .kernel import KernelError, mixing_time, stationary_distribution
from .montecarlo import CertifyConfig, certify, summarize
from .poisson import (
    asymptotic_variance_poisson,
    asymptotic_variance_series,
    poisson_sup_cap,
    solve_poisson_direct,
)
from .report import ReportRow, to_csv, to_json, write_atomic

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
SEED_ENV = "MIXBOUND_SEED"


class UsageError(Exception):
    pass


def default_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0


def parse_delta(text: str) -> float:
    t = text.strip().replace(" ", "")
    if t in ("e^-2", "e-2", "exp(-2)"):
        return math.exp(-2.0)
    return float(t)


def _list(conv):
    def parse(text: str):
        try:
            return [conv(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def load_models(args) -> list:
    models = [parse_chain_spec(p) for p in (args.spec or [])]
    for text in args.chain or []:
        family, params = parse_family(text)
        models.append(generate_chain(family, params, args.seed))
    if not models:
        raise UsageError("give at least one --spec FILE or --chain FAMILY")
    return models


def cmd_analyze(args) -> int:
    args.seed = default_seed(args.seed)
    reports = []
    for model in load_models(args):
        prof = mixing_time(model.kernel, args.horizon)
        if prof.tau is None:
            print(f"{model.name}: no mixing time within {args.horizon} steps "
                  f"(Delta(Q^{args.horizon}) > 1/4)", file=sys.stderr)
            return EXIT_USAGE
        pi = stationary_distribution(model.kernel)
        sol = solve_poisson_direct(model.kernel, model.f, pi)
        reports.append({
            "chain": model.name,
            "states": model.kernel.size,
            "tau": prof.tau,
            "pi": pi.tolist(),
            "sigma2_series": asymptotic_variance_series(model.kernel, model.f, pi, tau=prof.tau),
            "sigma2_poisson": asymptotic_variance_poisson(model.f, sol.g, pi),
            "g_sup": sol.sup_norm,
            "g_sup_cap": poisson_sup_cap(prof.tau, model.f),
            "poisson_residual": sol.residual,
            "dobrushin": prof.deltas.tolist(),
        })
    text = json.dumps(reports if len(reports) > 1 else reports[0], indent=2) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_certify(args) -> int:
    args.seed = default_seed(args.seed)
    try:
        config = CertifyConfig(
            p_list=args.p_list, n_list=args.n_list, replications=args.reps, seed=args.seed,
            delta_list=args.delta_list, tail_replications=args.tail_reps,
            start_state=None if args.start_state < 0 else args.start_state,
            include_auxiliary=not args.no_auxiliary, workers=args.workers, backend=args.backend,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows: List[ReportRow] = []
    notes = []
    for model in load_models(args):
        if config.start_state is not None and config.start_state >= model.kernel.size:
            raise UsageError(f"--start-state {config.start_state} outside {model.name}")
        summary = summarize(model)
        for v in certify(model, config, summary):
            rows.append(ReportRow.from_verdict(model.name, summary.tau, summary.sigma, v))
        small = [n for n in config.n_list if n < summary.tau]
        notes.append({"chain": model.name, "tau": summary.tau, "sigma": summary.sigma,
                      "n_below_tau": small})
    csv_text = to_csv(rows)
    if args.out:
        write_atomic(args.out, csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.json:
        extra = {"seed": config.seed, "replications": config.replications, "chains": notes,
                 "constants": bounds.CONSTANTS.as_dict()}
        write_atomic(args.json, to_json(rows, extra))
    failed = [r for r in rows if not r.holds]
    for r in failed:
        print(f"VIOLATION {r.chain} {r.bound} p={r.p} n={r.n}: bound {r.bound_value:.6g} "
              f"< empirical {r.empirical_value:.6g}", file=sys.stderr)
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_bound(args) -> int:
    out = {}
    ros = bounds.rosenthal_bound(args.p, args.n, args.tau, args.sigma, not args.xi)
    out["rosenthal"] = {"total": ros.total, "terms": ros.terms}
    aux = bounds.auxiliary_rosenthal_bound(args.p, args.n, args.tau)
    out["rosenthal_auxiliary"] = {"total": aux.total, "terms": aux.terms}
    out["variance_crude"] = bounds.crude_variance_bound(args.n, args.tau)
    out["variance_poisson"] = bounds.poisson_variance_bound(args.n, args.tau, args.sigma)
    out["coupling_moment"] = bounds.coupling_moment_bound(args.p, args.tau)
    thresholds = []
    for d in args.delta_list or []:
        b = bounds.bernstein_threshold(d, args.n, args.tau, args.sigma)
        thresholds.append({"delta": d, "literal": b.literal, "conservative": b.conservative})
    out["bernstein"] = thresholds
    out["n_below_tau"] = args.n < args.tau
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_generate(args) -> int:
    seed = default_seed(args.seed)
    family, params = parse_family(args.family)
    model = generate_chain(family, params, seed)
    if args.name:
        model.name = args.name
    text = dump_chain_spec(model)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_chain_args(p):
    p.add_argument("--spec", action="append", metavar="FILE", help="chain spec file (repeatable)")
    p.add_argument("--chain", action="append", metavar="FAMILY",
                   help="built-in family, e.g. two_state:p=0.3,q=0.3 (repeatable)")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default: ${SEED_ENV} or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixbound", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="exact chain quantities")
    _add_chain_args(p)
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="Monte-Carlo certification of the bounds")
    _add_chain_args(p)
    p.add_argument("--p-list", type=_list(float), default=[2.0, 4.0, 8.0])
    p.add_argument("--n-list", type=_list(int), default=[10, 100, 1000])
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--tail-reps", type=int, default=None)
    p.add_argument("--delta-list", type=_list(parse_delta), default=[math.exp(-2.0), 0.01])
    p.add_argument("--start-state", type=int, default=0,
                   help="also certify from this point mass (-1 disables)")
    p.add_argument("--no-auxiliary", action="store_true", help="only the main moment and tail bounds")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=sorted(BACKENDS), default=None)
    p.add_argument("--out", help="CSV report path (default stdout)")
    p.add_argument("--json", help="structured report path")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bound", help="evaluate the closed-form bounds")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--xi", action="store_true", help="arbitrary initial law")
    p.add_argument("--delta-list", type=_list(parse_delta), default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("generate", help="write a spec file for a built-in family")
    p.add_argument("family", help="e.g. random_doeblin:size=10,epsilon=0.5")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--name")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ChainSpecError, KernelError, BoundDomainError, ValueError) as exc:
        print(f"mixbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
