"""Command-line entry point: ``ebrl <subcommand> [options]``."""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import evaluate as ev
from .gibbs import SamplerConfig, run_sampler
from .io import (
    RunConfig, load_input, read_partition, read_sample_log, schema_text, write_csv,
    write_partition, write_sample_log,
)
from .klbounds import run_bound_suite
from .linkage import pairwise_match_probs, shared_mpmms_linkage
from .model import Hyperparams, IngestionError
from .strdist import build_field_tables
from .synthetic import GenConfig, generate_synthetic


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _hp(args, n_pop=None, a=None, b=None, c=None, distance=None) -> Hyperparams:
    return Hyperparams(
        a=args.a if a is None else a,
        b=args.b if b is None else b,
        c=args.c if c is None else c,
        n_pop=args.npop if n_pop is None else n_pop,
        distance=args.distance if distance is None else distance,
        normalizer=args.normalizer,
    )


def cmd_run(args) -> int:
    hp = _hp(args)
    cfg = RunConfig(Path(args.input), Path(args.schema), hp, SamplerConfig(args.iters, args.seed, args.thin),
                    Path(args.out), args.truth_col)
    dataset = load_input(cfg)
    print(json.dumps(dataset.describe()), file=sys.stderr)
    tables = build_field_tables(dataset, hp)
    log = run_sampler(dataset, tables, hp, cfg.sampler)
    write_sample_log(log, cfg.out)
    return 0


def cmd_estimate(args) -> int:
    log = read_sample_log(args.input)
    part = shared_mpmms_linkage(log)
    write_partition(part, args.out)
    return 0


def cmd_evaluate(args) -> int:
    est = read_partition(args.input)
    cfg = RunConfig(Path(args.data), Path(args.schema), truth_col=args.truth_col)
    truth = ev.truth_partition(load_input(cfg))
    c = ev.confusion_counts(est, truth)
    _emit({"cl": c.cl, "fn": c.fn, "fp": c.fp, "cnl": c.cnl, "fnr": ev.fnr(c), "fdr": ev.fdr(c)}, args.out)
    return 0


def cmd_pairs(args) -> int:
    probs = pairwise_match_probs(read_sample_log(args.input))
    rows = [{"a": a, "b": b, "prob": repr(p)} for (a, b), p in sorted(probs.items())]
    write_csv(args.out, ["a", "b", "prob"], rows)
    return 0


def cmd_summary(args) -> int:
    s = ev.n_distinct_summary(read_sample_log(args.input))
    if args.hist:
        write_csv(args.hist, ["n_distinct", "density"],
                  [{"n_distinct": int(v), "density": repr(float(d))} for v, d in zip(s.values, s.density)])
    _emit({"mean": s.mean, "sd": s.sd}, args.out)
    return 0


def cmd_diag(args) -> int:
    log = read_sample_log(args.input)
    traces = {"n_distinct": log.n_distinct}
    for m, name in ((1, "singles"), (2, "doubles"), (3, "triples")):
        traces[name] = ev.multiplicity_trace(log, m)
    report = {}
    for name, x in traces.items():
        try:
            g = ev.geweke_z(x)
        except ValueError as exc:  # series too short for the windows
            report[name] = {"error": str(exc)}
            continue
        report[name] = {"geweke_z": g.z, "zero_variance": g.zero_variance}
    if args.traces:
        rows = [{"sweep": s, **{k: int(v[s]) for k, v in traces.items()}} for s in range(len(log.n_distinct))]
        write_csv(args.traces, ["sweep", *traces], rows)
    _emit(report, args.out)
    return 0


def _sweep_cell(job):
    input_, schema, truth_col, a, b, c, n_pop, distance, normalizer, iters, seed = job
    hp = Hyperparams(a=a, b=b, c=c, n_pop=n_pop, distance=distance, normalizer=normalizer)
    dataset = load_input(RunConfig(Path(input_), Path(schema), hp, truth_col=truth_col))
    log = run_sampler(dataset, build_field_tables(dataset, hp), hp,
                      SamplerConfig(iters, seed, record_lambda=False, record_beta=False))
    s = ev.n_distinct_summary(log)
    return {"a": a, "b": b, "c": c, "npop": hp.population(dataset.n_records), "distance": distance,
            "mean": repr(s.mean), "sd": repr(s.sd)}


def cmd_sweep(args) -> int:
    if len(args.a) != len(args.b):
        raise SystemExit("sweep: --a and --b take the same number of values; they are paired")
    jobs = [
        (args.input, args.schema, args.truth_col, a, b, c, n, d, args.normalizer, args.iters, args.seed)
        for (a, b), c, n, d in itertools.product(zip(args.a, args.b), args.c, args.npop, args.distance)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    write_csv(args.out, ["a", "b", "c", "npop", "distance", "mean", "sd"], rows)
    return 0


def cmd_gen(args) -> int:
    cfg = GenConfig(n_records=args.n_records, n_duplicates=args.n_duplicates, string_error=args.string_error,
                    cat_error=args.cat_error, seed=args.seed, n_lists=args.lists)
    syn = generate_synthetic(cfg)
    out = Path(args.out)
    write_csv(out, syn.header, syn.rows)
    schema_path = Path(args.schema) if args.schema else out.with_suffix(".schema.toml")
    schema_path.write_text(schema_text(syn.schema), encoding="utf-8")
    return 0


def cmd_klcheck(args) -> int:
    results = run_bound_suite(args.draws, args.seed)
    doc = {
        "all_passed": all(r.passed for r in results),
        "checks": {r.name: {"passed": r.passed, "worst_margin": r.worst_margin, "cases": r.cases, **r.detail}
                   for r in results},
    }
    _emit(doc, args.out)
    return 0 if doc["all_passed"] else 1


def _add_hp(p, multi=False):
    nargs = "+" if multi else None
    p.add_argument("--a", type=float, nargs=nargs, default=[1.0] if multi else 1.0, help="Beta prior shape a")
    p.add_argument("--b", type=float, nargs=nargs, default=[99.0] if multi else 99.0, help="Beta prior shape b")
    p.add_argument("--c", type=float, nargs=nargs, default=[1.0] if multi else 1.0, help="string steepness c")
    p.add_argument("--npop", type=int, nargs=nargs, default=[None] if multi else None,
                   help="latent population size (default: number of records)")
    p.add_argument("--distance", choices=("edit", "jw"), nargs=nargs, default=["edit"] if multi else "edit")
    p.add_argument("--normalizer", choices=("weighted", "unweighted"), default="weighted",
                   help="string distortion constant: alpha-weighted (proper pmf) or unweighted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebrl", description="Empirical Bayes record linkage.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the Gibbs sampler and write a sample log")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True, help="sample log directory")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--truth-col")
    _add_hp(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("estimate", help="shared-MPMMS partition from a sample log")
    p.add_argument("--input", required=True, help="sample log directory")
    p.add_argument("--out", required=True, help="partition file (.csv or .json)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="FNR/FDR of a partition against the truth column")
    p.add_argument("--input", required=True, help="partition file")
    p.add_argument("--data", required=True, help="CSV with the truth column")
    p.add_argument("--schema", required=True)
    p.add_argument("--truth-col")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pairs", help="posterior match probability of every co-assigned pair")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("summary", help="posterior mean/sd and histogram of the distinct-entity count")
    p.add_argument("--input", required=True)
    p.add_argument("--hist", help="CSV for the integer-binned density")
    p.add_argument("--out")
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("diag", help="Geweke z-scores and multiplicity traces")
    p.add_argument("--input", required=True)
    p.add_argument("--traces", help="CSV for the per-sweep traces")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("sweep", help="grid of runs over hyperparameters")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--truth-col")
    _add_hp(p, multi=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a synthetic CSV and its schema")
    p.add_argument("--out", required=True)
    p.add_argument("--schema", help="schema path (default: <out>.schema.toml)")
    p.add_argument("--n-records", type=int, default=500)
    p.add_argument("--n-duplicates", type=int, default=50)
    p.add_argument("--string-error", type=float, default=1.0)
    p.add_argument("--cat-error", type=float, default=0.05)
    p.add_argument("--lists", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("klcheck", help="numerical check of the divergence bounds")
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_klcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IngestionError, ValueError, OSError) as exc:
        print(f"ebrl {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
