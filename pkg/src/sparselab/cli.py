"""Command-line entry point: experiment configuration, corpus execution,
report emission, and reproducibility plumbing.

Every output file embeds the config hash, the seed list and the artifact
version; reruns with an identical config are byte-identical. Exit codes:
0 all assertions pass, 1 an assertion failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import hashlib
import json
import os
import sys

from . import __version__
from .corpus import CorpusSpec, iter_instances, standard_corpus
from .dyadic import Cube, DyadicGrid
from .orlicz import (CphiDivergenceError, UnboundedComplementaryError, c_phi,
                     luxemburg_norm, parse_young)
from .search import SearchConfig, WitnessViolation, hill_climb, mw_probe, \
    random_instance, trivial_instance
from .verify import (MajorantCache, VerifySummary, verify_ainfty_lemma,
                     verify_apbound_lemma, verify_fefferman_stein,
                     verify_lemma_basic, verify_main_theorem,
                     verify_orlicz_lemma, verify_sharp_maximal,
                     verify_square_theorem, spike_sweep)
from .weights import weight_from_spec

__all__ = ["main", "emit_report", "format_float", "dumps_stable"]

ENV_OUT_DIR = "SPARSELAB_OUTDIR"


# ---------------------------------------------------------------------------
# Stable serialization: floats at 17 significant digits, keys sorted
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps_stable(obj) -> str:
    """JSON text with deterministic ordering and fixed float formatting."""
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ",".join(f"{json.dumps(str(k))}:{dumps_stable(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps_stable(v) for v in obj) + "]"
    return json.dumps(str(obj))


def config_hash(obj) -> str:
    return hashlib.sha256(dumps_stable(obj).encode()).hexdigest()[:16]


def emit_report(summaries, out_dir: str, run_name: str, meta: dict) -> dict:
    """Write JSON-lines reports plus a CSV summary; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    jsonl_path = os.path.join(out_dir, f"{run_name}.jsonl")
    csv_path = os.path.join(out_dir, f"{run_name}.csv")
    with open(jsonl_path, "w") as fh:
        fh.write(dumps_stable({"meta": meta}) + "\n")
        for summary in summaries:
            for report in summary.reports:
                row = report.to_dict()
                row.pop("runtime", None)   # wall clock would break byte-stable reruns
                fh.write(dumps_stable(row) + "\n")
    with open(csv_path, "w") as fh:
        fh.write(f"# config_hash={meta['config_hash']} version={meta['version']} "
                 f"seeds={','.join(str(s) for s in meta.get('seeds', []))}\n")
        fh.write("inequality,depth,max_ratio,fitted_constant\n")
        for summary in summaries:
            for row in summary.summary_rows():
                fh.write(f"{row['inequality']},{row['depth']},"
                         f"{format_float(row['max_ratio'])},"
                         f"{format_float(row['fitted_constant'])}\n")
    return {"jsonl": jsonl_path, "csv": csv_path}


# ---------------------------------------------------------------------------
# Config file + corpus assembly
# ---------------------------------------------------------------------------

def _split_list(text: str) -> list:
    items = []
    for chunk in text.replace(";", "\n").splitlines():
        chunk = chunk.strip()
        if chunk:
            items.append(chunk)
    return items


def parse_seeds(text: str) -> list:
    """Seed lists: "0..4" (inclusive range) or "1,5,7"."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")
    out: dict = {}
    for section in parser.sections():
        out[section] = dict(parser.items(section))
    return out


def build_corpus(args, config: dict) -> CorpusSpec:
    corpus_cfg = config.get("corpus", {})
    depths = None
    if corpus_cfg.get("depths"):
        depths = [int(x) for x in corpus_cfg["depths"].split(",")]
    if getattr(args, "depths", None):
        depths = [int(x) for x in args.depths.split(",")]
    seeds = None
    if corpus_cfg.get("seeds"):
        seeds = parse_seeds(corpus_cfg["seeds"])
    if getattr(args, "seeds", None):
        seeds = parse_seeds(args.seeds)
    base = standard_corpus(depths=tuple(depths) if depths else (6, 8, 10, 12))
    weight_specs = dict(base.weight_specs)
    family_specs = dict(base.family_specs)
    function_specs = base.function_specs
    if corpus_cfg.get("weights"):
        fixed = tuple(_split_list(corpus_cfg["weights"]))
        weight_specs = {d: fixed for d in base.depths}
    if getattr(args, "weight", None):
        weight_specs = {d: tuple(args.weight) for d in base.depths}
    if corpus_cfg.get("functions"):
        function_specs = tuple(_split_list(corpus_cfg["functions"]))
    if getattr(args, "function", None):
        function_specs = tuple(args.function)
    if corpus_cfg.get("families"):
        fixed = tuple(_split_list(corpus_cfg["families"]))
        family_specs = {d: fixed for d in base.depths}
    if getattr(args, "family_strategy", None):
        family_specs = {d: tuple(args.family_strategy) for d in base.depths}
    return CorpusSpec(name=base.name, depths=base.depths,
                      weight_specs=weight_specs,
                      function_specs=function_specs,
                      family_specs=family_specs,
                      seeds=tuple(seeds) if seeds else base.seeds)


# ---------------------------------------------------------------------------
# Parallel corpus execution
# ---------------------------------------------------------------------------

_VERIFIER_KINDS = ("weak", "lemma", "fs", "sharp", "square", "ainfty", "apbound")


def _run_chunk(task: tuple) -> VerifySummary:
    kind, corpus_dict, chunk, n_chunks, kwargs = task
    spec = CorpusSpec(name=corpus_dict["name"],
                      depths=tuple(corpus_dict["depths"]),
                      weight_specs={int(d): tuple(v) for d, v in
                                    corpus_dict["weight_specs"].items()},
                      function_specs=tuple(corpus_dict["function_specs"]),
                      family_specs={int(d): tuple(v) for d, v in
                                    corpus_dict["family_specs"].items()},
                      seeds=tuple(corpus_dict["seeds"]))
    instances = list(iter_instances(spec))[chunk::n_chunks]
    return _dispatch(kind, instances, kwargs)


def _dispatch(kind: str, instances, kwargs: dict) -> VerifySummary:
    if kind == "weak":
        return verify_main_theorem(parse_young(kwargs["phi"]), instances,
                                   bound=kwargs.get("bound"))
    if kind == "lemma":
        return verify_lemma_basic(parse_young(kwargs["phi"]), instances,
                                  bound=kwargs.get("bound"))
    if kind == "fs":
        return verify_fefferman_stein(instances, bound=kwargs.get("bound"))
    if kind == "sharp":
        return verify_sharp_maximal(kwargs["p"], instances,
                                    bound=kwargs.get("bound"))
    if kind == "square":
        return verify_square_theorem(kwargs["p"], instances,
                                     bound=kwargs.get("bound"))
    if kind == "ainfty":
        return verify_ainfty_lemma(kwargs["m0"], instances, p=kwargs["p"],
                                   rh_c=kwargs.get("rh_c", 4.0),
                                   bound=kwargs.get("bound"))
    if kind == "apbound":
        return verify_apbound_lemma(kwargs["p"], instances,
                                    bound=kwargs.get("bound"))
    raise ValueError(f"unknown verifier kind {kind!r}")


def _merge_summaries(parts) -> VerifySummary:
    parts = list(parts)
    first = parts[0]
    per_depth: dict = {}
    reports = []
    passed = True
    fitted = 0.0
    details = dict(first.details)
    for part in parts:
        for d, v in part.per_depth.items():
            per_depth[d] = max(per_depth.get(d, 0.0), v)
        reports.extend(part.reports)
        passed = passed and part.passed
        fitted = max(fitted, part.fitted_constant)
        for key in ("vacuous_instances", "remaining_violations",
                    "holder_violations", "cs_violations", "cell_violations",
                    "nonvacuous_beta"):
            if key in part.details and key in details and part is not first:
                details[key] += part.details[key]
    return VerifySummary(inequality=first.inequality, passed=passed,
                         fitted_constant=fitted, per_depth=per_depth,
                         reports=reports, details=details)


def run_verifier(kind: str, spec: CorpusSpec, jobs: int, kwargs: dict
                 ) -> VerifySummary:
    if jobs <= 1:
        return _dispatch(kind, list(iter_instances(spec)), kwargs)
    tasks = [(kind, spec.config_dict(), i, jobs, kwargs) for i in range(jobs)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, tasks))
    return _merge_summaries(parts)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _add_corpus_flags(sub):
    sub.add_argument("--depths", help="comma list, e.g. 6,8,10,12")
    sub.add_argument("--seeds", help="range a..b or comma list")
    sub.add_argument("--weight", action="append",
                     help="weight generator spec (repeatable)")
    sub.add_argument("--function", action="append",
                     help="function generator spec (repeatable)")
    sub.add_argument("--family-strategy", action="append",
                     help="sparse family strategy spec (repeatable)")
    sub.add_argument("--bound", type=float,
                     help="recorded regression bound to assert against")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparselab",
        description="Dyadic laboratory for sparse operators, Orlicz maximal "
                    "functions, and weighted weak-type inequalities.")
    parser.add_argument("--config", help="INI config file; flags override it")
    parser.add_argument("--out-dir", help=f"output directory (or ${ENV_OUT_DIR})")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for corpus runs")
    # the same flags are accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering values parsed at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=lambda **kw: argparse.ArgumentParser(
                                     parents=[common], **kw))

    s = subs.add_parser("orlicz-norm", help="Luxemburg norm of a generated "
                                            "weight on one cube")
    s.add_argument("--family", required=True, help="Young family spec")
    s.add_argument("--weight", required=True, help="weight generator spec")
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cube", default="0,0", help="level,index (default root)")

    s = subs.add_parser("cphi", help="series constant of a Young family")
    s.add_argument("--family", required=True)
    s.add_argument("--surrogate", action="store_true",
                   help="replace psi^{-1} by the logarithmic part")
    s.add_argument("--rtol", type=float, default=1e-9)

    s = subs.add_parser("verify-weak", help="weak (1,1) theorem over the corpus")
    s.add_argument("--family", action="append", required=True,
                   help="Young family spec (repeatable)")
    _add_corpus_flags(s)

    s = subs.add_parser("verify-lemma", help="band lemma over the corpus")
    s.add_argument("--family", default="power:r=2")
    _add_corpus_flags(s)

    s = subs.add_parser("verify-fs", help="Fefferman-Stein plus the sharp "
                                          "maximal estimate")
    s.add_argument("--p", type=float, default=2.0)
    _add_corpus_flags(s)

    s = subs.add_parser("verify-square", help="square function weak-type bound")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--spike-sweep", action="store_true",
                   help="also sweep the spike-weight family at depth 14")
    _add_corpus_flags(s)

    s = subs.add_parser("verify-ainfty", help="large-band tail lemma")
    s.add_argument("--m0", type=int, default=1)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--rh-c", type=float, default=4.0)
    _add_corpus_flags(s)

    s = subs.add_parser("verify-apbound", help="band norm lemma (p >= 2)")
    s.add_argument("--p", type=float, default=2.0)
    _add_corpus_flags(s)

    s = subs.add_parser("search", help="hill-climb one objective")
    s.add_argument("--objective", default="ratioVsPlainM",
                   choices=["ratioVsOrlicz", "ratioVsPlainM", "squareRatio"])
    s.add_argument("--phi", default="llog:eps=0.5")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--depth", type=int, default=10)
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--bound", type=float,
                   help="soft theorem bound; crossing it writes a witness")

    s = subs.add_parser("mw-probe", help="plain-M vs Orlicz objective table")
    s.add_argument("--depths", default="6,8,10,12,14")
    s.add_argument("--iters", type=int, default=600)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=4)
    s.add_argument("--phi", default="llog:eps=0.5")
    s.add_argument("--orlicz-bound", type=float,
                   help="hard bound for the Orlicz column (raw ratio)")
    return parser


def _out_dir(args) -> str:
    return args.out_dir or os.environ.get(ENV_OUT_DIR, "reports")


def _meta(args, spec: CorpusSpec | None, extra: dict | None = None) -> dict:
    payload = {"command": args.command, "version": __version__}
    if spec is not None:
        payload["corpus"] = spec.config_dict()
        payload["seeds"] = list(spec.seeds)
    if extra:
        payload.update(extra)
    payload["config_hash"] = config_hash(payload)
    return payload


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        return _run(args, config)
    except WitnessViolation as exc:
        print(f"BOUND VIOLATION: {exc}", file=sys.stderr)
        return 1
    except (CphiDivergenceError, UnboundedComplementaryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _print_summary(summary: VerifySummary) -> None:
    status = "PASS" if summary.passed else "FAIL"
    depths = {d: round(v, 6) for d, v in sorted(summary.per_depth.items())}
    print(f"[{status}] {summary.inequality}: fitted={summary.fitted_constant:.6g} "
          f"drift={summary.drift():.4g} per_depth={depths}")


def _run(args, config: dict) -> int:
    out_dir = _out_dir(args)
    if args.command == "orlicz-norm":
        grid = DyadicGrid(args.depth)
        w = weight_from_spec(grid, args.weight, args.seed)
        phi = parse_young(args.family)
        level, index = (int(x) for x in args.cube.split(","))
        value = luxemburg_norm(w, Cube(level, index), phi)
        print(dumps_stable({"family": phi.spec, "weight": args.weight,
                            "depth": args.depth, "cube": [level, index],
                            "norm": value}))
        return 0

    if args.command == "cphi":
        phi = parse_young(args.family)
        result = c_phi(phi, use_surrogate=args.surrogate, rtol=args.rtol)
        print(dumps_stable(result.to_dict()))
        return 0

    if args.command in ("verify-weak", "verify-lemma", "verify-fs",
                        "verify-square", "verify-ainfty", "verify-apbound"):
        spec = build_corpus(args, config)
        summaries = []
        if args.command == "verify-weak":
            for fam in args.family:
                summaries.append(run_verifier("weak", spec, args.jobs,
                                              {"phi": fam, "bound": args.bound}))
        elif args.command == "verify-lemma":
            summaries.append(run_verifier("lemma", spec, args.jobs,
                                          {"phi": args.family,
                                           "bound": args.bound}))
        elif args.command == "verify-fs":
            summaries.append(run_verifier("fs", spec, args.jobs,
                                          {"bound": args.bound}))
            summaries.append(run_verifier("sharp", spec, args.jobs,
                                          {"p": args.p, "bound": None}))
        elif args.command == "verify-square":
            summaries.append(run_verifier("square", spec, args.jobs,
                                          {"p": args.p, "bound": args.bound}))
            if args.spike_sweep:
                sweep = spike_sweep(args.p)
                print(dumps_stable(sweep))
        elif args.command == "verify-ainfty":
            summaries.append(run_verifier("ainfty", spec, args.jobs,
                                          {"m0": args.m0, "p": args.p,
                                           "rh_c": args.rh_c,
                                           "bound": args.bound}))
        elif args.command == "verify-apbound":
            summaries.append(run_verifier("apbound", spec, args.jobs,
                                          {"p": args.p, "bound": args.bound}))
        meta = _meta(args, spec)
        paths = emit_report(summaries, out_dir, args.command.replace("-", "_"),
                            meta)
        for summary in summaries:
            _print_summary(summary)
        print(f"reports: {paths['jsonl']} {paths['csv']}")
        return 0 if all(s.passed for s in summaries) else 1

    if args.command == "search":
        grid = DyadicGrid(args.depth)
        cfg = SearchConfig(objective=args.objective, phi_spec=args.phi,
                           p=args.p, iters=args.iters, bound=args.bound,
                           witness_dir=out_dir)
        best = None
        for r in range(args.restarts):
            seed = args.seed * 7919 + r
            start = trivial_instance(grid) if r == 0 else random_instance(grid, seed)
            state = hill_climb(cfg, grid, seed, start=start)
            if best is None or state.best_value > best.best_value:
                best = state
        print(dumps_stable({"objective": args.objective,
                            "depth": args.depth, "iters": args.iters,
                            "restarts": args.restarts, "seed": args.seed,
                            "best": best.best_value,
                            "accepted": best.accepted,
                            "instance_digest": best.instance_digest(),
                            "config_hash": cfg.config_hash()}))
        return 0

    if args.command == "mw-probe":
        depths = tuple(int(x) for x in args.depths.split(","))
        probe = mw_probe(depths, iters_per_depth=args.iters, seed=args.seed,
                         phi_spec=args.phi, restarts=args.restarts,
                         orlicz_bound=args.orlicz_bound, witness_dir=out_dir)
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "mw_probe.csv")
        meta = _meta(args, None, {"probe": {k: v for k, v in probe.items()
                                            if k != "rows"}})
        with open(csv_path, "w") as fh:
            fh.write(f"# config_hash={meta['config_hash']} "
                     f"version={meta['version']}\n")
            fh.write("depth,plainM_best,orlicz_best\n")
            for row in probe["rows"]:
                fh.write(f"{row['depth']},{format_float(row['plainM_best'])},"
                         f"{format_float(row['orlicz_best'])}\n")
        print(dumps_stable(probe))
        print(f"table: {csv_path}")
        return 0

    raise ValueError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
