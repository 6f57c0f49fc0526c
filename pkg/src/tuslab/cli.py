"""Command-line entry point: one subcommand per pipeline capability.

Precedence for every setting: CLI flag > config file (--config, key=value
lines) > built-in default. The resolved configuration is echoed into the
output directory for provenance.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline, prep
from .corpus import load_table
from .errors import TusLabError
from .pipeline import METHODS, RunConfig

logger = logging.getLogger(__name__)


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {value!r}")


def _parse_k_list(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad k list {value!r}") from exc


def _add_common(sub: argparse.ArgumentParser, out_required: bool = True) -> None:
    sub.add_argument("--benchmark", help="benchmark root directory")
    sub.add_argument("--out", required=False, help="output directory for artifacts")
    sub.add_argument("--config", help="key=value config file; flags override it")
    sub.add_argument("--seed", type=int, default=None, help="sampling seed")
    sub.add_argument("--workers", type=int, default=None, help="worker count for parallel stages")
    sub.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tuslab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("profile", help="corpus statistics for query and lake sets")
    _add_common(p)

    p = subs.add_parser("overlap", help="schema/value overlap over ground-truth pairs")
    _add_common(p)
    p.add_argument("--normalize-names", action="store_true",
                   help="lowercase+trim column names before comparing (off by default)")
    p.add_argument("--value-tokens", action="store_true",
                   help="compare whitespace tokens instead of whole cell values")

    p = subs.add_parser("prep", help="normalize a benchmark in place")
    _add_common(p)
    p.add_argument("--drop-unreferenced", action="store_true",
                   help="remove lake tables no ground-truth row references")
    p.add_argument("--self-candidacy", type=_parse_bool, default=True,
                   help="ensure a (q,q) ground-truth row per query (default true)")
    p.add_argument("--row-cap", type=int, default=None, help="truncate tables to this many rows")
    p.add_argument("--sample-queries", type=int, default=None,
                   help="keep only this many queries, sampled under --seed")

    p = subs.add_parser("generate", help="build a partition-based synthetic benchmark")
    _add_common(p)
    p.add_argument("--seeds-dir", help="directory of seed CSV tables")
    p.add_argument("--num-seeds", type=int, default=None,
                   help="synthesize this many categorical seed tables instead")
    p.add_argument("--seed-rows", type=int, default=60)
    p.add_argument("--seed-cols", type=int, default=4)
    p.add_argument("--horizontal", type=int, default=3, help="row partitions per seed")
    p.add_argument("--vertical", type=int, default=2, help="column windows per seed")
    p.add_argument("--rename-prob", type=float, default=0.0)
    p.add_argument("--perturb-prob", type=float, default=0.0)

    for name, helptext in [
        ("vectorize", "compute and persist the vector store"),
        ("evaluate", "full pipeline: vectorize, search, metrics"),
    ]:
        p = subs.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--method", choices=METHODS, default=None)
        p.add_argument("--pooling", choices=["max", "mean"], default=None)
        p.add_argument("--max-values", type=int, default=None,
                       help="distinct values sampled per column (default 1000)")
        p.add_argument("--dim", type=int, default=None, help="vector dimensionality (default 4096)")
        p.add_argument("--embed-url", default=None, help="embedding endpoint (or TUSLAB_EMBED_URL)")
        p.add_argument("--embed-fixture", default=None, help="NDJSON embedding fixture file")
        p.add_argument("--embed-cache", default=None, help="NDJSON embedding cache file")
        if name == "evaluate":
            p.add_argument("--k", type=_parse_k_list, default=None,
                           help="comma-separated k values, ascending (default 10)")
            p.add_argument("--count-self", type=_parse_bool, default=None,
                           help="count the query itself in C and G (default true)")
            p.add_argument("--timing-runs", type=int, default=None,
                           help="average offline/online times over this many runs")

    p = subs.add_parser("search", help="top-k search over a persisted vector store")
    _add_common(p)
    p.add_argument("--k", type=_parse_k_list, default=None)

    p = subs.add_parser("audit", help="extract top-rank disagreements with the ground truth")
    _add_common(p)
    p.add_argument("--k-prime", type=int, default=None, help="rank cutoff (default 3)")
    p.add_argument("--count-self", type=_parse_bool, default=None)

    p = subs.add_parser("adjudicate", help="LLM-judge the extracted disagreements")
    _add_common(p)
    p.add_argument("--runs", type=int, default=None, help="votes per pair (default 5)")
    p.add_argument("--temperature", type=float, default=None, help="default 0.1")
    p.add_argument("--few-shot", default=None, help="file of few-shot examples for the prompt")
    p.add_argument("--template", default=None, help="prompt template override file")
    p.add_argument("--replay", default=None, help="NDJSON replay fixture instead of a live provider")
    p.add_argument("--chat-url", default=None, help="chat endpoint (or TUSLAB_CHAT_URL)")
    p.add_argument("--max-rows", type=int, default=None, help="rows serialized per table (default 50)")
    p.add_argument("--in-flight", type=int, default=None, help="concurrent adjudications (default 1)")
    p.add_argument("--max-pairs", type=int, default=None, help="adjudicate at most this many pairs")

    return parser


_CONFIG_INT_KEYS = {
    "seed", "workers", "max_values", "dim", "k_prime", "runs",
    "max_rows", "in_flight", "max_pairs", "timing_runs",
}
_CONFIG_BOOL_KEYS = {"count_self", "normalize_names", "value_tokens"}
# store_true flags cannot distinguish "absent" from "false"; absent defers to config
_STORE_TRUE_KEYS = {"normalize_names", "value_tokens"}


def _from_config_file(key: str, raw: str):
    if key == "k":
        return _parse_k_list(raw)
    if key in _CONFIG_INT_KEYS:
        return int(raw)
    if key in _CONFIG_BOOL_KEYS:
        return _parse_bool(raw)
    if key == "temperature":
        return float(raw)
    return raw


def _resolve(args: argparse.Namespace, key: str, default, cfg_file: dict):
    """Flag wins, then config file, then default."""
    value = getattr(args, key, None)
    absent = value is None or (value is False and key in _STORE_TRUE_KEYS)
    if not absent:
        return value
    if key in cfg_file:
        return _from_config_file(key, cfg_file[key])
    return default


def make_run_config(args: argparse.Namespace) -> RunConfig:
    cfg_file = pipeline.parse_config_file(args.config) if getattr(args, "config", None) else {}

    def get(key, default):
        return _resolve(args, key, default, cfg_file)

    defaults = RunConfig()
    k_list = _resolve(args, "k", None, cfg_file)
    cfg = RunConfig(
        benchmark=str(get("benchmark", "")),
        out=str(get("out", "")),
        method=get("method", defaults.method),
        k_list=k_list or list(defaults.k_list),
        pooling=get("pooling", None),
        count_self=get("count_self", True),
        seed=get("seed", defaults.seed),
        max_values=get("max_values", defaults.max_values),
        dim=get("dim", defaults.dim),
        workers=get("workers", defaults.workers),
        timing_runs=get("timing_runs", defaults.timing_runs),
        normalize_names=bool(get("normalize_names", False)),
        value_tokens=bool(get("value_tokens", False)),
        embed_url=get("embed_url", None),
        embed_fixture=get("embed_fixture", None),
        embed_cache=get("embed_cache", None),
        k_prime=get("k_prime", defaults.k_prime),
        runs=get("runs", defaults.runs),
        temperature=get("temperature", defaults.temperature),
        few_shot=get("few_shot", None),
        template=get("template", None),
        replay=get("replay", None),
        chat_url=get("chat_url", None),
        max_rows=get("max_rows", defaults.max_rows),
        in_flight=get("in_flight", defaults.in_flight),
        max_pairs=get("max_pairs", None),
    )
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if not getattr(cfg, name):
            raise TusLabError(f"--{name} is required for this command")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = make_run_config(args)
        if args.command == "profile":
            _require(cfg, "benchmark", "out")
            pipeline.stage_profile(cfg)
        elif args.command == "overlap":
            _require(cfg, "benchmark", "out")
            pipeline.stage_overlap(cfg)
        elif args.command == "prep":
            _require(cfg, "benchmark")
            pipeline.stage_prep(
                cfg,
                drop_unreferenced=bool(args.drop_unreferenced),
                self_candidacy=args.self_candidacy,
                row_cap=args.row_cap,
                sample_n=args.sample_queries,
            )
        elif args.command == "generate":
            _require(cfg, "out")
            if args.seeds_dir:
                seeds = [load_table(p) for p in sorted(Path(args.seeds_dir).glob("*.csv"))]
            elif args.num_seeds:
                seeds = prep.make_random_seed_tables(
                    args.num_seeds, rows=args.seed_rows, cols=args.seed_cols, seed=cfg.seed
                )
            else:
                raise TusLabError("generate needs --seeds-dir or --num-seeds")
            gen_cfg = prep.GeneratorConfig(
                horizontal=args.horizontal,
                vertical=args.vertical,
                rename_probability=args.rename_prob,
                perturb_probability=args.perturb_prob,
                seed=cfg.seed,
            )
            prep.generate_partition_benchmark(seeds, gen_cfg, cfg.out)
        elif args.command == "vectorize":
            _require(cfg, "benchmark", "out")
            cfg.validate()
            pipeline.stage_vectorize(cfg)
        elif args.command == "search":
            _require(cfg, "out")
            cfg.validate()
            pipeline.stage_search(cfg)
        elif args.command == "evaluate":
            _require(cfg, "benchmark", "out")
            pipeline.run_pipeline(cfg)
        elif args.command == "audit":
            _require(cfg, "benchmark", "out")
            pipeline.stage_audit(cfg)
        elif args.command == "adjudicate":
            _require(cfg, "benchmark", "out")
            pipeline.stage_adjudicate(cfg)
        else:  # pragma: no cover - argparse enforces the choices
            raise TusLabError(f"unknown command {args.command!r}")
    except (TusLabError, OSError, ValueError) as exc:
        logger.error("error type=%s message=%s", type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
