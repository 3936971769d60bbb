"""Single entry point exposing the pipeline stages as subcommands.

Exit codes: 0 success, 1 operational failure, 2 usage error. Flags
override config-file values, which override built-in defaults. The
``pipeline`` subcommand chains ingest -> graph -> discover -> synthesize
-> validate -> stats end to end from one config file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from typing import Sequence

from . import __version__, graph as graphmod, ingest as ingestmod
from . import motifs as motifsmod
from . import passk as passkmod
from . import stats as statsmod
from . import synth as synthmod
from . import validate as validatemod
from .config import PipelineConfig, load_policy, pick, policy_from_mapping

logger = logging.getLogger("linkqa")


def _require_inputs(*paths: str | None) -> None:
    for path in paths:
        if path and path != "-" and not os.path.exists(path):
            raise FileNotFoundError(f"input path does not exist: {path}")


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_ingest(args, config: PipelineConfig) -> int:
    section = config.section("ingest")
    input_path = pick(args.input, config.section("paths"), "input", None)
    output_path = pick(args.output, config.section("paths"), "docs", None)
    if not input_path or not output_path:
        raise ValueError("ingest requires --input and --output (or config paths)")
    _require_inputs(input_path)
    blacklist_csv = pick(args.namespace_blacklist, section, "namespace_blacklist", None)
    if isinstance(blacklist_csv, str):
        blacklist = [p for p in blacklist_csv.split(",") if p]
    elif isinstance(blacklist_csv, list):
        blacklist = [str(p) for p in blacklist_csv]
    else:
        blacklist = None
    max_doc_bytes = int(
        pick(args.max_doc_bytes, section, "max_doc_bytes", ingestmod.DEFAULT_MAX_DOC_BYTES)
    )

    documents: list[ingestmod.Document] = []
    if input_path == "-":
        report = ingestmod.ingest_corpus(
            sys.stdin, documents.append, blacklist=blacklist, max_doc_bytes=max_doc_bytes
        )
    else:
        with open(input_path, "r", encoding="utf-8") as fh:
            report = ingestmod.ingest_corpus(
                fh, documents.append, blacklist=blacklist, max_doc_bytes=max_doc_bytes
            )
    ingestmod.write_documents(documents, output_path)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def cmd_graph(args, config: PipelineConfig) -> int:
    if args.graph_command == "build":
        docs_path = pick(args.docs, config.section("paths"), "docs", None)
        output_path = pick(args.output, config.section("paths"), "graph", None)
        if not docs_path or not output_path:
            raise ValueError("graph build requires --docs and --output")
        _require_inputs(docs_path)
        graph, stats = graphmod.build_graph(ingestmod.read_documents(docs_path))
        graph.save(output_path)
        print(graphmod.stats_json(stats))
        return 0
    graph_path = pick(args.graph, config.section("paths"), "graph", None)
    if not graph_path:
        raise ValueError("graph stats requires --graph")
    _require_inputs(graph_path)
    graph = graphmod.LinkGraph.load(graph_path)
    print(graphmod.stats_json(graph.stats()))
    return 0


def cmd_discover(args, config: PipelineConfig) -> int:
    section = config.section("discover")
    graph_path = pick(args.graph, config.section("paths"), "graph", None)
    output_path = pick(args.output, config.section("paths"), "pairs", None)
    if not graph_path or not output_path:
        raise ValueError("discover requires --graph and --output")
    _require_inputs(graph_path)
    hub_cap = int(pick(args.hub_cap, section, "hub_cap", 10_000))
    max_pairs = pick(args.max_pairs, section, "max_pairs", None)
    emit_all = bool(
        pick(args.emit_all_hubs or None, section, "emit_all_hubs", False)
    )
    discovery = motifsmod.DiscoveryConfig(
        hub_in_degree_cap=hub_cap,
        max_pairs=None if max_pairs is None else int(max_pairs),
        emit_all_hubs=emit_all,
    )
    graph = graphmod.LinkGraph.load(graph_path)
    report = motifsmod.DiscoveryReport()
    co_report = motifsmod.DiscoveryReport()
    combined = motifsmod.dedup_motifs(
        motifsmod.discover_dual_links(graph),
        motifsmod.discover_co_mentions(graph, discovery, co_report),
        report,
    )
    motifsmod.write_pairs(combined, graph, output_path, limit=discovery.max_pairs)
    report.hubs_skipped_by_cap = co_report.hubs_skipped_by_cap
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def _build_params(args, config: PipelineConfig) -> synthmod.SynthesisParams:
    section = config.section("synthesize")
    return synthmod.SynthesisParams(
        temperature=float(pick(args.temperature, section, "temperature", 0.7)),
        top_p=float(pick(args.top_p, section, "top_p", 0.8)),
        max_output_tokens=int(pick(args.max_tokens, section, "max_tokens", 32_768)),
        model_name=str(pick(args.model, section, "model", "local-model")),
        passage_char_limit=int(
            pick(args.passage_char_limit, section, "passage_char_limit", 50_000)
        ),
        qa_per_pair=int(pick(None, section, "qa_per_pair", 1)),
        mode=str(pick(args.mode, section, "mode", "cross_doc")),
    )


def _build_client(args, config: PipelineConfig) -> synthmod.HttpChatClient:
    endpoint_cfg = config.section("endpoint")
    url = pick(getattr(args, "endpoint", None), endpoint_cfg, "url", None)
    url = url or os.environ.get(synthmod.ENDPOINT_ENV)
    if not url:
        raise ValueError(
            f"no endpoint configured; pass --endpoint, set [endpoint].url, "
            f"or export {synthmod.ENDPOINT_ENV}"
        )
    token = endpoint_cfg.get("token") or os.environ.get(synthmod.TOKEN_ENV)
    timeout = float(endpoint_cfg.get("timeout", 300.0))
    return synthmod.HttpChatClient(url, token=token, timeout=timeout)


def cmd_synthesize(args, config: PipelineConfig) -> int:
    section = config.section("synthesize")
    pairs_path = pick(args.pairs, config.section("paths"), "pairs", None)
    docs_path = pick(args.docs, config.section("paths"), "docs", None)
    out_path = pick(args.out, config.section("paths"), "raw", None)
    checkpoint_path = pick(args.checkpoint, config.section("paths"), "checkpoint", None)
    if not all([pairs_path, docs_path, out_path, checkpoint_path]):
        raise ValueError("synthesize requires --pairs, --docs, --out and --checkpoint")
    _require_inputs(pairs_path, docs_path)
    params = _build_params(args, config)
    client = _build_client(args, config)
    concurrency = int(pick(args.concurrency, section, "concurrency", 16))
    limit = None if args.limit is None else int(args.limit)
    retry = synthmod.RetryPolicy()
    if args.seed is not None:
        retry.rng = random.Random(args.seed)
    pairs = (pair for pair, _ in motifsmod.read_pairs(pairs_path))
    report = synthmod.run_synthesis(
        pairs,
        ingestmod.DocumentStore.load(docs_path),
        client,
        params,
        out_path,
        checkpoint_path,
        concurrency=concurrency,
        limit=limit,
        retry=retry,
    )
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def cmd_validate(args, config: PipelineConfig) -> int:
    section = config.section("validate")
    in_path = pick(getattr(args, "in_path", None), config.section("paths"), "raw", None)
    out_path = pick(args.out, config.section("paths"), "dataset", None)
    if not in_path or not out_path:
        raise ValueError("validate requires --in and --out")
    _require_inputs(in_path)
    if args.policy:
        _require_inputs(args.policy)
        policy = load_policy(args.policy, args.mode)
    else:
        policy = policy_from_mapping(section, args.mode)
    per_pair = args.qa_per_pair
    if per_pair is not None and per_pair <= 0:
        per_pair = None
    report = validatemod.ValidationReport()

    def instances():
        for record in synthmod.read_raw_completions(in_path):
            yield from validatemod.parse_record(record, report)

    accepted = validatemod.validate(
        instances(), policy, report, per_pair_limit=per_pair
    )
    validatemod.write_dataset(accepted, out_path)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def cmd_stats(args, config: PipelineConfig) -> int:
    section = config.section("stats")
    in_path = pick(getattr(args, "in_path", None), config.section("paths"), "dataset", None)
    if not in_path:
        raise ValueError("stats requires --in")
    _require_inputs(in_path)
    fmt = pick(args.format, section, "format", "json")
    boundaries = pick(args.buckets, section, "buckets", None)
    if isinstance(boundaries, str):
        boundaries = _parse_int_list(boundaries)
    if boundaries is None:
        boundaries = list(statsmod.DEFAULT_BUCKET_BOUNDARIES)
    report = statsmod.compute_stats(
        validatemod.read_dataset(in_path), tuple(int(b) for b in boundaries)
    )
    print(statsmod.render_report(report, fmt))
    return 0


def cmd_passk(args, config: PipelineConfig) -> int:
    in_path = getattr(args, "in_path", None)
    if not in_path:
        raise ValueError("passk requires --in")
    _require_inputs(in_path)
    records = list(passkmod.read_records(in_path))
    if args.curve:
        k_max = args.k_max if args.k_max is not None else 128
        points = args.points if args.points is not None else 8
        curve = passkmod.curve_table(records, k_max, points)
        print(curve.as_csv() if args.format == "csv" else json.dumps(curve.as_dict()))
        return 0
    k = args.k if args.k is not None else 128
    curve = passkmod.aggregate(records, [k])
    if args.format == "csv":
        print(curve.as_csv(), end="")
    elif args.format == "json":
        print(json.dumps(curve.as_dict()))
    else:
        print(curve.values[0])
    return 0


def cmd_pipeline(args, config: PipelineConfig) -> int:
    """Chain every stage using paths from the config file."""
    paths = config.section("paths")
    required = ("input", "docs", "graph", "pairs", "raw", "checkpoint", "dataset")
    missing = [key for key in required if key not in paths]
    if missing:
        raise ValueError(f"pipeline config [paths] is missing: {', '.join(missing)}")

    ns = argparse.Namespace(
        input=None, output=None, namespace_blacklist=None, max_doc_bytes=None
    )
    logger.info("pipeline: ingest")
    cmd_ingest(ns, config)

    logger.info("pipeline: graph build")
    ns = argparse.Namespace(graph_command="build", docs=None, output=None)
    cmd_graph(ns, config)

    logger.info("pipeline: discover")
    ns = argparse.Namespace(
        graph=None, output=None, hub_cap=None, max_pairs=None, emit_all_hubs=False
    )
    cmd_discover(ns, config)

    logger.info("pipeline: synthesize")
    ns = argparse.Namespace(
        pairs=None,
        docs=None,
        out=None,
        checkpoint=None,
        mode=None,
        concurrency=None,
        temperature=None,
        top_p=None,
        max_tokens=None,
        model=None,
        passage_char_limit=None,
        endpoint=None,
        limit=None,
        seed=args.seed,
    )
    cmd_synthesize(ns, config)

    logger.info("pipeline: validate")
    qa_per_pair = int(config.section("synthesize").get("qa_per_pair", 1))
    ns = argparse.Namespace(
        in_path=None, out=None, policy=None, mode=None, qa_per_pair=qa_per_pair
    )
    cmd_validate(ns, config)

    logger.info("pipeline: stats")
    ns = argparse.Namespace(in_path=None, format=None, buckets=None)
    return cmd_stats(ns, config)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    # Global flags are valid both before and after the subcommand.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file; flags override its values")
    common.add_argument(
        "--log-level",
        default=None,
        choices=["debug", "info", "warning", "error"],
        help="logging verbosity",
    )
    common.add_argument("--seed", type=int, default=None, help="seed for randomized paths")

    parser = argparse.ArgumentParser(
        prog="linkqa",
        description="Hyperlink relation mining and cross-document QA dataset pipeline.",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"linkqa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, parents=[common])

    p = add_parser("ingest", "read a JSONL corpus and emit Documents")
    p.add_argument("--input", help="corpus JSONL path, or - for stdin")
    p.add_argument("--output", help="documents JSONL output path")
    p.add_argument(
        "--namespace-blacklist",
        help="comma-separated namespace prefixes to drop (default wiki namespaces)",
    )
    p.add_argument("--max-doc-bytes", type=int, help="truncate texts beyond this size")

    p = add_parser("graph", "build or inspect the link graph")
    gsub = p.add_subparsers(dest="graph_command", required=True)
    g = gsub.add_parser("build", help="build the graph from documents", parents=[common])
    g.add_argument("--docs", help="documents JSONL path")
    g.add_argument("--output", help="binary graph output path")
    g = gsub.add_parser("stats", help="print graph statistics as JSON", parents=[common])
    g.add_argument("--graph", help="binary graph path")

    p = add_parser("discover", "enumerate relational motif pairs")
    p.add_argument("--graph", help="binary graph path")
    p.add_argument("--output", help="pairs JSONL output path")
    p.add_argument("--hub-cap", type=int, help="skip hubs with in-degree above this")
    p.add_argument("--max-pairs", type=int, help="global cap on emitted pairs")
    p.add_argument(
        "--emit-all-hubs",
        action="store_true",
        help="emit one pair per qualifying hub instead of one witness per pair",
    )

    p = add_parser("synthesize", "generate joint QA from discovered pairs")
    p.add_argument("--pairs", help="pairs JSONL path")
    p.add_argument("--docs", help="documents JSONL path")
    p.add_argument("--out", help="raw completions JSONL output path")
    p.add_argument("--checkpoint", help="checkpoint file for resumable runs")
    p.add_argument("--mode", choices=list(synthmod.MODES), help="prompt mode")
    p.add_argument("--concurrency", type=int, help="max in-flight requests")
    p.add_argument("--temperature", type=float, help="sampling temperature")
    p.add_argument("--top-p", dest="top_p", type=float, help="nucleus sampling mass")
    p.add_argument("--max-tokens", type=int, help="max completion tokens")
    p.add_argument("--limit", type=int, help="process at most this many pairs this run")
    p.add_argument("--model", help="model name sent to the endpoint")
    p.add_argument("--passage-char-limit", type=int, help="per-passage char budget")
    p.add_argument("--endpoint", help="chat-completions endpoint URL")

    p = add_parser("validate", "parse completions and enforce constraints")
    p.add_argument("--in", dest="in_path", help="raw completions JSONL path")
    p.add_argument("--out", help="dataset JSONL output path")
    p.add_argument("--policy", help="validation policy TOML file")
    p.add_argument("--mode", choices=["reject", "flag"], help="on-violation behavior")
    p.add_argument(
        "--qa-per-pair",
        type=int,
        default=None,
        help="retain at most this many accepted instances per pair (0 = unlimited)",
    )

    p = add_parser("stats", "dataset length statistics")
    p.add_argument("--in", dest="in_path", help="dataset JSONL path")
    p.add_argument("--format", choices=["json", "table"], help="output format")
    p.add_argument("--buckets", help="comma-separated ascending bucket boundaries")

    p = add_parser("passk", "unbiased pass@k from judgment records")
    p.add_argument("--in", dest="in_path", help="records JSONL path")
    p.add_argument("--k", type=int, help="single k to estimate")
    p.add_argument("--curve", action="store_true", help="emit a log-spaced pass@k curve")
    p.add_argument("--k-max", dest="k_max", type=int, help="largest k on the curve")
    p.add_argument("--points", type=int, help="target number of curve points")
    p.add_argument("--format", choices=["plain", "json", "csv"], default="plain")

    add_parser("pipeline", "run every stage from one config file")
    return parser


_HANDLERS = {
    "ingest": cmd_ingest,
    "graph": cmd_graph,
    "discover": cmd_discover,
    "synthesize": cmd_synthesize,
    "validate": cmd_validate,
    "stats": cmd_stats,
    "passk": cmd_passk,
    "pipeline": cmd_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    level = args.log_level or config.section("logging").get("level") or "warning"
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return _HANDLERS[args.command](args, config)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
