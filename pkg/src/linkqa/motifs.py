"""Relational motif enumeration over the link graph.

Two motif families are discovered:

* dual-link: documents u and v reference each other; emitted once per
  unordered pair, oriented a < b.
* co-mention: u and v both reference a shared hub E while u also
  references v directly; oriented along the direct edge, with the hub
  recorded as witness.

Enumeration walks directed edges and intersects sorted out-neighbor
slices, so the cost is O(E x average degree) rather than cubic.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .graph import LinkGraph

DUAL_LINK = "dual_link"
CO_MENTION = "co_mention"


@dataclass(frozen=True)
class MotifPair:
    """A discovered ordered document pair; hub is set iff co-mention."""

    a: int
    b: int
    relation: str
    hub: int | None = None

    def key(self) -> tuple[int, int]:
        """Canonical unordered pair key used for cross-motif dedup."""
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass
class DiscoveryConfig:
    hub_in_degree_cap: int = 10_000
    max_pairs: int | None = None
    emit_all_hubs: bool = False

    def __post_init__(self) -> None:
        if self.hub_in_degree_cap < 2:
            raise ValueError("hub_in_degree_cap must be >= 2")


@dataclass
class DiscoveryReport:
    dual_link_pairs: int = 0
    co_mention_pairs: int = 0
    pairs_suppressed_by_dedup: int = 0
    hubs_skipped_by_cap: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def discover_dual_links(
    graph: LinkGraph, report: DiscoveryReport | None = None
) -> Iterator[MotifPair]:
    """Yield one pair per mutually-linked unordered {u, v}, ascending (a, b)."""
    for u in range(graph.vertex_count):
        for v in graph.out_neighbors(u):
            v = int(v)
            if u < v and graph.has_edge(v, u):
                if report is not None:
                    report.dual_link_pairs += 1
                yield MotifPair(a=u, b=v, relation=DUAL_LINK)


def _intersect_sorted(xs: list[int], ys: list[int]) -> Iterator[int]:
    """Two-pointer merge of two strictly increasing id lists."""
    i = j = 0
    nx, ny = len(xs), len(ys)
    while i < nx and j < ny:
        x, y = xs[i], ys[j]
        if x == y:
            yield x
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1


def discover_co_mentions(
    graph: LinkGraph,
    config: DiscoveryConfig | None = None,
    report: DiscoveryReport | None = None,
) -> Iterator[MotifPair]:
    """Yield co-mention pairs in ascending (a, b) scan order over edges.

    By default at most one pair is emitted per unordered {a, b}: the
    orientation is the first direct edge that qualifies in scan order and
    the witness is the smallest qualifying hub. With emit_all_hubs one
    pair per qualifying hub is emitted (same single orientation). Hubs
    whose in-degree exceeds the cap are never used as witnesses; distinct
    capped candidates are counted in the report.
    """
    if config is None:
        config = DiscoveryConfig()
    adjacency = [graph.out_neighbors(v).tolist() for v in range(graph.vertex_count)]
    in_degrees = graph.in_degrees()
    capped_seen: set[int] = set()
    emitted_keys: set[tuple[int, int]] = set()
    emitted = 0

    for a in range(graph.vertex_count):
        for b in adjacency[a]:
            key = (a, b) if a < b else (b, a)
            if key in emitted_keys:
                continue
            hubs: list[int] = []
            for hub in _intersect_sorted(adjacency[a], adjacency[b]):
                if hub == a or hub == b:
                    continue
                if int(in_degrees[hub]) > config.hub_in_degree_cap:
                    if hub not in capped_seen:
                        capped_seen.add(hub)
                        if report is not None:
                            report.hubs_skipped_by_cap += 1
                    continue
                hubs.append(hub)
                if not config.emit_all_hubs:
                    break
            if not hubs:
                continue
            emitted_keys.add(key)
            for hub in hubs:
                if report is not None:
                    report.co_mention_pairs += 1
                yield MotifPair(a=a, b=b, relation=CO_MENTION, hub=hub)
                emitted += 1
                if config.max_pairs is not None and emitted >= config.max_pairs:
                    return


def dedup_motifs(
    dual: Iterable[MotifPair],
    co_mentions: Iterable[MotifPair],
    report: DiscoveryReport | None = None,
) -> Iterator[MotifPair]:
    """Combine streams; dual-link wins when both motifs cover a pair key.

    Dual-link pairs pass through first; co-mention pairs whose unordered
    key already appeared in the dual-link stream are suppressed and
    counted. The report's pair counts reflect the combined output.
    """
    dual_keys: set[tuple[int, int]] = set()
    for pair in dual:
        dual_keys.add(pair.key())
        if report is not None:
            report.dual_link_pairs += 1
        yield pair
    for pair in co_mentions:
        if pair.key() in dual_keys:
            if report is not None:
                report.pairs_suppressed_by_dedup += 1
            continue
        if report is not None:
            report.co_mention_pairs += 1
        yield pair


def write_pairs(
    pairs: Iterable[MotifPair], graph: LinkGraph, path: str, *, limit: int | None = None
) -> int:
    """Write pairs as JSONL with titles resolved from the graph."""
    if limit is not None:
        pairs = itertools.islice(pairs, limit)
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_record(pair, graph), ensure_ascii=False))
            fh.write("\n")
            written += 1
    return written


def pair_record(pair: MotifPair, graph: LinkGraph) -> dict:
    return {
        "a": pair.a,
        "b": pair.b,
        "relation": pair.relation,
        "hub": pair.hub,
        "a_title": graph.titles[pair.a],
        "b_title": graph.titles[pair.b],
    }


def read_pairs(path: str) -> Iterator[tuple[MotifPair, dict]]:
    """Stream (MotifPair, full record) tuples from a pairs JSONL file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            pair = MotifPair(
                a=int(record["a"]),
                b=int(record["b"]),
                relation=record["relation"],
                hub=None if record.get("hub") is None else int(record["hub"]),
            )
            yield pair, record
