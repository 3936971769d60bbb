"""Directed document graph in compressed adjacency (CSR) form.

Vertices are documents (vertex id == doc_id), edges are hyperlinks whose
normalized target title matched an ingested document. Out-neighbor slices
are sorted and deduplicated so membership tests are binary searches.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ingest import Document

_MAGIC = b"LKQGRAPH"
_VERSION = 1


@dataclass
class GraphStats:
    vertices: int = 0
    edges: int = 0
    dangling_links_dropped: int = 0
    mutual_edge_count: int = 0
    max_out_degree: int = 0
    max_in_degree: int = 0
    duplicate_titles_merged: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class LinkGraph:
    """Immutable directed graph over documents.

    ``offsets`` has length vertex_count + 1; the out-neighbors of vertex v
    are ``targets[offsets[v]:offsets[v+1]]``, strictly increasing. Dangling
    links and self-loops are removed at build time.
    """

    def __init__(
        self,
        offsets: np.ndarray,
        targets: np.ndarray,
        titles: list[str],
        *,
        dangling_links_dropped: int = 0,
        duplicate_titles_merged: int = 0,
    ):
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.targets = np.ascontiguousarray(targets, dtype=np.int32)
        self.titles = titles
        self.dangling_links_dropped = dangling_links_dropped
        self.duplicate_titles_merged = duplicate_titles_merged
        self.title_index: dict[str, int] = {}
        for idx, title in enumerate(titles):
            self.title_index.setdefault(title, idx)

    @property
    def vertex_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def edge_count(self) -> int:
        return int(self.offsets[-1])

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.vertex_count:
            raise IndexError(f"vertex id {v} out of range [0, {self.vertex_count})")

    def out_neighbors(self, v: int) -> np.ndarray:
        """Sorted out-neighbor ids of v; empty array for sink vertices."""
        self._check_vertex(v)
        return self.targets[self.offsets[v] : self.offsets[v + 1]]

    def out_degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self.offsets[v + 1] - self.offsets[v])

    def has_edge(self, u: int, v: int) -> bool:
        """True iff the directed edge u -> v exists. O(log out_degree(u))."""
        self._check_vertex(u)
        self._check_vertex(v)
        slice_ = self.out_neighbors(u)
        pos = int(np.searchsorted(slice_, v))
        return pos < len(slice_) and int(slice_[pos]) == v

    def in_degrees(self) -> np.ndarray:
        """In-degree per vertex, computed in one pass (not stored)."""
        return np.bincount(self.targets, minlength=self.vertex_count).astype(np.int64)

    def stats(self) -> GraphStats:
        """Corpus-level counts; mutual pairs found by probing reverse edges."""
        mutual = 0
        for u in range(self.vertex_count):
            for v in self.out_neighbors(u):
                v = int(v)
                if u < v and self.has_edge(v, u):
                    mutual += 1
        out_degrees = np.diff(self.offsets)
        in_degrees = self.in_degrees()
        return GraphStats(
            vertices=self.vertex_count,
            edges=self.edge_count,
            dangling_links_dropped=self.dangling_links_dropped,
            mutual_edge_count=mutual,
            max_out_degree=int(out_degrees.max()) if self.vertex_count else 0,
            max_in_degree=int(in_degrees.max()) if self.vertex_count else 0,
            duplicate_titles_merged=self.duplicate_titles_merged,
        )

    def save(self, path: str) -> None:
        """Write the graph as a single binary file (see module header)."""
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(
                struct.pack(
                    "<IQQQQ",
                    _VERSION,
                    self.vertex_count,
                    self.edge_count,
                    self.dangling_links_dropped,
                    self.duplicate_titles_merged,
                )
            )
            fh.write(self.offsets.astype("<i8").tobytes())
            fh.write(self.targets.astype("<i4").tobytes())
            for title in self.titles:
                encoded = title.encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)

    @classmethod
    def load(cls, path: str) -> "LinkGraph":
        with open(path, "rb") as fh:
            magic = fh.read(len(_MAGIC))
            if magic != _MAGIC:
                raise ValueError(f"not a linkqa graph file: {path}")
            version, vertices, edges, dangling, duplicates = struct.unpack(
                "<IQQQQ", fh.read(4 + 8 * 4)
            )
            if version != _VERSION:
                raise ValueError(f"unsupported graph file version {version}")
            offsets = np.frombuffer(fh.read(8 * (vertices + 1)), dtype="<i8")
            targets = np.frombuffer(fh.read(4 * edges), dtype="<i4")
            titles = []
            for _ in range(vertices):
                (length,) = struct.unpack("<I", fh.read(4))
                titles.append(fh.read(length).decode("utf-8"))
        return cls(
            offsets,
            targets,
            titles,
            dangling_links_dropped=dangling,
            duplicate_titles_merged=duplicates,
        )


def build_graph(documents: Iterable[Document]) -> tuple[LinkGraph, GraphStats]:
    """Build the CSR graph from a Document stream.

    Links to titles absent from the corpus are dropped and counted as
    dangling. Documents sharing a canonical title keep their own vertex,
    but the later document's edges merge into the first id's vertex and
    links to the shared title resolve to the first id.
    """
    docs = list(documents)
    title_index: dict[str, int] = {}
    duplicates = 0
    for position, doc in enumerate(docs):
        if doc.doc_id != position:
            raise ValueError(
                f"doc_ids must be dense in stream order; got {doc.doc_id} at {position}"
            )
        if doc.title in title_index:
            duplicates += 1
        else:
            title_index[doc.title] = doc.doc_id

    n = len(docs)
    adjacency: list[set[int]] = [set() for _ in range(n)]
    dangling = 0
    for doc in docs:
        source = title_index[doc.title]
        for link in doc.links:
            target = title_index.get(link)
            if target is None:
                dangling += 1
                continue
            if target == source:
                continue
            adjacency[source].add(target)

    offsets = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        offsets[v + 1] = offsets[v] + len(adjacency[v])
    targets = np.zeros(int(offsets[-1]), dtype=np.int32)
    for v in range(n):
        targets[offsets[v] : offsets[v + 1]] = sorted(adjacency[v])

    graph = LinkGraph(
        offsets,
        targets,
        [doc.title for doc in docs],
        dangling_links_dropped=dangling,
        duplicate_titles_merged=duplicates,
    )
    return graph, graph.stats()


def stats_json(stats: GraphStats) -> str:
    return json.dumps(stats.as_dict(), indent=2, sort_keys=True)
