"""Test-support: random graph construction and brute-force motif oracles.

The oracles test the motif definitions directly on adjacency sets (double
loop for mutual links, edge-then-hub loop for shared-hub triples) and stay
independent of the CSR scan implementation they check.
"""

import random

from linkqa.graph import LinkGraph, build_graph
from linkqa.ingest import Document


def random_adjacency(rng: random.Random, n: int, p: float) -> list[set[int]]:
    """Directed Erdos-Renyi adjacency sets without self-loops."""
    return [
        {v for v in range(n) if v != u and rng.random() < p} for u in range(n)
    ]


def graph_from_adjacency(adjacency: list[set[int]]) -> LinkGraph:
    """Build a LinkGraph through the normal Document path."""
    titles = [f"Node {i:03d}" for i in range(len(adjacency))]
    docs = [
        Document(
            doc_id=u,
            title=titles[u],
            text=f"synthetic vertex {u}",
            links=tuple(titles[v] for v in sorted(out)),
        )
        for u, out in enumerate(adjacency)
    ]
    graph, _ = build_graph(docs)
    return graph


def oracle_dual_pairs(adjacency: list[set[int]]) -> set[tuple[int, int]]:
    """All unordered pairs with edges both ways, as (min, max) keys."""
    n = len(adjacency)
    found = set()
    for u in range(n):
        for v in range(n):
            if u < v and v in adjacency[u] and u in adjacency[v]:
                found.add((u, v))
    return found


def oracle_co_mention_triples(
    adjacency: list[set[int]],
) -> dict[tuple[int, int], set[int]]:
    """All ordered pairs (a, b) with a direct edge and at least one shared
    hub, mapped to the full set of qualifying hubs."""
    n = len(adjacency)
    result: dict[tuple[int, int], set[int]] = {}
    for a in range(n):
        for b in adjacency[a]:
            if a == b:
                continue
            hubs = {
                e
                for e in range(n)
                if e not in (a, b) and e in adjacency[a] and e in adjacency[b]
            }
            if hubs:
                result[(a, b)] = hubs
    return result


def oracle_co_mention_keys(adjacency: list[set[int]]) -> set[tuple[int, int]]:
    """Unordered pair keys covered by at least one co-mention triple."""
    return {
        (a, b) if a < b else (b, a)
        for (a, b) in oracle_co_mention_triples(adjacency)
    }


def _completion_record(i: int, completion: str) -> dict:
    return {
        "a": i,
        "b": i + 100,
        "hub": None,
        "relation": "dual_link",
        "a_title": f"Left {i}",
        "b_title": f"Right {i}",
        "hub_title": None,
        "prompt_chars": 1000,
        "completion": completion,
        "finish_reason": "stop",
        "latency_ms": 5,
        "attempt": 1,
        "error": None,
    }


_QUESTION = (
    "What connects subject {i:02d} with its counterpart entity in the paired article?"
)

_REASONING = (
    "The first article describes subject {i:02d} in detail and records its defining "
    "property along with the year it was first documented. The second article extends "
    "that property to the counterpart entity, fixing the shared chronology and the "
    "causal order between the two subjects."
)

_ATTRIBUTION_PHRASES = [
    "According to Passage A, the property holds.",
    "Passage B mentions the counterpart directly.",
    "As stated in the text, the chronology is fixed.",
    "Based on the provided documents, both facts align.",
    "The detail is mentioned in the text twice.",
]


def build_adversarial_records() -> tuple[list[dict], dict]:
    """50 raw completions with known validation outcomes.

    10 carry attribution phrases, 10 lack the "Therefore," marker, 5 are
    malformed (no parsable QA block), 25 are clean. Returns the records
    and the manifest of expected counts.
    """
    records = []
    i = 0
    for j in range(10):
        phrase = _ATTRIBUTION_PHRASES[j % len(_ATTRIBUTION_PHRASES)]
        text = (
            f"Question: {_QUESTION.format(i=i)}\n"
            f"Answer: {phrase} {_REASONING.format(i=i)} "
            f"Therefore, the two subjects share the documented property."
        )
        records.append(_completion_record(i, text))
        i += 1
    for _ in range(10):
        text = (
            f"Question: {_QUESTION.format(i=i)}\n"
            f"Answer: {_REASONING.format(i=i)} "
            f"So the two subjects share the documented property."
        )
        records.append(_completion_record(i, text))
        i += 1
    malformed = [
        "Answer: an orphan answer with no question at all.",
        "free text with no markers whatsoever",
        "Question: only a question, never answered",
        "Q: wrong marker format entirely\nA: still the wrong format",
        "Question:\nAnswer: blank question above.",
    ]
    for text in malformed:
        records.append(_completion_record(i, text))
        i += 1
    for _ in range(25):
        text = (
            f"Question: {_QUESTION.format(i=i)}\n"
            f"Answer: {_REASONING.format(i=i)} "
            f"Therefore, the two subjects share the documented property."
        )
        records.append(_completion_record(i, text))
        i += 1
    manifest = {
        "completions": 50,
        "attribution": 10,
        "missing_chain": 10,
        "malformed_completions": 5,
        "clean": 25,
        "instances_parsed": 45,
    }
    return records, manifest
