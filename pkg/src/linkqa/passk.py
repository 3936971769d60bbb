"""Unbiased pass@k estimation from per-question sample judgments.

Each record carries n (samples drawn) and c (samples judged correct).
pass@k = 1 - C(n-c, k) / C(n, k), evaluated in the numerically stable
product form 1 - prod_{i=n-c+1..n} (1 - k/i), which never overflows for
any practical n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class PassKRecord:
    question_id: str
    n: int
    c: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.c <= self.n:
            raise ValueError(f"c must satisfy 0 <= c <= n, got c={self.c} n={self.n}")


@dataclass
class PassKCurve:
    ks: list[int]
    values: list[float]
    record_count: int
    included_per_k: list[int]

    def as_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "values": list(self.values),
            "record_count": self.record_count,
            "included_per_k": list(self.included_per_k),
        }

    def as_csv(self) -> str:
        lines = ["k,pass_at_k"]
        lines += [f"{k},{v}" for k, v in zip(self.ks, self.values)]
        return "\n".join(lines) + "\n"


def pass_at_k(n: int, c: int, k: int) -> float:
    """Probability that at least one of k draws (without replacement from
    the n samples) is correct, given c of n are correct.

    Exactly 0.0 when c == 0 and exactly 1.0 when k > n - c (every size-k
    subset must include a correct sample).
    """
    if not 0 <= c <= n:
        raise ValueError(f"require 0 <= c <= n, got c={c} n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"require 1 <= k <= n, got k={k} n={n}")
    if c == 0:
        return 0.0
    if k > n - c:
        return 1.0
    product = 1.0
    for i in range(n - c + 1, n + 1):
        product *= 1.0 - k / i
    return 1.0 - product


def aggregate(records: Sequence[PassKRecord], ks: Sequence[int]) -> PassKCurve:
    """Mean pass@k across records for each requested k.

    Records with n < k are skipped for that k only. Raises on an empty
    record set or when a k has no eligible records.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot aggregate over zero records")
    ks = list(ks)
    values: list[float] = []
    included: list[int] = []
    for k in ks:
        eligible = [r for r in records if r.n >= k]
        if not eligible:
            raise ValueError(f"no record has n >= {k}")
        values.append(sum(pass_at_k(r.n, r.c, k) for r in eligible) / len(eligible))
        included.append(len(eligible))
    return PassKCurve(
        ks=ks, values=values, record_count=len(records), included_per_k=included
    )


def geometric_ks(k_max: int, points: int) -> list[int]:
    """Unique integers nearest a geometric grid from 1 to k_max, always
    containing both endpoints."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if points < 1:
        raise ValueError("points must be >= 1")
    if k_max == 1 or points == 1:
        return sorted({1, k_max})
    grid = [k_max ** (j / (points - 1)) for j in range(points)]
    ks = sorted({1, k_max} | {min(k_max, max(1, round(g))) for g in grid})
    return ks


def curve_table(records: Sequence[PassKRecord], k_max: int, points: int) -> PassKCurve:
    """pass@k curve on a log-spaced k grid, requiring k_max <= min n."""
    records = list(records)
    if not records:
        raise ValueError("cannot aggregate over zero records")
    min_n = min(r.n for r in records)
    if k_max > min_n:
        raise ValueError(f"k_max={k_max} exceeds the smallest record n={min_n}")
    return aggregate(records, geometric_ks(k_max, points))


def read_records(path: str) -> Iterator[PassKRecord]:
    """Stream records from JSONL lines of {"question_id", "n", "c"}."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            yield PassKRecord(
                question_id=str(record["question_id"]),
                n=int(record["n"]),
                c=int(record["c"]),
            )


def write_records(records: Iterable[PassKRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(
                json.dumps(
                    {"question_id": record.question_id, "n": record.n, "c": record.c}
                )
            )
            fh.write("\n")
