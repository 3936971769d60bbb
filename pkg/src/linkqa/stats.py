"""Length statistics over the final QA dataset.

Lengths are measured per instance on the question, the answer, and the
combined training text ("Question: {q}\\nAnswer: {a}"), at character
(unicode scalar) and whitespace-delimited word granularity. Percentiles
use the nearest-rank method over an exact sparse histogram of integer
lengths, so sharded accumulation merges without approximation.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEFAULT_BUCKET_BOUNDARIES = (0, 200, 500, 1000, 2000, 5000, 10000)

PERCENTILES = (5, 25, 50, 75, 95)

SERIES_NAMES = (
    "question_chars",
    "answer_chars",
    "qa_chars",
    "question_words",
    "answer_words",
    "qa_words",
)


def combined_text(question: str, answer: str) -> str:
    """The instance as it appears in pretraining text."""
    return f"Question: {question}\nAnswer: {answer}"


@dataclass
class SeriesSummary:
    count: int = 0
    mean: float | None = None
    std: float | None = None
    min: int | None = None
    max: int | None = None
    p5: int | None = None
    p25: int | None = None
    p50: int | None = None
    p75: int | None = None
    p95: int | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class SeriesAccumulator:
    """Exact histogram accumulator for one integer-valued length series."""

    def __init__(self) -> None:
        self.histogram: Counter[int] = Counter()
        self.count = 0
        self.total = 0
        self.total_sq = 0

    def add(self, value: int) -> None:
        self.histogram[value] += 1
        self.count += 1
        self.total += value
        self.total_sq += value * value

    def merge(self, other: "SeriesAccumulator") -> None:
        self.histogram.update(other.histogram)
        self.count += other.count
        self.total += other.total
        self.total_sq += other.total_sq

    def percentile(self, p: float) -> int:
        """Nearest-rank percentile: value at rank ceil(p/100 * count)."""
        if self.count == 0:
            raise ValueError("percentile of empty series")
        rank = max(1, math.ceil(p / 100.0 * self.count))
        seen = 0
        for value in sorted(self.histogram):
            seen += self.histogram[value]
            if seen >= rank:
                return value
        raise AssertionError("rank not reached; histogram corrupt")

    def summary(self) -> SeriesSummary:
        if self.count == 0:
            return SeriesSummary()
        mean = self.total / self.count
        variance = max(0.0, self.total_sq / self.count - mean * mean)
        pcts = {f"p{p}": self.percentile(p) for p in PERCENTILES}
        return SeriesSummary(
            count=self.count,
            mean=mean,
            std=math.sqrt(variance),
            min=min(self.histogram),
            max=max(self.histogram),
            **pcts,
        )


@dataclass
class LengthStats:
    count: int = 0
    series: dict[str, SeriesSummary] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "series": {name: s.as_dict() for name, s in self.series.items()},
        }


@dataclass
class BucketTable:
    boundaries: tuple[int, ...] = DEFAULT_BUCKET_BOUNDARIES
    qa_counts: list[int] = field(default_factory=list)
    qa_percentages: list[float] = field(default_factory=list)
    answer_counts: list[int] = field(default_factory=list)
    answer_percentages: list[float] = field(default_factory=list)

    def labels(self) -> list[str]:
        labels = []
        for i, lo in enumerate(self.boundaries):
            hi = self.boundaries[i + 1] if i + 1 < len(self.boundaries) else None
            labels.append(f"[{lo}, {hi})" if hi is not None else f"[{lo}, inf)")
        return labels

    def as_dict(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "labels": self.labels(),
            "qa_counts": list(self.qa_counts),
            "qa_percentages": list(self.qa_percentages),
            "answer_counts": list(self.answer_counts),
            "answer_percentages": list(self.answer_percentages),
        }


@dataclass
class StatsReport:
    overall: LengthStats
    by_relation: dict[str, LengthStats]
    buckets: BucketTable
    composition: dict[str, int]
    composition_proportions: dict[str, float]
    records_skipped: int = 0

    def as_dict(self) -> dict:
        return {
            "overall": self.overall.as_dict(),
            "by_relation": {k: v.as_dict() for k, v in sorted(self.by_relation.items())},
            "buckets": self.buckets.as_dict(),
            "composition": dict(sorted(self.composition.items())),
            "composition_proportions": {
                k: v for k, v in sorted(self.composition_proportions.items())
            },
            "records_skipped": self.records_skipped,
        }


def bucket_index(length: int, boundaries: Sequence[int]) -> int:
    """Index of the half-open bucket [lo, hi) containing ``length``."""
    idx = 0
    for i, lo in enumerate(boundaries):
        if length >= lo:
            idx = i
        else:
            break
    return idx


class StatsAccumulator:
    """Commutative accumulator for one shard of the dataset stream."""

    def __init__(self, boundaries: Sequence[int] = DEFAULT_BUCKET_BOUNDARIES):
        boundaries = tuple(boundaries)
        if not boundaries or boundaries[0] != 0 or list(boundaries) != sorted(set(boundaries)):
            raise ValueError("boundaries must be strictly ascending and start at 0")
        self.boundaries = boundaries
        self.overall = {name: SeriesAccumulator() for name in SERIES_NAMES}
        self.by_relation: dict[str, dict[str, SeriesAccumulator]] = {}
        self.qa_buckets = [0] * len(boundaries)
        self.answer_buckets = [0] * len(boundaries)
        self.composition: Counter[str] = Counter()
        self.records_skipped = 0
        self.count = 0

    def add_record(self, record: dict) -> None:
        question = record.get("question")
        answer = record.get("answer")
        if not isinstance(question, str) or not isinstance(answer, str):
            self.records_skipped += 1
            return
        relation = record.get("relation", "unknown")
        qa = combined_text(question, answer)
        values = {
            "question_chars": len(question),
            "answer_chars": len(answer),
            "qa_chars": len(qa),
            "question_words": len(question.split()),
            "answer_words": len(answer.split()),
            "qa_words": len(qa.split()),
        }
        for name, value in values.items():
            self.overall[name].add(value)
        rel_acc = self.by_relation.setdefault(
            relation, {name: SeriesAccumulator() for name in SERIES_NAMES}
        )
        for name, value in values.items():
            rel_acc[name].add(value)
        self.qa_buckets[bucket_index(values["qa_chars"], self.boundaries)] += 1
        self.answer_buckets[bucket_index(values["answer_chars"], self.boundaries)] += 1
        self.composition[relation] += 1
        self.count += 1

    def merge(self, other: "StatsAccumulator") -> None:
        if self.boundaries != other.boundaries:
            raise ValueError("cannot merge accumulators with different buckets")
        for name in SERIES_NAMES:
            self.overall[name].merge(other.overall[name])
        for relation, acc in other.by_relation.items():
            mine = self.by_relation.setdefault(
                relation, {name: SeriesAccumulator() for name in SERIES_NAMES}
            )
            for name in SERIES_NAMES:
                mine[name].merge(acc[name])
        self.qa_buckets = [a + b for a, b in zip(self.qa_buckets, other.qa_buckets)]
        self.answer_buckets = [
            a + b for a, b in zip(self.answer_buckets, other.answer_buckets)
        ]
        self.composition.update(other.composition)
        self.records_skipped += other.records_skipped
        self.count += other.count

    def _length_stats(self, accs: dict[str, SeriesAccumulator]) -> LengthStats:
        count = accs["qa_chars"].count
        return LengthStats(
            count=count, series={name: accs[name].summary() for name in SERIES_NAMES}
        )

    def report(self) -> StatsReport:
        total = self.count
        def pct(counts: list[int]) -> list[float]:
            if total == 0:
                return [0.0] * len(counts)
            return [100.0 * c / total for c in counts]

        buckets = BucketTable(
            boundaries=self.boundaries,
            qa_counts=list(self.qa_buckets),
            qa_percentages=pct(self.qa_buckets),
            answer_counts=list(self.answer_buckets),
            answer_percentages=pct(self.answer_buckets),
        )
        return StatsReport(
            overall=self._length_stats(self.overall),
            by_relation={
                rel: self._length_stats(accs) for rel, accs in self.by_relation.items()
            },
            buckets=buckets,
            composition=dict(self.composition),
            composition_proportions={
                rel: (c / total if total else 0.0) for rel, c in self.composition.items()
            },
            records_skipped=self.records_skipped,
        )


def compute_stats(
    records: Iterable[dict], boundaries: Sequence[int] = DEFAULT_BUCKET_BOUNDARIES
) -> StatsReport:
    """Single-pass statistics over a dataset record stream."""
    acc = StatsAccumulator(boundaries)
    for record in records:
        acc.add_record(record)
    return acc.report()


def bucket_lengths(
    records: Iterable[dict], boundaries: Sequence[int] = DEFAULT_BUCKET_BOUNDARIES
) -> BucketTable:
    """Bucketed char-length distribution only (subset of compute_stats)."""
    return compute_stats(records, boundaries).buckets


def _format_row(cells: list[str], widths: list[int]) -> str:
    return "  ".join(cell.rjust(width) for cell, width in zip(cells, widths))


def render_report(report: StatsReport, fmt: str = "json") -> str:
    """Render a StatsReport as machine JSON or an aligned text table."""
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if fmt != "table":
        raise ValueError(f"unknown report format: {fmt!r}")

    lines: list[str] = []
    lines.append(f"records: {report.overall.count}  (skipped: {report.records_skipped})")
    lines.append("")
    lines.append("composition:")
    for relation, count in sorted(report.composition.items()):
        share = report.composition_proportions.get(relation, 0.0)
        lines.append(f"  {relation}: {count} ({100.0 * share:.1f}%)")
    lines.append("")

    header = ["series", "count", "mean", "std", "min", "p5", "p25", "p50", "p75", "p95", "max"]
    sections = [("overall", report.overall)] + sorted(report.by_relation.items())
    for name, stats in sections:
        lines.append(f"{name}:")
        rows = [header]
        for series_name in SERIES_NAMES:
            s = stats.series.get(series_name, SeriesSummary())
            if s.count == 0:
                rows.append([series_name, "0"] + ["-"] * 9)
                continue
            rows.append(
                [
                    series_name,
                    str(s.count),
                    f"{s.mean:.1f}",
                    f"{s.std:.1f}",
                    str(s.min),
                    str(s.p5),
                    str(s.p25),
                    str(s.p50),
                    str(s.p75),
                    str(s.p95),
                    str(s.max),
                ]
            )
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        for row in rows:
            lines.append("  " + _format_row(row, widths))
        lines.append("")

    lines.append("buckets (chars):")
    rows = [["range", "qa_count", "qa_%", "answer_count", "answer_%"]]
    for i, label in enumerate(report.buckets.labels()):
        rows.append(
            [
                label,
                str(report.buckets.qa_counts[i]),
                f"{report.buckets.qa_percentages[i]:.1f}",
                str(report.buckets.answer_counts[i]),
                f"{report.buckets.answer_percentages[i]:.1f}",
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    for row in rows:
        lines.append("  " + _format_row(row, widths))
    return "\n".join(lines)
