"""Parse raw completions into QA instances and enforce output constraints.

Two constraints are mechanically checkable and enforced here: answers must
not attribute facts to the source passages (phrase blacklist), and answers
must carry the explicit "Therefore," conclusion marker. Length sanity
bounds catch degenerate generations. Cross-document dependency cannot be
checked without a second model and is enforced only via the prompt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

DEFAULT_ATTRIBUTION_BLACKLIST = (
    "according to passage",
    "passage a",
    "passage b",
    "passage c",
    "the passage",
    "as stated in the text",
    "based on the provided",
    "the provided documents",
    "mentioned in the text",
)

CHAIN_MARKER = "Therefore,"


@dataclass
class QaInstance:
    question: str
    answer: str
    relation: str
    a_title: str
    b_title: str
    hub_title: str | None = None
    source_pair_key: str = ""
    flags: set[str] = field(default_factory=set)


@dataclass
class ValidationPolicy:
    attribution_blacklist: tuple[str, ...] = DEFAULT_ATTRIBUTION_BLACKLIST
    require_therefore: bool = True
    min_answer_chars: int = 200
    max_answer_chars: int = 10_000
    min_question_chars: int = 45
    max_question_chars: int = 1_000
    on_violation: str = "reject"

    def __post_init__(self) -> None:
        if self.min_answer_chars >= self.max_answer_chars:
            raise ValueError("answer char bounds must satisfy min < max")
        if self.min_question_chars >= self.max_question_chars:
            raise ValueError("question char bounds must satisfy min < max")
        if self.on_violation not in ("reject", "flag"):
            raise ValueError("on_violation must be 'reject' or 'flag'")


@dataclass
class ValidationReport:
    completions_seen: int = 0
    completions_failed: int = 0
    blocks_dropped: int = 0
    instances_parsed: int = 0
    accepted: int = 0
    violations: dict[str, int] = field(default_factory=dict)
    suppressed_over_pair_limit: int = 0

    def count_violation(self, category: str) -> None:
        self.violations[category] = self.violations.get(category, 0) + 1

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["violations"] = dict(self.violations)
        return out


def split_qa_blocks(text: str) -> tuple[list[tuple[str, str]], int]:
    """Split completion text into (question, answer) blocks.

    A block opens at a line starting with "Question:"; its question runs to
    the first line starting with "Answer:", the answer to the next
    "Question:" line or end of text. Blocks missing either part are dropped
    and counted, as are orphan "Answer:" lines outside any block.
    """
    blocks: list[tuple[str, str]] = []
    dropped = 0
    question_lines: list[str] | None = None
    answer_lines: list[str] | None = None

    def close_block() -> None:
        nonlocal dropped, question_lines, answer_lines
        if question_lines is None:
            return
        question = "\n".join(question_lines).strip()
        answer = "\n".join(answer_lines).strip() if answer_lines is not None else ""
        if question and answer:
            blocks.append((question, answer))
        else:
            dropped += 1
        question_lines = None
        answer_lines = None

    for line in text.split("\n"):
        if line.startswith("Question:"):
            close_block()
            question_lines = [line[len("Question:") :]]
            answer_lines = None
        elif line.startswith("Answer:"):
            if question_lines is None:
                dropped += 1
                continue
            if answer_lines is None:
                answer_lines = [line[len("Answer:") :]]
            else:
                answer_lines.append(line)
        elif answer_lines is not None:
            answer_lines.append(line)
        elif question_lines is not None:
            question_lines.append(line)
    close_block()
    return blocks, dropped


def pair_key_of(record: dict) -> str:
    a, b = int(record["a"]), int(record["b"])
    lo, hi = (a, b) if a < b else (b, a)
    return f"{lo}-{hi}"


def parse_record(record: dict, report: ValidationReport | None = None) -> list[QaInstance]:
    """Parse one raw completion JSONL record into QA instances.

    Records that carry an error (failed synthesis) yield nothing. A record
    with zero valid blocks is a yield-0 pair, not an abort.
    """
    if report is not None:
        report.completions_seen += 1
    if record.get("error") is not None or not record.get("completion"):
        if report is not None:
            report.completions_failed += 1
        return []
    blocks, dropped = split_qa_blocks(record["completion"])
    if report is not None:
        report.blocks_dropped += dropped
        report.instances_parsed += len(blocks)
    return [
        QaInstance(
            question=question,
            answer=answer,
            relation=record["relation"],
            a_title=record.get("a_title", ""),
            b_title=record.get("b_title", ""),
            hub_title=record.get("hub_title"),
            source_pair_key=pair_key_of(record),
        )
        for question, answer in blocks
    ]


def check_omniscience(qa: QaInstance, policy: ValidationPolicy) -> list[str]:
    """Blacklist phrases found in the question or answer, case-insensitive."""
    haystack = f"{qa.question}\n{qa.answer}".lower()
    return [phrase for phrase in policy.attribution_blacklist if phrase.lower() in haystack]


def check_chain(qa: QaInstance, policy: ValidationPolicy) -> bool:
    """True iff the answer carries the literal conclusion marker (when required)."""
    if not policy.require_therefore:
        return True
    return CHAIN_MARKER in qa.answer


def _violations_of(qa: QaInstance, policy: ValidationPolicy) -> list[str]:
    found: list[str] = []
    if check_omniscience(qa, policy):
        found.append("attribution")
    if not check_chain(qa, policy):
        found.append("missing_chain")
    if len(qa.question) < policy.min_question_chars:
        found.append("question_too_short")
    elif len(qa.question) > policy.max_question_chars:
        found.append("question_too_long")
    if len(qa.answer) < policy.min_answer_chars:
        found.append("answer_too_short")
    elif len(qa.answer) > policy.max_answer_chars:
        found.append("answer_too_long")
    return found


def validate(
    instances: Iterable[QaInstance],
    policy: ValidationPolicy | None = None,
    report: ValidationReport | None = None,
    *,
    per_pair_limit: int | None = None,
) -> Iterator[QaInstance]:
    """Yield instances that pass the policy (reject mode) or all instances
    with flags populated (flag mode).

    In reject mode each rejected instance is counted under its first
    violation category, so category counts sum to input minus accepted.
    ``per_pair_limit`` retains at most that many accepted instances per
    source pair (the synthesis qa_per_pair knob applied downstream).
    """
    if policy is None:
        policy = ValidationPolicy()
    accepted_per_pair: dict[str, int] = {}
    for qa in instances:
        found = _violations_of(qa, policy)
        if found:
            if policy.on_violation == "reject":
                if report is not None:
                    report.count_violation(found[0])
                continue
            qa.flags.update(found)
            if report is not None:
                for category in found:
                    report.count_violation(category)
        if per_pair_limit is not None:
            seen = accepted_per_pair.get(qa.source_pair_key, 0)
            if seen >= per_pair_limit:
                if report is not None:
                    report.suppressed_over_pair_limit += 1
                continue
            accepted_per_pair[qa.source_pair_key] = seen + 1
        if report is not None:
            report.accepted += 1
        yield qa


def dataset_record(qa: QaInstance) -> dict:
    return {
        "question": qa.question,
        "answer": qa.answer,
        "relation": qa.relation,
        "pair": {"a": qa.a_title, "b": qa.b_title, "hub": qa.hub_title},
        "flags": sorted(qa.flags),
    }


def write_dataset(instances: Iterable[QaInstance], path: str) -> int:
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for qa in instances:
            fh.write(json.dumps(dataset_record(qa), ensure_ascii=False))
            fh.write("\n")
            written += 1
    return written


def read_dataset(path: str) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
