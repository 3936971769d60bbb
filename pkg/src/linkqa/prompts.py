"""Prompt templates and passage preparation for QA synthesis.

Three template families: the cross-document joint QA prompt (the default),
a single-document conversational-QA baseline, and a three-document variant
that adds the bridging hub page as a third passage. Placeholders are
substituted with str.replace so passage text containing braces is safe.
"""

from __future__ import annotations

from .ingest import Document

CROSS_DOC_TEMPLATE = """You are an expert data generator for language model pretraining.

Below are two related Wikipedia passages:

[Passage A]
{text_a}

[Passage B]
{text_b}

Task:
1) Generate high-quality synthetic QA pairs that REQUIRE information from BOTH Passage A and Passage B to answer.
2) The Answer MUST begin with a step-by-step reasoning process. This reasoning must explicitly bridge facts from both passages.
3) Do not use external knowledge.
4) CRITICAL CONSTRAINT: The generated QA pair will be used to train a model WITHOUT these passages provided as context. Therefore, you MUST act as an omniscient AI stating absolute facts from your own inherent knowledge.
   - DO NOT use any attribution phrases like 'According to Passage A', 'Passage B mentions', 'As stated in the text', or 'Based on the provided documents'.
   - State the facts directly and confidently.

Output format (strict):
Question: [Insert a complex question that bridges facts from both passages]
Answer: [Acting as an omniscient AI, directly state all necessary factual premises from both passages, and logically synthesize them to derive the conclusion.]
Therefore, [State the final, concise answer.]"""

SINGLE_DOC_TEMPLATE = """Convert the following paragraph into a conversational format with multiple tags of "Question:" followed by "Answer:".

{text}"""

THREE_DOC_TEMPLATE = """You are an expert data generator for language model pretraining.

Below are three related Wikipedia passages:

[Passage A]
{text_a}

[Passage B]
{text_b}

[Passage C]
{text_c}

Task:
1) Generate high-quality synthetic QA pairs that REQUIRE information from BOTH Passage A and Passage B to answer, and that additionally REQUIRE supporting information from Passage C.
2) The Answer MUST begin with a step-by-step reasoning process. This reasoning must explicitly bridge facts from all three passages.
3) Do not use external knowledge.
4) CRITICAL CONSTRAINT: The generated QA pair will be used to train a model WITHOUT these passages provided as context. Therefore, you MUST act as an omniscient AI stating absolute facts from your own inherent knowledge.
   - DO NOT use any attribution phrases like 'According to Passage A', 'Passage B mentions', 'As stated in the text', or 'Based on the provided documents'.
   - State the facts directly and confidently.

Output format (strict):
Question: [Insert a complex question that bridges facts from all three passages]
Answer: [Acting as an omniscient AI, directly state all necessary factual premises from all three passages, and logically synthesize them to derive the conclusion.]
Therefore, [State the final, concise answer.]"""

# Window, in characters, searched backwards for a whitespace cut point.
_BOUNDARY_WINDOW = 200


def truncate_passage(text: str, limit: int) -> str:
    """First ``limit`` characters of ``text``, preferring a word boundary.

    Text at or under the limit is returned unchanged. Otherwise the cut is
    moved back to the last whitespace within the final 200 characters of
    the truncated prefix, when one exists, so words are not split.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    if len(text) <= limit:
        return text
    cut = text[:limit]
    window_start = max(0, limit - _BOUNDARY_WINDOW)
    for idx in range(limit - 1, window_start - 1, -1):
        if cut[idx].isspace():
            return cut[:idx].rstrip()
    return cut


def _require_text(doc: Document, role: str) -> None:
    if not doc.text:
        raise ValueError(f"{role} document {doc.doc_id!r} has empty text")


def render_cross_doc_prompt(doc_a: Document, doc_b: Document, passage_char_limit: int) -> str:
    """Joint QA prompt over two passages, truncated to the char limit."""
    _require_text(doc_a, "passage A")
    _require_text(doc_b, "passage B")
    prompt = CROSS_DOC_TEMPLATE.replace(
        "{text_a}", truncate_passage(doc_a.text, passage_char_limit)
    )
    return prompt.replace("{text_b}", truncate_passage(doc_b.text, passage_char_limit))


def render_single_doc_prompt(doc: Document, passage_char_limit: int | None = None) -> str:
    """Single-document conversational-QA baseline prompt."""
    _require_text(doc, "source")
    text = doc.text
    if passage_char_limit is not None:
        text = truncate_passage(text, passage_char_limit)
    return SINGLE_DOC_TEMPLATE.replace("{text}", text)


def render_three_doc_prompt(
    doc_a: Document,
    doc_b: Document,
    doc_hub: Document | None,
    passage_char_limit: int,
) -> str:
    """Three-passage variant: the bridging hub page rides along as passage C."""
    if doc_hub is None:
        raise ValueError("three-document prompt requires a hub document")
    _require_text(doc_a, "passage A")
    _require_text(doc_b, "passage B")
    _require_text(doc_hub, "passage C")
    prompt = THREE_DOC_TEMPLATE.replace(
        "{text_a}", truncate_passage(doc_a.text, passage_char_limit)
    )
    prompt = prompt.replace("{text_b}", truncate_passage(doc_b.text, passage_char_limit))
    return prompt.replace("{text_c}", truncate_passage(doc_hub.text, passage_char_limit))
