"""Tolerant parsing of tagged model responses into structured annotations.

Model output is expected to carry labeled blocks (actions, data types,
purposes, stories, rationale) wrapped in XML-style tags. Real responses
drift: tags change case, blocks repeat, closing tags go missing, list items
grow bullets and numbering. The parser absorbs all of that, records a
warning for each repair, and never raises on malformed text.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .prompts import TAG_ACTIONS, TAG_DATA_TYPES, TAG_PURPOSES, TAG_REASONING, TAG_STORIES
from .stories import StoryTriple, parse_story
from .taxonomy import Category, Taxonomy, normalize_name

KNOWN_TAGS = (TAG_ACTIONS, TAG_DATA_TYPES, TAG_PURPOSES, TAG_STORIES, TAG_REASONING)

CATEGORY_TAGS = {
    Category.ACTION: TAG_ACTIONS,
    Category.DATA_TYPE: TAG_DATA_TYPES,
    Category.PURPOSE: TAG_PURPOSES,
}

# leading bullets / numbering: "- x", "* x", "3. x", "(2) x", "2) x"
_MARKER_RE = re.compile(r"^\s*(?:[-*•‣●]+|\(?\d{1,3}[.)]|\d{1,3}\))\s+")


@dataclass(frozen=True)
class StoryLine:
    """One line from the stories block, with its parse if it has one."""

    raw: str
    triple: Optional[StoryTriple] = None

    @property
    def is_parsed(self) -> bool:
        return self.triple is not None


@dataclass
class ParsedAnnotation:
    document_id: str
    response_index: int = 0
    labels: dict[Category, list[str]] = field(default_factory=dict)
    hallucinated: dict[Category, list[str]] = field(default_factory=dict)
    story_lines: list[StoryLine] = field(default_factory=list)
    rationale: str = ""
    warnings: list[str] = field(default_factory=list)

    def matched(self, category: Category) -> list[str]:
        return list(self.labels.get(category, []))

    def invented(self, category: Category) -> list[str]:
        return list(self.hallucinated.get(category, []))

    def story_triples(self) -> list[StoryTriple]:
        return [line.triple for line in self.story_lines if line.triple is not None]


def strip_list_marker(line: str) -> str:
    """Remove leading bullet/number markers and wrapping quote characters."""
    text = _MARKER_RE.sub("", line.strip())
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'`":
        text = text[1:-1].strip()
    return text


def extract_tag_block(text: str, tag: str, warnings: list[str]) -> Optional[str]:
    """Find the content of <tag>...</tag>, repairing common damage.

    Repeated blocks are concatenated. An unclosed block runs until the next
    known tag or the end of the response. Returns None when the tag does not
    appear at all.
    """
    open_re = re.compile(rf"<\s*{re.escape(tag)}\s*>", re.IGNORECASE)
    close_re = re.compile(rf"</\s*{re.escape(tag)}\s*>", re.IGNORECASE)
    any_tag_re = re.compile(
        "|".join(rf"</?\s*{re.escape(t)}\s*>" for t in KNOWN_TAGS), re.IGNORECASE
    )

    pieces: list[str] = []
    pos = 0
    while True:
        opened = open_re.search(text, pos)
        if opened is None:
            break
        closed = close_re.search(text, opened.end())
        if closed is not None:
            pieces.append(text[opened.end() : closed.start()])
            pos = closed.end()
            continue
        nxt = any_tag_re.search(text, opened.end())
        end = nxt.start() if nxt else len(text)
        pieces.append(text[opened.end() : end])
        warnings.append(f"unclosed <{tag}> block; read until next tag or end of text")
        pos = end

    if not pieces:
        return None
    if len(pieces) > 1:
        warnings.append(f"tag <{tag}> appeared {len(pieces)} times; blocks merged")
    return "\n".join(pieces)


def _block_lines(block: str) -> list[str]:
    lines = []
    for raw in block.splitlines():
        cleaned = strip_list_marker(raw)
        if cleaned:
            lines.append(cleaned)
    return lines


def _collect_labels(
    block: Optional[str],
    category: Category,
    taxonomy: Taxonomy,
    warnings: list[str],
) -> tuple[list[str], list[str]]:
    """Split a label block into taxonomy matches and inventions.

    Both lists are deduplicated on the normalized form and keep first-seen
    order, so every distinct label in the block lands in exactly one list.
    """
    matched: list[str] = []
    invented: list[str] = []
    seen: set[str] = set()
    if block is None:
        return matched, invented
    for line in _block_lines(block):
        key = normalize_name(line)
        if key in seen:
            continue
        seen.add(key)
        node = taxonomy.find_label(line)
        if node is not None and node.category == category:
            matched.append(node.name)
        else:
            if node is not None:
                warnings.append(
                    f"label {line!r} belongs to {node.category.value}, "
                    f"not {category.value}; counted as invented"
                )
            invented.append(line)
    return matched, invented


def parse_response(
    text: str,
    taxonomy: Taxonomy,
    document_id: str,
    response_index: int = 0,
) -> ParsedAnnotation:
    """Parse one model response into labels, stories, and a rationale."""
    warnings: list[str] = []
    ann = ParsedAnnotation(document_id=document_id, response_index=response_index)

    for category, tag in CATEGORY_TAGS.items():
        block = extract_tag_block(text, tag, warnings)
        if block is None:
            warnings.append(f"tag <{tag}> missing from response")
        matched, invented = _collect_labels(block, category, taxonomy, warnings)
        ann.labels[category] = matched
        ann.hallucinated[category] = invented

    stories_block = extract_tag_block(text, TAG_STORIES, warnings)
    if stories_block is None:
        warnings.append(f"tag <{TAG_STORIES}> missing from response")
    else:
        for line in _block_lines(stories_block):
            triple = parse_story(line, taxonomy)
            if triple is None:
                warnings.append(f"story line did not parse: {line!r}")
            ann.story_lines.append(StoryLine(raw=line, triple=triple))

    rationale_block = extract_tag_block(text, TAG_REASONING, warnings)
    ann.rationale = rationale_block.strip() if rationale_block else ""

    ann.warnings = warnings
    return ann


def annotation_to_json(ann: ParsedAnnotation) -> dict:
    return {
        "document_id": ann.document_id,
        "response_index": ann.response_index,
        "labels": {cat.value: ann.labels.get(cat, []) for cat in Category},
        "hallucinated": {cat.value: ann.hallucinated.get(cat, []) for cat in Category},
        "stories": [
            {
                "raw": line.raw,
                "parsed": None
                if line.triple is None
                else {
                    "action": line.triple.action,
                    "data_types": list(line.triple.data_types),
                    "purposes": list(line.triple.purposes),
                },
            }
            for line in ann.story_lines
        ],
        "rationale": ann.rationale,
        "warnings": ann.warnings,
    }


def annotation_from_json(raw: dict) -> ParsedAnnotation:
    ann = ParsedAnnotation(
        document_id=raw["document_id"],
        response_index=raw.get("response_index", 0),
    )
    for cat in Category:
        ann.labels[cat] = list(raw["labels"].get(cat.value, []))
        ann.hallucinated[cat] = list(raw["hallucinated"].get(cat.value, []))
    for entry in raw.get("stories", []):
        parsed = entry.get("parsed")
        triple = None
        if parsed is not None:
            triple = StoryTriple(
                action=parsed["action"],
                data_types=tuple(parsed["data_types"]),
                purposes=tuple(parsed["purposes"]),
            )
        ann.story_lines.append(StoryLine(raw=entry["raw"], triple=triple))
    ann.rationale = raw.get("rationale", "")
    ann.warnings = list(raw.get("warnings", []))
    return ann
