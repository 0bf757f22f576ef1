"""Render and parse privacy stories against the fixed sentence template.

A privacy story is the sentence ``We <action verb> <data types> for
<purposes>.`` with multi-item lists joined by ", " and a final "and". Parsing
is the exact inverse: it only succeeds when every component resolves to a
taxonomy label, so anything else is reported as malformed by the caller.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .taxonomy import Category, Taxonomy, TaxonomyNode, normalize_name

# Leading subject, optionally with the spelled-out application parenthetical.
_SUBJECT_RE = re.compile(r"^\s*we\s+(?:\(i\.e\.,?\s*the\s+application\)\s*)?", re.IGNORECASE)


@dataclass(frozen=True)
class StoryTriple:
    """One privacy story: an action applied to data types for purposes."""

    action: str
    data_types: tuple[str, ...]
    purposes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "data_types", tuple(self.data_types))
        object.__setattr__(self, "purposes", tuple(self.purposes))

    def key(self) -> tuple[str, frozenset[str], frozenset[str]]:
        """Order-insensitive identity used for exact story matching."""
        return (
            normalize_name(self.action),
            frozenset(normalize_name(d) for d in self.data_types),
            frozenset(normalize_name(p) for p in self.purposes),
        )


def _join(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _resolve(t: Taxonomy, raw: str, category: Category) -> TaxonomyNode:
    node = t.find_label(raw)
    if node is None or node.category is not category or node.is_root:
        raise ValueError(f"story component {raw!r} is not a {category.value} label")
    return node


def render_story(s: StoryTriple, t: Taxonomy) -> str:
    """Render a validated triple into the story sentence, canonical casing."""
    if not s.data_types or not s.purposes:
        raise ValueError("a story needs at least one data type and one purpose")
    action = _resolve(t, s.action, Category.ACTION)
    data_types = [_resolve(t, d, Category.DATA_TYPE).name for d in s.data_types]
    purposes = [_resolve(t, p, Category.PURPOSE).name for p in s.purposes]
    return f"We {t.action_verb(action)} {_join(data_types)} for {_join(purposes)}."


def _parse_label_list(segment: str, t: Taxonomy, category: Category) -> list[str] | None:
    """Split a rendered list back into labels by longest-prefix matching.

    Label names may themselves contain " and " (e.g. "Health and Fitness"),
    so a blind split on separators is wrong; instead match taxonomy labels
    against the text with backtracking, longest candidates first.
    """
    labels = sorted(t.labels(category), key=lambda n: -len(n.name))
    lowered = [(n.name.casefold(), n.name) for n in labels]

    def match(rest: str, acc: list[str]) -> list[str] | None:
        rest_cf = rest.casefold()
        for label_cf, label in lowered:
            if not rest_cf.startswith(label_cf):
                continue
            tail = rest[len(label_cf):]
            if tail == "":
                return acc + [label]
            for sep in (", ", " and "):
                if tail.startswith(sep):
                    found = match(tail[len(sep):], acc + [label])
                    if found is not None:
                        return found
        return None

    return match(segment.strip(), [])


def parse_story(line: str, t: Taxonomy) -> StoryTriple | None:
    """Parse one story sentence back into a triple; None when it does not fit.

    The last standalone " for " splits data types from purposes, since
    purposes are far more likely to contain the word than data-type names.
    """
    m = _SUBJECT_RE.match(line)
    if not m:
        return None
    rest = line[m.end():].strip()
    if rest.endswith("."):
        rest = rest[:-1]

    action = None
    rest_cf = rest.casefold()
    candidates: list[tuple[str, TaxonomyNode]] = []
    for node in t.labels(Category.ACTION):
        candidates.append((t.action_verb(node).casefold(), node))
        candidates.append((node.name.casefold(), node))
    for verb_cf, node in sorted(candidates, key=lambda c: -len(c[0])):
        if rest_cf.startswith(verb_cf + " "):
            action = node
            rest = rest[len(verb_cf) + 1:]
            break
    if action is None:
        return None

    pivot = None
    for m in re.finditer(r" for ", rest, flags=re.IGNORECASE):
        pivot = m
    if pivot is None:
        return None
    left, right = rest[: pivot.start()], rest[pivot.end():]
    data_types = _parse_label_list(left, t, Category.DATA_TYPE)
    purposes = _parse_label_list(right, t, Category.PURPOSE)
    if not data_types or not purposes:
        return None
    return StoryTriple(action.name, tuple(data_types), tuple(purposes))


@dataclass(frozen=True)
class StoryDiagnostic:
    """Best-effort component breakdown of a story line for review display."""

    raw: str
    triple: StoryTriple | None
    unresolved: tuple[str, ...] = field(default=())


def diagnose_story(line: str, t: Taxonomy) -> StoryDiagnostic:
    """Parse a story line, and on failure name the segments that do not resolve.

    Used by the review surface to flag hallucinated labels inside generated
    stories. Falls back to a naive structural split, so the unresolved list is
    advisory rather than exact.
    """
    triple = parse_story(line, t)
    if triple is not None:
        return StoryDiagnostic(raw=line, triple=triple)

    unresolved: list[str] = []
    m = _SUBJECT_RE.match(line)
    rest = line[m.end():].strip() if m else line.strip()
    if rest.endswith("."):
        rest = rest[:-1]
    if m and " for " in rest:
        verb, _, rest = rest.partition(" ")
        if t.action_for_verb(verb) is None and t.find_label(verb) is None:
            unresolved.append(verb)
        left, right = rest.rsplit(" for ", 1)
        for segment in (left, right):
            for piece in re.split(r",\s+|\s+and\s+", segment):
                piece = piece.strip()
                if piece and t.find_label(piece) is None:
                    unresolved.append(piece)
    return StoryDiagnostic(raw=line, triple=None, unresolved=tuple(unresolved))
