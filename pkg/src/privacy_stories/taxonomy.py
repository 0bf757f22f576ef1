"""Hierarchical privacy-behavior taxonomy: loading, lookup, and tree-distance credit.

The taxonomy is a three-rooted forest (actions, data types, purposes). A
predicted label earns partial credit against a gold label when the two lie on
one ancestor/descendant chain inside the same category: credit = 1/(1+d) for
edge distance d, so an exact match scores 1 and a parent/child pair scores 0.5.
Labels on different branches or in different categories score 0.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional

_WHITESPACE_RE = re.compile(r"\s+")


class Category(str, Enum):
    ACTION = "actions"
    DATA_TYPE = "data_types"
    PURPOSE = "purposes"


ROOT_NAMES = {
    Category.ACTION: "Actions",
    Category.DATA_TYPE: "Data Types",
    Category.PURPOSE: "Purposes",
}


class TaxonomyError(ValueError):
    """Raised when a taxonomy file violates the tree invariants."""


def normalize_name(raw: str) -> str:
    """Case-fold, trim, and collapse internal whitespace."""
    return _WHITESPACE_RE.sub(" ", raw.strip()).casefold()


@dataclass(eq=False)
class TaxonomyNode:
    id: str
    name: str
    category: Category
    parent: Optional["TaxonomyNode"] = None
    children: list["TaxonomyNode"] = field(default_factory=list)
    verb: Optional[str] = None

    @property
    def is_root(self) -> bool:
        return self.parent is None

    @property
    def depth(self) -> int:
        d = 0
        node = self
        while node.parent is not None:
            node = node.parent
            d += 1
        return d

    def path(self) -> str:
        parts = []
        node: Optional[TaxonomyNode] = self
        while node is not None:
            parts.append(node.name)
            node = node.parent
        return "/".join(reversed(parts))

    def __repr__(self) -> str:
        return f"TaxonomyNode({self.name!r}, {self.category.value})"


class Taxonomy:
    """Immutable three-rooted label tree with normalized-name lookup."""

    def __init__(self, roots: dict[Category, TaxonomyNode], version: str):
        if set(roots) != set(Category):
            missing = [c.value for c in Category if c not in roots]
            raise TaxonomyError(f"taxonomy must have one root per category; missing {missing}")
        self.roots = roots
        self.version = version
        self._by_name: dict[str, TaxonomyNode] = {}
        for root in roots.values():
            for node in _walk(root):
                key = normalize_name(node.name)
                if not key:
                    raise TaxonomyError(f"empty node name at {node.path()}")
                if key in self._by_name:
                    raise TaxonomyError(
                        f"duplicate label {node.name!r}: {self._by_name[key].path()} vs {node.path()}"
                    )
                self._by_name[key] = node

    def __len__(self) -> int:
        return len(self._by_name)

    def __iter__(self) -> Iterator[TaxonomyNode]:
        return iter(self._by_name.values())

    def labels(self, category: Category) -> list[TaxonomyNode]:
        """All nodes of a category in tree order, excluding the category root."""
        return [n for n in _walk(self.roots[category]) if not n.is_root]

    def category_counts(self) -> dict[Category, int]:
        return {c: len(self.labels(c)) for c in Category}

    def find_label(self, raw: str) -> Optional[TaxonomyNode]:
        """Exact lookup by normalized name; never fuzzy-matches."""
        return self._by_name.get(normalize_name(raw))

    def action_verb(self, node: TaxonomyNode) -> str:
        return node.verb if node.verb else node.name.casefold()

    def action_for_verb(self, verb: str) -> Optional[TaxonomyNode]:
        key = normalize_name(verb)
        for node in self.labels(Category.ACTION):
            if normalize_name(self.action_verb(node)) == key:
                return node
        return None

    def _require(self, node: TaxonomyNode) -> None:
        if self._by_name.get(normalize_name(node.name)) is not node:
            raise TaxonomyError(f"node {node.name!r} does not belong to this taxonomy")

    def tree_distance(self, a: TaxonomyNode, b: TaxonomyNode) -> Optional[int]:
        """Edge count between two nodes on one ancestor/descendant chain.

        Returns None when the nodes sit on different branches or in different
        categories; chains never cross the category roots.
        """
        self._require(a)
        self._require(b)
        if a.category is not b.category:
            return None
        da, db = a.depth, b.depth
        lower, upper, dist = (a, b, da - db) if da >= db else (b, a, db - da)
        node = lower
        for _ in range(dist):
            assert node.parent is not None
            node = node.parent
        return dist if node is upper else None

    def credit(self, predicted: TaxonomyNode, gold: TaxonomyNode) -> Fraction:
        """Distance-discounted label credit in [0, 1], exact rational."""
        d = self.tree_distance(predicted, gold)
        if d is None:
            return Fraction(0)
        return Fraction(1, 1 + d)


def _walk(node: TaxonomyNode) -> Iterator[TaxonomyNode]:
    yield node
    for child in node.children:
        yield from _walk(child)


def _build_node(raw: dict, category: Category, parent: TaxonomyNode, path: str) -> TaxonomyNode:
    if not isinstance(raw, dict):
        raise TaxonomyError(f"node under {path} must be an object, got {type(raw).__name__}")
    name = raw.get("name")
    if not isinstance(name, str) or not name.strip():
        raise TaxonomyError(f"node under {path} is missing a non-empty 'name'")
    here = f"{path}/{name}"
    children = raw.get("children", [])
    if not isinstance(children, list):
        raise TaxonomyError(f"'children' of {here} must be a list")
    verb = raw.get("verb")
    if verb is not None and not isinstance(verb, str):
        raise TaxonomyError(f"'verb' of {here} must be a string")
    node = TaxonomyNode(
        id=f"{category.value}:{normalize_name(name)}",
        name=name.strip(),
        category=category,
        parent=parent,
        verb=verb,
    )
    node.children = [_build_node(c, category, node, here) for c in children]
    return node


def load_taxonomy(source: bytes | str) -> Taxonomy:
    """Parse a taxonomy file and validate every tree invariant.

    The file is JSON with a top-level ``version`` and three arrays
    (``actions``, ``data_types``, ``purposes``) of ``{name, children}`` nodes
    nested recursively; action nodes may carry a ``verb`` used when rendering
    stories.
    """
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"malformed taxonomy file: {exc}") from exc
    if not isinstance(raw, dict):
        raise TaxonomyError("taxonomy file must be a JSON object")
    version = raw.get("version")
    if not isinstance(version, str) or not version:
        raise TaxonomyError("taxonomy file must carry a non-empty 'version' string")

    roots: dict[Category, TaxonomyNode] = {}
    for category in Category:
        entries = raw.get(category.value)
        if not isinstance(entries, list):
            raise TaxonomyError(f"taxonomy file must contain an array {category.value!r}")
        root_name = ROOT_NAMES[category]
        root = TaxonomyNode(
            id=f"{category.value}:__root__",
            name=root_name,
            category=category,
        )
        root.children = [_build_node(e, category, root, category.value) for e in entries]
        roots[category] = root
    return Taxonomy(roots, version)


def load_taxonomy_file(path: str | Path) -> Taxonomy:
    return load_taxonomy(Path(path).read_bytes())


def default_taxonomy_path() -> Path:
    """Path of the taxonomy file shipped with the package."""
    return Path(str(resources.files("privacy_stories").joinpath("data/taxonomy.json")))


def load_default_taxonomy() -> Taxonomy:
    return load_taxonomy_file(default_taxonomy_path())
