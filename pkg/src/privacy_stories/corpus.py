"""Document ingestion, file-type classification, and the gold-annotation manifest."""
from __future__ import annotations

import fnmatch
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .stories import StoryTriple
from .taxonomy import Category, Taxonomy


class FileType(str, Enum):
    SOFTWARE_CODE_SPEC = "software_code_spec"
    USER_DEVELOPER_GUIDE = "user_developer_guide"
    ARCHITECTURE_DB_DESIGN = "architecture_db_design"
    README = "readme"


# Filename heuristics tried in order when no hint pattern matches.
_NAME_HEURISTICS = [
    (re.compile(r"^readme", re.IGNORECASE), FileType.README),
    (re.compile(r"(spec|requirement)", re.IGNORECASE), FileType.SOFTWARE_CODE_SPEC),
    (re.compile(r"(architecture|arch[_-]|uml|schema|db[_-]design|data[_-]model|erd)", re.IGNORECASE),
     FileType.ARCHITECTURE_DB_DESIGN),
    (re.compile(r"(guide|manual|tutorial|handbook|faq)", re.IGNORECASE), FileType.USER_DEVELOPER_GUIDE),
]


@dataclass(frozen=True)
class Document:
    id: str
    path: str
    text: str
    file_type: FileType
    app_name: Optional[str] = None

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"document {self.id!r} has empty text")


@dataclass
class GoldAnnotation:
    document_id: str
    actions: set[str] = field(default_factory=set)
    data_types: set[str] = field(default_factory=set)
    purposes: set[str] = field(default_factory=set)
    stories: list[StoryTriple] = field(default_factory=list)

    def labels(self, category: Category) -> list[str]:
        # sorted so every consumer sees one stable order
        return sorted(
            {
                Category.ACTION: self.actions,
                Category.DATA_TYPE: self.data_types,
                Category.PURPOSE: self.purposes,
            }[category]
        )


@dataclass
class Manifest:
    documents: list[Document] = field(default_factory=list)
    gold: dict[str, GoldAnnotation] = field(default_factory=dict)
    taxonomy_version: str = ""
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        ids = [d.id for d in self.documents]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate document ids in manifest: {dupes}")
        unknown = sorted(set(self.gold) - set(ids))
        if unknown:
            raise ValueError(f"gold annotations reference unknown documents: {unknown}")

    def document(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.id == doc_id:
                return d
        raise KeyError(f"unknown document id {doc_id!r}")

    def gold_for(self, doc_id: str) -> Optional[GoldAnnotation]:
        return self.gold.get(doc_id)


def document_id_for(rel_path: Path) -> str:
    """Stable id derived from the path relative to the ingest root."""
    stem = rel_path.with_suffix("")
    slug = re.sub(r"[^a-z0-9]+", "-", str(stem).casefold()).strip("-")
    return slug or "doc"


def classify_file(rel_path: Path, type_hints: Optional[dict[str, FileType]] = None) -> tuple[FileType, bool]:
    """Pick a file type from hint patterns, then filename heuristics.

    Returns (file_type, heuristic_missed): the flag is True when neither a
    hint nor a heuristic matched and the default was applied.
    """
    posix = rel_path.as_posix()
    if type_hints:
        for pattern, file_type in type_hints.items():
            if fnmatch.fnmatch(posix, pattern) or fnmatch.fnmatch(rel_path.name, pattern):
                return file_type, False
    for regex, file_type in _NAME_HEURISTICS:
        if regex.search(rel_path.name):
            return file_type, False
    return FileType.USER_DEVELOPER_GUIDE, True


def ingest_documents(
    root_dir: str | Path,
    type_hints: Optional[dict[str, FileType]] = None,
    taxonomy_version: str = "",
) -> Manifest:
    """Build a manifest from every text file under root_dir.

    Files that cannot be decoded as UTF-8 or are empty are skipped with a
    recorded warning. Ordering is stable (sorted by relative path), so the
    same tree always yields the same manifest.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"ingest root {root} is not a readable directory")

    documents: list[Document] = []
    warnings: list[str] = []
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root)
        try:
            text = path.read_bytes().decode("utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            warnings.append(f"skipped {rel.as_posix()}: {exc}")
            continue
        if not text.strip():
            warnings.append(f"skipped {rel.as_posix()}: empty file")
            continue
        file_type, missed = classify_file(rel, type_hints)
        if missed:
            warnings.append(
                f"{rel.as_posix()}: no type hint or filename heuristic matched, "
                f"defaulting to {file_type.value}"
            )
        app_name = rel.parts[0] if len(rel.parts) > 1 else None
        documents.append(
            Document(
                id=document_id_for(rel),
                path=rel.as_posix(),
                text=text,
                file_type=file_type,
                app_name=app_name,
            )
        )
    return Manifest(documents=documents, taxonomy_version=taxonomy_version, warnings=warnings)


@dataclass(frozen=True)
class GoldViolation:
    document_id: str
    field: str
    value: str
    reason: str

    def __str__(self) -> str:
        return f"{self.document_id}: {self.field} {self.value!r} {self.reason}"


def _check_label(t: Taxonomy, category: Category, raw: str) -> Optional[str]:
    node = t.find_label(raw)
    if node is None:
        return "not in taxonomy"
    if node.category is not category:
        return f"is a {node.category.value} label, expected {category.value}"
    return None


def validate_gold(m: Manifest, t: Taxonomy) -> list[GoldViolation]:
    """Check every gold label and story component against the taxonomy."""
    violations: list[GoldViolation] = []
    for doc_id in sorted(m.gold):
        gold = m.gold[doc_id]
        for category, fname in (
            (Category.ACTION, "actions"),
            (Category.DATA_TYPE, "data_types"),
            (Category.PURPOSE, "purposes"),
        ):
            for raw in sorted(gold.labels(category)):
                reason = _check_label(t, category, raw)
                if reason:
                    violations.append(GoldViolation(doc_id, fname, raw, reason))
        for i, story in enumerate(gold.stories):
            fname = f"stories[{i}]"
            if not story.data_types or not story.purposes:
                violations.append(GoldViolation(doc_id, fname, "", "story with empty component list"))
            reason = _check_label(t, Category.ACTION, story.action)
            if reason:
                violations.append(GoldViolation(doc_id, fname, story.action, reason))
            for raw in story.data_types:
                reason = _check_label(t, Category.DATA_TYPE, raw)
                if reason:
                    violations.append(GoldViolation(doc_id, fname, raw, reason))
            for raw in story.purposes:
                reason = _check_label(t, Category.PURPOSE, raw)
                if reason:
                    violations.append(GoldViolation(doc_id, fname, raw, reason))
    return violations


# ---------------------------------------------------------------------------
# Manifest (de)serialization. Document text is stored by reference (path,
# relative to the manifest file) with an optional embedded copy for archival.


def _story_to_json(s: StoryTriple) -> dict:
    return {"action": s.action, "data_types": list(s.data_types), "purposes": list(s.purposes)}


def _story_from_json(raw: dict) -> StoryTriple:
    return StoryTriple(
        action=raw["action"],
        data_types=tuple(raw["data_types"]),
        purposes=tuple(raw["purposes"]),
    )


def save_manifest(m: Manifest, path: str | Path, embed_text: bool = False) -> None:
    path = Path(path)
    doc = {
        "taxonomy_version": m.taxonomy_version,
        "documents": [
            {
                "id": d.id,
                "path": d.path,
                "file_type": d.file_type.value,
                "app_name": d.app_name,
                **({"text": d.text} if embed_text else {}),
            }
            for d in m.documents
        ],
        "gold": {
            doc_id: {
                "actions": sorted(g.actions),
                "data_types": sorted(g.data_types),
                "purposes": sorted(g.purposes),
                "stories": [_story_to_json(s) for s in g.stories],
            }
            for doc_id, g in sorted(m.gold.items())
        },
        "warnings": m.warnings,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    documents = []
    for entry in raw.get("documents", []):
        text = entry.get("text")
        if text is None:
            doc_path = Path(entry["path"])
            if not doc_path.is_absolute():
                doc_path = path.parent / doc_path
            text = doc_path.read_text(encoding="utf-8")
        documents.append(
            Document(
                id=entry["id"],
                path=entry["path"],
                text=text,
                file_type=FileType(entry["file_type"]),
                app_name=entry.get("app_name"),
            )
        )
    gold = {
        doc_id: GoldAnnotation(
            document_id=doc_id,
            actions=set(g.get("actions", [])),
            data_types=set(g.get("data_types", [])),
            purposes=set(g.get("purposes", [])),
            stories=[_story_from_json(s) for s in g.get("stories", [])],
        )
        for doc_id, g in raw.get("gold", {}).items()
    }
    return Manifest(
        documents=documents,
        gold=gold,
        taxonomy_version=raw.get("taxonomy_version", ""),
        warnings=list(raw.get("warnings", [])),
    )


def attach_gold(m: Manifest, gold_file: str | Path) -> Manifest:
    """Merge a gold sidecar (JSON keyed by document id) into a manifest."""
    raw = json.loads(Path(gold_file).read_text(encoding="utf-8"))
    known = {d.id for d in m.documents}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"gold sidecar references unknown documents: {unknown}")
    gold = {}
    for doc_id, g in raw.items():
        gold[doc_id] = GoldAnnotation(
            document_id=doc_id,
            actions=set(g.get("actions", [])),
            data_types=set(g.get("data_types", [])),
            purposes=set(g.get("purposes", [])),
            stories=[_story_from_json(s) for s in g.get("stories", [])],
        )
    return Manifest(
        documents=m.documents,
        gold=gold,
        taxonomy_version=m.taxonomy_version,
        warnings=m.warnings,
    )
