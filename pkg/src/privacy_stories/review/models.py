"""Run data and session state for the human review workflow.

A run directory holds everything a reviewer needs: the manifest with
document text and gold annotations, the taxonomy snapshot, raw model
responses, and parsed annotations. Reviewers judge the stories of the
run's reviewed response (index 0) story by story.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..corpus import Manifest, load_manifest
from ..parsing import ParsedAnnotation, annotation_from_json
from ..taxonomy import Taxonomy, load_taxonomy_file

REVIEWED_RESPONSE_INDEX = 0


class ReviewError(ValueError):
    pass


@dataclass
class RunData:
    run_id: str
    path: Path
    manifest: Manifest
    taxonomy: Taxonomy
    metadata: dict
    annotations: dict[tuple[str, int], ParsedAnnotation]
    responses: dict[tuple[str, int], str]

    def document_ids(self) -> list[str]:
        return sorted(d.id for d in self.manifest.documents)

    def reviewed_annotation(self, document_id: str) -> Optional[ParsedAnnotation]:
        return self.annotations.get((document_id, REVIEWED_RESPONSE_INDEX))

    def response_indices(self, document_id: str) -> list[int]:
        return sorted(i for d, i in self.annotations if d == document_id)


def story_count(run: RunData) -> int:
    """Stories pending review: every story line of each reviewed response."""
    total = 0
    for doc_id in run.document_ids():
        ann = run.reviewed_annotation(doc_id)
        if ann is not None:
            total += len(ann.story_lines)
    return total


def load_run(path: str | Path) -> RunData:
    """Load one run directory; raises when required artifacts are missing."""
    path = Path(path)
    run_json = path / "run.json"
    manifest_path = path / "manifest.json"
    taxonomy_path = path / "taxonomy.json"
    for required in (run_json, manifest_path, taxonomy_path):
        if not required.exists():
            raise ReviewError(f"run directory {path} is missing {required.name}")
    metadata = json.loads(run_json.read_text(encoding="utf-8"))
    manifest = load_manifest(manifest_path)
    taxonomy = load_taxonomy_file(taxonomy_path)

    annotations: dict[tuple[str, int], ParsedAnnotation] = {}
    ann_dir = path / "annotations"
    if ann_dir.is_dir():
        for file in sorted(ann_dir.glob("*.json")):
            raw = json.loads(file.read_text(encoding="utf-8"))
            ann = annotation_from_json(raw)
            annotations[(ann.document_id, ann.response_index)] = ann

    responses: dict[tuple[str, int], str] = {}
    resp_dir = path / "responses"
    if resp_dir.is_dir():
        for file in sorted(resp_dir.glob("*.txt")):
            stem = file.stem  # "<document_id>.<response_index>"
            doc_id, _, idx = stem.rpartition(".")
            if not doc_id or not idx.isdigit():
                continue
            responses[(doc_id, int(idx))] = file.read_text(encoding="utf-8")

    return RunData(
        run_id=path.name,
        path=path,
        manifest=manifest,
        taxonomy=taxonomy,
        metadata=metadata,
        annotations=annotations,
        responses=responses,
    )


@dataclass
class ReviewSession:
    """One reviewer's pass over a run, replayed from the event log."""

    session_id: str
    run_id: str
    reviewer_id: str
    assigned: set[tuple[str, int]] = field(default_factory=set)
    story_judgments: dict[tuple[str, int], tuple[bool, bool]] = field(
        default_factory=dict
    )
    document_judgments: dict[str, str] = field(default_factory=dict)
    preferences: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "complete" if self.assigned <= set(self.story_judgments) else "open"

    def pending(self) -> list[tuple[str, int]]:
        return sorted(self.assigned - set(self.story_judgments))

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "run_id": self.run_id,
            "reviewer_id": self.reviewer_id,
            "status": self.status,
            "assigned_stories": len(self.assigned),
            "judged_stories": len(self.story_judgments),
            "pending": [
                {"document_id": d, "story_index": i} for d, i in self.pending()
            ],
            "story_judgments": [
                {
                    "document_id": d,
                    "story_index": i,
                    "q1_accurate": q1,
                    "q2_missing_behaviors": q2,
                }
                for (d, i), (q1, q2) in sorted(self.story_judgments.items())
            ],
            "document_judgments": [
                {"document_id": d, "q3_missing_stories": text}
                for d, text in sorted(self.document_judgments.items())
            ],
            "preferences": [
                {
                    "document_id": d,
                    "chosen_response_index": c,
                    "rejected_response_index": r,
                }
                for d, (c, r) in sorted(self.preferences.items())
            ],
        }
