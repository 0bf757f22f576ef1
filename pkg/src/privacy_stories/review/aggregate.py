"""Fold review sessions into the agreement report.

For every generated story the report counts Yes-on-accuracy judgments from
all sessions ("both annotators" in the two-reviewer setup) and from at
least one. Gold stories that no generated story matched are listed as the
recall gap.
"""
from __future__ import annotations

from typing import Sequence

from ..evaluation import compare_stories
from ..stories import StoryTriple, render_story
from .models import ReviewError, ReviewSession, RunData


def _agreement_counts(
    sessions: Sequence[ReviewSession], keys: list[tuple[str, int]]
) -> dict[str, int]:
    """Count stories by Q1/Q2 agreement across sessions."""
    counts = {
        "accurate_all": 0,
        "accurate_any": 0,
        "missing_behaviors_all": 0,
        "missing_behaviors_any": 0,
    }
    for key in keys:
        q1_votes = []
        q2_votes = []
        for session in sessions:
            judgment = session.story_judgments.get(key)
            if judgment is None:
                q1_votes.append(False)
                q2_votes.append(False)
            else:
                q1_votes.append(judgment[0])
                q2_votes.append(judgment[1])
        if all(q1_votes):
            counts["accurate_all"] += 1
        if any(q1_votes):
            counts["accurate_any"] += 1
        if all(q2_votes):
            counts["missing_behaviors_all"] += 1
        if any(q2_votes):
            counts["missing_behaviors_any"] += 1
    return counts


def _unmatched_gold(run: RunData, document_id: str) -> list[StoryTriple]:
    gold = run.manifest.gold.get(document_id)
    if gold is None or not gold.stories:
        return []
    ann = run.reviewed_annotation(document_id)
    predicted = ann.story_triples() if ann is not None else []
    return list(compare_stories(predicted, list(gold.stories)).missing_gold)


def aggregate_review(run: RunData, sessions: Sequence[ReviewSession]) -> dict:
    """Build the review report across one run's sessions."""
    if not sessions:
        raise ReviewError("no sessions to aggregate")
    for session in sessions:
        if session.run_id != run.run_id:
            raise ReviewError(
                f"session {session.session_id!r} belongs to run "
                f"{session.run_id!r}, not {run.run_id!r}"
            )
    sessions = sorted(sessions, key=lambda s: s.session_id)

    stories_by_type: dict[str, list[tuple[str, int]]] = {}
    all_keys: list[tuple[str, int]] = []
    for doc_id in run.document_ids():
        ann = run.reviewed_annotation(doc_id)
        if ann is None:
            continue
        file_type = run.manifest.document(doc_id).file_type.value
        for index in range(len(ann.story_lines)):
            stories_by_type.setdefault(file_type, []).append((doc_id, index))
            all_keys.append((doc_id, index))

    rows = {}
    for file_type in sorted(stories_by_type):
        keys = stories_by_type[file_type]
        rows[file_type] = dict(
            _agreement_counts(sessions, keys), total_stories=len(keys)
        )
    overall = dict(_agreement_counts(sessions, all_keys), total_stories=len(all_keys))

    gold_total = 0
    missing_entries = []
    for doc_id in run.document_ids():
        gold = run.manifest.gold.get(doc_id)
        if gold is None:
            continue
        gold_total += len(gold.stories)
        for triple in _unmatched_gold(run, doc_id):
            missing_entries.append(
                {
                    "document_id": doc_id,
                    "story": render_story(triple, run.taxonomy),
                    "action": triple.action,
                    "data_types": list(triple.data_types),
                    "purposes": list(triple.purposes),
                }
            )

    q3_texts = []
    for session in sessions:
        for doc_id, text in sorted(session.document_judgments.items()):
            if text.strip():
                q3_texts.append(
                    {
                        "session_id": session.session_id,
                        "document_id": doc_id,
                        "text": text,
                    }
                )

    return {
        "run_id": run.run_id,
        "sessions": [s.session_id for s in sessions],
        "per_file_type": rows,
        "overall": overall,
        "gold_stories": {
            "total": gold_total,
            "never_matched": len(missing_entries),
            "missing": missing_entries,
        },
        "q3_missing_stories": q3_texts,
    }
