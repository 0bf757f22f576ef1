"""Append-only session persistence.

Every mutation becomes one JSON line in the run's sessions log; state is
rebuilt by replaying the log at startup. A crash can lose at most the line
being written, never corrupt earlier history. Mutations are serialized
through a single lock; reads work on the in-memory state.
"""
from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path

from .models import ReviewError, ReviewSession, RunData

LOG_NAME = "sessions.jsonl"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def session_id_for(run_id: str, reviewer_id: str) -> str:
    return f"{run_id}--{reviewer_id}"


class SessionStore:
    def __init__(self, run: RunData):
        self.run = run
        self.log_path = run.path / LOG_NAME
        self.sessions: dict[str, ReviewSession] = {}
        self._lock = threading.Lock()
        self._replay()

    def _assigned_stories(self) -> set[tuple[str, int]]:
        assigned = set()
        for doc_id in self.run.document_ids():
            ann = self.run.reviewed_annotation(doc_id)
            if ann is None:
                continue
            for index in range(len(ann.story_lines)):
                assigned.add((doc_id, index))
        return assigned

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                self._apply(json.loads(line))

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "session_created":
            session = ReviewSession(
                session_id=event["session_id"],
                run_id=event["run_id"],
                reviewer_id=event["reviewer_id"],
                assigned=self._assigned_stories(),
            )
            self.sessions[session.session_id] = session
            return
        session = self.sessions.get(event["session_id"])
        if session is None:
            raise ReviewError(
                f"event log references unknown session {event['session_id']!r}"
            )
        if kind == "story_judgment":
            key = (event["document_id"], event["story_index"])
            session.story_judgments[key] = (
                event["q1_accurate"],
                event["q2_missing_behaviors"],
            )
        elif kind == "document_judgment":
            session.document_judgments[event["document_id"]] = event[
                "q3_missing_stories"
            ]
        elif kind == "preference":
            session.preferences[event["document_id"]] = (
                event["chosen_response_index"],
                event["rejected_response_index"],
            )
        else:
            raise ReviewError(f"unknown event kind {kind!r} in session log")

    def _append(self, event: dict) -> None:
        event = dict(event, recorded_at=_now())
        with open(self.log_path, "a", encoding="utf-8", newline="\n") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")

    # mutations

    def create_session(self, reviewer_id: str) -> ReviewSession:
        if not reviewer_id or not reviewer_id.strip():
            raise ReviewError("reviewer_id must be non-empty")
        reviewer_id = reviewer_id.strip()
        session_id = session_id_for(self.run.run_id, reviewer_id)
        with self._lock:
            if session_id in self.sessions:
                raise ReviewError(
                    f"reviewer {reviewer_id!r} already has a session for this run"
                )
            event = {
                "event": "session_created",
                "session_id": session_id,
                "run_id": self.run.run_id,
                "reviewer_id": reviewer_id,
            }
            self._apply(event)
            self._append(event)
            return self.sessions[session_id]

    def _open_session(self, session_id: str) -> ReviewSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise ReviewError(f"unknown session {session_id!r}")
        if session.status != "open":
            raise ReviewError(f"session {session_id!r} is complete and closed")
        return session

    def record_story_judgment(
        self,
        session_id: str,
        document_id: str,
        story_index: int,
        q1_accurate: bool,
        q2_missing_behaviors: bool,
    ) -> ReviewSession:
        with self._lock:
            session = self._open_session(session_id)
            if (document_id, story_index) not in session.assigned:
                raise ReviewError(
                    f"document {document_id!r} has no story index {story_index}"
                )
            event = {
                "event": "story_judgment",
                "session_id": session_id,
                "document_id": document_id,
                "story_index": story_index,
                "q1_accurate": bool(q1_accurate),
                "q2_missing_behaviors": bool(q2_missing_behaviors),
            }
            self._apply(event)
            self._append(event)
            return session

    def record_document_judgment(
        self, session_id: str, document_id: str, q3_missing_stories: str
    ) -> ReviewSession:
        with self._lock:
            session = self._open_session(session_id)
            if document_id not in set(self.run.document_ids()):
                raise ReviewError(f"unknown document {document_id!r}")
            event = {
                "event": "document_judgment",
                "session_id": session_id,
                "document_id": document_id,
                "q3_missing_stories": str(q3_missing_stories),
            }
            self._apply(event)
            self._append(event)
            return session

    def record_preference(
        self,
        session_id: str,
        document_id: str,
        chosen_response_index: int,
        rejected_response_index: int,
    ) -> ReviewSession:
        with self._lock:
            session = self._open_session(session_id)
            if chosen_response_index == rejected_response_index:
                raise ReviewError("chosen and rejected response indices are equal")
            available = set(self.run.response_indices(document_id))
            for index in (chosen_response_index, rejected_response_index):
                if index not in available:
                    raise ReviewError(
                        f"document {document_id!r} has no response index {index}"
                    )
            event = {
                "event": "preference",
                "session_id": session_id,
                "document_id": document_id,
                "chosen_response_index": chosen_response_index,
                "rejected_response_index": rejected_response_index,
            }
            self._apply(event)
            self._append(event)
            return session
