"""HTTP service for the story review workflow.

Serves run data for side-by-side display (document text, gold annotations,
generated stories, raw responses), records per-story and per-document
judgments plus pairwise response preferences, and aggregates sessions into
the agreement report. Optionally hosts the compiled review UI.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..parsing import ParsedAnnotation
from ..stories import diagnose_story, render_story
from ..taxonomy import Category
from .aggregate import aggregate_review
from .models import ReviewError, RunData, load_run, story_count
from .store import SessionStore


class CreateSessionBody(BaseModel):
    run_id: str
    reviewer_id: str = Field(min_length=1)


class JudgmentBody(BaseModel):
    document_id: str
    story_index: Optional[int] = None
    q1_accurate: Optional[bool] = None
    q2_missing_behaviors: Optional[bool] = None
    q3_missing_stories: Optional[str] = None


class PreferenceBody(BaseModel):
    document_id: str
    chosen_response_index: int
    rejected_response_index: int


def discover_runs(data_dir: str | Path) -> list[RunData]:
    """Load every run directory under data_dir (or data_dir itself)."""
    data_dir = Path(data_dir)
    if (data_dir / "run.json").exists():
        return [load_run(data_dir)]
    runs = []
    for child in sorted(data_dir.iterdir()):
        if child.is_dir() and (child / "run.json").exists():
            runs.append(load_run(child))
    if not runs:
        raise ReviewError(f"no run directories found under {data_dir}")
    return runs


def _gold_payload(run: RunData, document_id: str) -> Optional[dict]:
    gold = run.manifest.gold.get(document_id)
    if gold is None:
        return None
    return {
        "actions": sorted(gold.actions),
        "data_types": sorted(gold.data_types),
        "purposes": sorted(gold.purposes),
        "stories": [
            {
                "text": render_story(s, run.taxonomy),
                "action": s.action,
                "data_types": list(s.data_types),
                "purposes": list(s.purposes),
            }
            for s in gold.stories
        ],
    }


def _story_payload(run: RunData, ann: ParsedAnnotation) -> list[dict]:
    gold = run.manifest.gold.get(ann.document_id)
    gold_keys = {s.key() for s in gold.stories} if gold else set()
    stories = []
    for index, line in enumerate(ann.story_lines):
        entry: dict = {"story_index": index, "raw": line.raw}
        if line.triple is not None:
            entry["parsed"] = {
                "action": line.triple.action,
                "data_types": list(line.triple.data_types),
                "purposes": list(line.triple.purposes),
            }
            entry["matches_gold"] = line.triple.key() in gold_keys
        else:
            diagnostic = diagnose_story(line.raw, run.taxonomy)
            entry["parsed"] = None
            entry["matches_gold"] = False
            entry["problems"] = diagnostic.problems
        stories.append(entry)
    return stories


def create_app(data_dir: str | Path, ui_dir: Optional[str | Path] = None) -> FastAPI:
    runs = {run.run_id: run for run in discover_runs(data_dir)}
    stores = {run_id: SessionStore(run) for run_id, run in runs.items()}

    app = FastAPI(title="privacy-stories review service")

    def get_run(run_id: str) -> RunData:
        run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return run

    def find_session(session_id: str) -> tuple[SessionStore, str]:
        for store in stores.values():
            if session_id in store.sessions:
                return store, session_id
        raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.get("/runs")
    def list_runs() -> dict:
        return {
            "runs": [
                {
                    "run_id": run.run_id,
                    "document_count": len(run.manifest.documents),
                    "story_count": story_count(run),
                    "model_name": run.metadata.get("model_name"),
                    "template_version": run.metadata.get("template_version"),
                    "taxonomy_version": run.metadata.get("taxonomy_version"),
                    "session_count": len(stores[run.run_id].sessions),
                }
                for run in sorted(runs.values(), key=lambda r: r.run_id)
            ]
        }

    @app.get("/runs/{run_id}/documents")
    def list_documents(run_id: str) -> dict:
        run = get_run(run_id)
        entries = []
        for doc_id in run.document_ids():
            doc = run.manifest.document(doc_id)
            ann = run.reviewed_annotation(doc_id)
            gold = run.manifest.gold.get(doc_id)
            entries.append(
                {
                    "id": doc_id,
                    "file_type": doc.file_type.value,
                    "app_name": doc.app_name,
                    "story_count": len(ann.story_lines) if ann else 0,
                    "gold_story_count": len(gold.stories) if gold else 0,
                    "response_indices": run.response_indices(doc_id),
                }
            )
        return {"run_id": run_id, "documents": entries}

    @app.get("/documents/{document_id}")
    def get_document(document_id: str, run: Optional[str] = None) -> dict:
        if run is not None:
            candidates = [get_run(run)]
        else:
            candidates = [
                r for r in runs.values() if document_id in set(r.document_ids())
            ]
            if len(candidates) > 1:
                raise HTTPException(
                    status_code=400,
                    detail=f"document {document_id!r} exists in several runs; "
                    "pass ?run=",
                )
        for run_data in candidates:
            if document_id not in set(run_data.document_ids()):
                continue
            doc = run_data.manifest.document(document_id)
            ann = run_data.reviewed_annotation(document_id)
            responses = []
            for index in run_data.response_indices(document_id):
                resp_ann = run_data.annotations.get((document_id, index))
                responses.append(
                    {
                        "response_index": index,
                        "text": run_data.responses.get((document_id, index), ""),
                        "rationale": resp_ann.rationale if resp_ann else "",
                        "stories": [
                            line.raw for line in resp_ann.story_lines
                        ]
                        if resp_ann
                        else [],
                    }
                )
            labels = {}
            if ann is not None:
                for cat in Category:
                    labels[cat.value] = {
                        "matched": ann.matched(cat),
                        "invented": ann.invented(cat),
                    }
            return {
                "id": document_id,
                "run_id": run_data.run_id,
                "file_type": doc.file_type.value,
                "app_name": doc.app_name,
                "text": doc.text,
                "gold": _gold_payload(run_data, document_id),
                "labels": labels,
                "stories": _story_payload(run_data, ann) if ann else [],
                "responses": responses,
            }
        raise HTTPException(
            status_code=404, detail=f"unknown document {document_id!r}"
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        run = get_run(body.run_id)
        store = stores[run.run_id]
        try:
            session = store.create_session(body.reviewer_id)
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return session.to_json()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        store, sid = find_session(session_id)
        return store.sessions[sid].to_json()

    @app.post("/sessions/{session_id}/judgments")
    def post_judgment(session_id: str, body: JudgmentBody) -> dict:
        store, sid = find_session(session_id)
        is_story = body.story_index is not None
        is_document = body.q3_missing_stories is not None
        if is_story == is_document:
            raise HTTPException(
                status_code=400,
                detail="send either a story judgment (story_index, q1, q2) "
                "or a document judgment (q3_missing_stories)",
            )
        try:
            if is_story:
                if body.q1_accurate is None or body.q2_missing_behaviors is None:
                    raise ReviewError(
                        "story judgments need q1_accurate and q2_missing_behaviors"
                    )
                session = store.record_story_judgment(
                    sid,
                    body.document_id,
                    body.story_index,
                    body.q1_accurate,
                    body.q2_missing_behaviors,
                )
            else:
                session = store.record_document_judgment(
                    sid, body.document_id, body.q3_missing_stories
                )
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return session.to_json()

    @app.post("/sessions/{session_id}/preferences")
    def post_preference(session_id: str, body: PreferenceBody) -> dict:
        store, sid = find_session(session_id)
        try:
            session = store.record_preference(
                sid,
                body.document_id,
                body.chosen_response_index,
                body.rejected_response_index,
            )
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return session.to_json()

    @app.get("/runs/{run_id}/review-report")
    def review_report(run_id: str) -> dict:
        run = get_run(run_id)
        store = stores[run_id]
        try:
            return aggregate_review(run, list(store.sessions.values()))
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    else:

        @app.get("/", include_in_schema=False)
        def index() -> dict:
            return {
                "service": "privacy-stories review",
                "endpoints": [
                    "GET /runs",
                    "GET /runs/{run_id}/documents",
                    "GET /documents/{document_id}",
                    "POST /sessions",
                    "GET /sessions/{session_id}",
                    "POST /sessions/{session_id}/judgments",
                    "POST /sessions/{session_id}/preferences",
                    "GET /runs/{run_id}/review-report",
                ],
            }

    return app
