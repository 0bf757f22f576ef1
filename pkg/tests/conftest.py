"""Shared fixtures: the bundled corpus, a fully executed run, and review helpers."""
import json
import shutil
from pathlib import Path

import pytest

from privacy_stories.cli import main as cli_main
from privacy_stories.review.models import RunData, load_run
from privacy_stories.review.store import SessionStore
from privacy_stories.taxonomy import Taxonomy, load_default_taxonomy

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def taxonomy() -> Taxonomy:
    return load_default_taxonomy()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def gold_data() -> dict:
    return json.loads((FIXTURES / "gold.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def review_plan() -> dict:
    return json.loads((FIXTURES / "review_plan.json").read_text(encoding="utf-8"))


def run_pipeline(base: Path) -> Path:
    """Drive ingest, replay annotation, and evaluation into base/run.

    The run directory basename is part of the run metadata, so callers that
    compare runs byte for byte must use the same basename; this helper fixes
    it to "run".
    """
    run = base / "run"
    argv = [
        "ingest",
        "--run-dir", str(run),
        "--docs", str(FIXTURES / "corpus"),
        "--gold", str(FIXTURES / "gold.json"),
    ]
    assert cli_main(argv) == 0
    argv = [
        "annotate",
        "--run-dir", str(run),
        "--replay",
        "--store", str(FIXTURES / "replay_store"),
        "--responses", "2",
        "--model", "fixture-model",
    ]
    assert cli_main(argv) == 0
    assert cli_main(["evaluate", "--run-dir", str(run)]) == 0
    return run


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory) -> Path:
    """A completed run over the bundled corpus; treat as read-only."""
    return run_pipeline(tmp_path_factory.mktemp("pipeline"))


@pytest.fixture
def run_copy(pipeline_run, tmp_path) -> Path:
    """Private mutable copy of the completed run."""
    dest = tmp_path / "run"
    shutil.copytree(pipeline_run, dest)
    return dest


def apply_review_plan(run: RunData, plan: dict) -> SessionStore:
    """Replay the scripted reviewer sessions through the store layer.

    Each scripted session records its document answers and preferences
    before the story judgments: a session closes at its last story judgment
    and rejects everything after that.
    """
    store = SessionStore(run)
    for spec in plan["sessions"]:
        session = store.create_session(spec["reviewer_id"])
        for j in spec["document_judgments"]:
            store.record_document_judgment(
                session.session_id, j["document_id"], j["q3_missing_stories"]
            )
        for p in spec["preferences"]:
            store.record_preference(
                session.session_id,
                p["document_id"],
                p["chosen_response_index"],
                p["rejected_response_index"],
            )
        for j in spec["story_judgments"]:
            store.record_story_judgment(
                session.session_id,
                j["document_id"],
                j["story_index"],
                j["q1_accurate"],
                j["q2_missing_behaviors"],
            )
    return store


@pytest.fixture
def reviewed_run(run_copy, review_plan) -> tuple[Path, SessionStore]:
    """Run copy with both scripted sessions fully applied."""
    run = load_run(run_copy)
    store = apply_review_plan(run, review_plan)
    return run_copy, store
