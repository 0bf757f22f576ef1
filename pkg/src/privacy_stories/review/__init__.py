from .models import ReviewSession, RunData, load_run, story_count
from .store import SessionStore
from .aggregate import aggregate_review

__all__ = [
    "ReviewSession",
    "RunData",
    "SessionStore",
    "aggregate_review",
    "load_run",
    "story_count",
]
