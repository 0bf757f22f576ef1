"""Regenerate the committed test fixtures.

Builds a 25-document corpus with gold annotations, a recorded response
store for two responses per document, and a two-session review plan. All
content is derived from fixed tables and index arithmetic, so reruns are
byte-identical. The script asserts every count the test suite relies on:

    documents        25 = 8 spec + 9 guide + 6 architecture + 2 readme
    gold labels      50 actions, 60 data types, 61 purposes
    gold stories     93 (18 documents with 4, 7 with 3)
    generated lines  120 (57 match a gold story, 63 do not; 36 gold unmatched)
    review votes     41 stories accurate per both sessions, 88 per at least one
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from privacy_stories import (
    Category,
    ModelConfig,
    ReplayStore,
    StoryTriple,
    attach_gold,
    build_prompt,
    fingerprint,
    ingest_documents,
    load_default_taxonomy,
    parse_response,
    render_story,
    select_icl_example,
    validate_gold,
)
from privacy_stories.corpus import FileType, classify_file

APPS = [
    "acorn-ledger", "breeze-mail", "cider-notes", "drift-photos", "ember-chat",
    "fable-reader", "glacier-sync", "harbor-pay", "ivy-planner", "jasper-maps",
    "kelp-fitness", "lumen-docs", "meadow-crm", "nimbus-store", "otter-stream",
    "pebble-games", "quill-survey", "reef-social", "sable-wallet", "thistle-home",
    "umber-travel", "velvet-radio", "willow-health", "xylo-music", "yarrow-news",
]

# file type by document index; totals 8 / 9 / 6 / 2
TYPE_PATTERN = [
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.ARCHITECTURE_DB_DESIGN,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.ARCHITECTURE_DB_DESIGN,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.ARCHITECTURE_DB_DESIGN,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.ARCHITECTURE_DB_DESIGN,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.ARCHITECTURE_DB_DESIGN,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.ARCHITECTURE_DB_DESIGN,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.README,
    FileType.SOFTWARE_CODE_SPEC, FileType.USER_DEVELOPER_GUIDE, FileType.USER_DEVELOPER_GUIDE,
    FileType.README,
]

FILENAMES = {
    FileType.SOFTWARE_CODE_SPEC: "spec.md",
    FileType.USER_DEVELOPER_GUIDE: "user-guide.md",
    FileType.ARCHITECTURE_DB_DESIGN: "architecture.md",
    FileType.README: "readme.md",
}

ACTION_PAIRS = [("Collect", "Process"), ("Process", "Share"), ("Collect", "Share")]
INVENTED_LABEL = "Telemetry Beacon"
MODEL_NAME = "fixture-model"


def doc_labels(i: int, data_types: list[str], purposes: list[str]) -> dict:
    """Deterministic label assignment for document index i."""
    n = len(data_types)
    m = len(purposes)
    dts = [data_types[(3 * i) % n], data_types[(3 * i + 7) % n], data_types[(3 * i + 19) % n]]
    purps = [purposes[(2 * i) % m], purposes[(2 * i + 5) % m], purposes[(2 * i + 11) % m]]
    extra_dts = [data_types[(3 * i + 1) % n], data_types[(3 * i + 2) % n], data_types[(3 * i + 4) % n]]
    extra_purps = [purposes[(2 * i + 1) % m], purposes[(2 * i + 3) % m], purposes[(2 * i + 7) % m]]
    actions = ACTION_PAIRS[i % 3]
    extra_action = next(a for a in ("Collect", "Process", "Share") if a not in actions)
    return {
        "actions": list(actions),
        "data_types": dts[: 3 if i < 10 else 2],
        "purposes": purps[: 3 if i < 11 else 2],
        "extra_action": extra_action,
        "extra_data_types": extra_dts,
        "extra_purposes": extra_purps,
    }


def gold_stories(i: int, labels: dict) -> list[StoryTriple]:
    a1, a2 = labels["actions"]
    d = labels["data_types"]
    p = labels["purposes"]
    stories = [
        StoryTriple(a1, (d[0],), (p[0],)),
        StoryTriple(a2, (d[1 % len(d)],), (p[1 % len(p)],)),
        StoryTriple(a1, tuple(d[:2]), (p[0],)),
        StoryTriple(a2, (d[0],), tuple(p[:2])),
    ][: 4 if i < 18 else 3]
    assert len({s.key() for s in stories}) == len(stories), f"doc {i}: duplicate gold story"
    return stories


def extra_stories(i: int, labels: dict) -> list[StoryTriple]:
    """Plausible but wrong stories; the action alone rules out a gold match."""
    xa = labels["extra_action"]
    xd = labels["extra_data_types"]
    xp = labels["extra_purposes"]
    stories = [
        StoryTriple(xa, (xd[0],), (xp[0],)),
        StoryTriple(xa, (xd[1],), (xp[1],)),
        StoryTriple(xa, (xd[2],), (xp[2],)),
    ][: 3 if i < 13 else 2]
    assert len({s.key() for s in stories}) == len(stories)
    return stories


def document_text(app: str, file_type: FileType, labels: dict, taxonomy) -> str:
    """A few paragraphs of plausible documentation mentioning the behaviors."""
    title = app.replace("-", " ").title()
    verb = {a: taxonomy.action_verb(taxonomy.find_label(a)) for a in labels["actions"]}
    a1, a2 = labels["actions"]
    dts = labels["data_types"]
    purps = labels["purposes"]
    dt_phrase = ", ".join(d.lower() for d in dts)
    purp_phrase = " and ".join(p.lower() for p in purps[:2])

    if file_type is FileType.SOFTWARE_CODE_SPEC:
        body = [
            f"# {title} Service Specification",
            "",
            f"This document describes the {title} backend modules and the data "
            f"contracts between them.",
            "",
            "## Data handling requirements",
            "",
            f"- The ingestion workers {verb[a1]} {dt_phrase} from client sessions.",
            f"- Stored records feed {purp_phrase}.",
            f"- The export job may {verb[a2]} aggregated views with the "
            f"reporting subsystem once consent checks pass.",
            "",
            "## Error handling",
            "",
            "All handlers must return typed errors; retries are capped at "
            "three attempts with exponential backoff.",
        ]
    elif file_type is FileType.USER_DEVELOPER_GUIDE:
        body = [
            f"# {title} Guide",
            "",
            f"Welcome to {title}. This guide walks through setup and daily use.",
            "",
            "## Getting started",
            "",
            f"Create an account and connect your device. During setup the app "
            f"will {verb[a1]} {dt_phrase} to personalize your experience.",
            "",
            "## Privacy settings",
            "",
            f"Under Settings > Privacy you can review how data supports "
            f"{purp_phrase}. Disabling a toggle stops the related processing, "
            f"though the service may still {verb[a2]} minimal records required "
            f"for operation.",
        ]
    elif file_type is FileType.ARCHITECTURE_DB_DESIGN:
        body = [
            f"# {title} Architecture Notes",
            "",
            "## Components",
            "",
            f"The platform splits into an API gateway, a worker pool, and a "
            f"column store. Workers {verb[a1]} {dt_phrase} into the events "
            f"table keyed by account id.",
            "",
            "## Data flows",
            "",
            f"Nightly jobs {verb[a2]} derived tables with partner systems to "
            f"support {purp_phrase}. Partitions roll over monthly; retention "
            f"is twelve months unless legal hold applies.",
        ]
    else:
        body = [
            f"# {title}",
            "",
            f"{title} is a small utility with a focused feature set.",
            "",
            f"It will {verb[a1]} {dt_phrase} when you opt in, strictly for "
            f"{purp_phrase}. Nothing is sold. The sync service may "
            f"{verb[a2]} backup snapshots with your other devices.",
            "",
            "See CONTRIBUTING for development setup.",
        ]
    return "\n".join(body) + "\n"


def response_text(
    i: int,
    index: int,
    labels: dict,
    gold: list[StoryTriple],
    extras: list[StoryTriple],
    taxonomy,
    app: str,
) -> str:
    """Synthetic model output in the tag format, with mild format noise."""
    bullet = "- " if index == 0 else "* "

    def block(name: str, lines: list[str]) -> str:
        return "\n".join([f"<{name}>"] + lines + [f"</{name}>"])

    actions = sorted(labels["actions"])
    dts = sorted(labels["data_types"])
    purps = sorted(labels["purposes"])
    if index == 0 and i % 3 == 1:
        # generalize one data type to its parent: partial credit, not a miss
        for k, d in enumerate(dts):
            parent = taxonomy.find_label(d).parent
            if parent is not None and not parent.is_root and parent.name not in dts:
                dts[k] = parent.name
                break
    if index == 0 and i % 7 == 3 and len(purps) > 1:
        purps = purps[:-1]
    if index == 0 and i % 5 == 0:
        dts = dts + [INVENTED_LABEL]

    if index == 0:
        matched = gold[: 3 if i < 7 else 2]
        noise = extras
    else:
        matched = gold[:2]
        noise = [
            StoryTriple(
                labels["extra_action"],
                tuple(labels["extra_data_types"][:2]),
                (labels["extra_purposes"][0],),
            )
        ]
    story_lines = [render_story(s, taxonomy) for s in matched + noise]

    reason = (
        f"The {app} document states these flows directly; the stories restate "
        f"each action with its data and purpose."
        if index == 0
        else f"Second reading of the {app} document; kept only the flows with "
        f"explicit wording."
    )
    return "\n".join(
        [
            block("ACTIONS", [bullet + a for a in actions]),
            block("DATA_TYPES", [bullet + d for d in dts]),
            block("PURPOSES", [bullet + p for p in purps]),
            block("STORIES", story_lines),
            block("R", [reason]),
        ]
    ) + "\n"


def build_review_plan(story_keys: list[tuple[str, int]], doc_ids: list[str]) -> dict:
    """Two sessions of votes hitting the pinned agreement counts."""
    judgments = {"alice": [], "bada": []}
    for k, (doc_id, index) in enumerate(story_keys):
        if k < 41:
            votes = (True, True)
        elif k < 88:
            votes = (True, False) if k % 2 == 0 else (False, True)
        else:
            votes = (False, False)
        for reviewer, vote in zip(("alice", "bada"), votes):
            judgments[reviewer].append(
                {
                    "document_id": doc_id,
                    "story_index": index,
                    "q1_accurate": vote,
                    "q2_missing_behaviors": (k % 6 == 0) if reviewer == "alice" else (k % 9 == 0),
                }
            )

    sessions = []
    for reviewer in ("alice", "bada"):
        doc_judgments = []
        preferences = []
        for n, doc_id in enumerate(doc_ids):
            if reviewer == "alice":
                doc_judgments.append(
                    {
                        "document_id": doc_id,
                        "q3_missing_stories": "Stories about retention and "
                        "account deletion flows are absent.",
                    }
                )
                preferences.append(
                    {
                        "document_id": doc_id,
                        "chosen_response_index": 0,
                        "rejected_response_index": 1,
                    }
                )
            else:
                if n % 2 == 0:
                    doc_judgments.append(
                        {
                            "document_id": doc_id,
                            "q3_missing_stories": "Coverage looks complete "
                            "except for rare admin flows.",
                        }
                    )
                preferences.append(
                    {
                        "document_id": doc_id,
                        "chosen_response_index": 1 if n % 2 == 0 else 0,
                        "rejected_response_index": 0 if n % 2 == 0 else 1,
                    }
                )
        sessions.append(
            {
                "reviewer_id": reviewer,
                # apply in this order: a session closes at its last story judgment
                "document_judgments": doc_judgments,
                "preferences": preferences,
                "story_judgments": judgments[reviewer],
            }
        )

    both = sum(
        1
        for a, b in zip(judgments["alice"], judgments["bada"])
        if a["q1_accurate"] and b["q1_accurate"]
    )
    any_yes = sum(
        1
        for a, b in zip(judgments["alice"], judgments["bada"])
        if a["q1_accurate"] or b["q1_accurate"]
    )
    assert both == 41, both
    assert any_yes == 88, any_yes
    return {
        "expected": {
            "total_stories": len(story_keys),
            "accurate_all": both,
            "accurate_any": any_yes,
            "preference_records": 2 * len(doc_ids),
        },
        "sessions": sessions,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"),
        help="fixtures directory to (re)build",
    )
    args = parser.parse_args()
    out = Path(args.out)

    taxonomy = load_default_taxonomy()
    assert taxonomy.find_label(INVENTED_LABEL) is None
    data_types = sorted(n.name for n in taxonomy.labels(Category.DATA_TYPE))
    purposes = sorted(n.name for n in taxonomy.labels(Category.PURPOSE))

    for stale in ("corpus", "replay_store"):
        shutil.rmtree(out / stale, ignore_errors=True)
    corpus_dir = out / "corpus"

    slugs = sorted(APPS)
    assert len(slugs) == 25 and len({s[0] for s in slugs}) == 25

    plans = []
    for i, slug in enumerate(slugs):
        file_type = TYPE_PATTERN[i]
        rel = Path(slug) / FILENAMES[file_type]
        assert classify_file(rel)[0] is file_type, rel
        labels = doc_labels(i, data_types, purposes)
        gold = gold_stories(i, labels)
        extras = extra_stories(i, labels)
        text = document_text(slug, file_type, labels, taxonomy)
        path = corpus_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        plans.append((i, slug, rel, file_type, labels, gold, extras))

    gold_json = {}
    for i, slug, rel, file_type, labels, gold, extras in plans:
        doc_id = "-".join([slug, FILENAMES[file_type].removesuffix(".md")]).replace(
            ".", "-"
        )
        gold_json[doc_id] = {
            "actions": sorted(labels["actions"]),
            "data_types": sorted(labels["data_types"]),
            "purposes": sorted(labels["purposes"]),
            "stories": [
                {
                    "action": s.action,
                    "data_types": list(s.data_types),
                    "purposes": list(s.purposes),
                }
                for s in gold
            ],
        }
    (out / "gold.json").write_text(
        json.dumps(gold_json, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    manifest = ingest_documents(corpus_dir, taxonomy_version=taxonomy.version)
    manifest = attach_gold(manifest, out / "gold.json")
    assert not validate_gold(manifest, taxonomy)
    assert [d.id for d in manifest.documents] == sorted(gold_json), "id order drift"

    by_type: dict[str, int] = {}
    for d in manifest.documents:
        by_type[d.file_type.value] = by_type.get(d.file_type.value, 0) + 1
    assert by_type == {
        "software_code_spec": 8,
        "user_developer_guide": 9,
        "architecture_db_design": 6,
        "readme": 2,
    }, by_type
    totals = {
        "actions": sum(len(g["actions"]) for g in gold_json.values()),
        "data_types": sum(len(g["data_types"]) for g in gold_json.values()),
        "purposes": sum(len(g["purposes"]) for g in gold_json.values()),
        "stories": sum(len(g["stories"]) for g in gold_json.values()),
    }
    assert totals == {"actions": 50, "data_types": 60, "purposes": 61, "stories": 93}, totals

    # record both responses for every document under the exact fingerprints
    # the annotate stage will ask for
    cfg = ModelConfig(provider_kind="replay", model_name=MODEL_NAME)
    store = ReplayStore(out / "replay_store")
    story_keys: list[tuple[str, int]] = []
    matched_total = 0
    plan_by_slug = {slug: entry for entry in plans for slug in [entry[1]]}
    for doc in manifest.documents:
        i, slug, rel, file_type, labels, gold, extras = plan_by_slug[doc.app_name]
        icl_id = select_icl_example(doc, manifest)[0]
        bundle = build_prompt(
            doc, taxonomy, icl=(manifest.document(icl_id), manifest.gold_for(icl_id))
        )
        for index in (0, 1):
            text = response_text(i, index, labels, gold, extras, taxonomy, slug)
            store.put(fingerprint(bundle, cfg, index), text, bundle, cfg, index)
            if index == 0:
                parsed = parse_response(text, taxonomy, doc.id, 0)
                assert len(parsed.story_lines) == len(parsed.story_triples())
                matched_total += 3 if i < 7 else 2
                for story_index in range(len(parsed.story_lines)):
                    story_keys.append((doc.id, story_index))

    assert len(story_keys) == 120, len(story_keys)
    assert matched_total == 57, matched_total
    assert len(store) == 50

    plan = build_review_plan(story_keys, [d.id for d in manifest.documents])
    plan["expected"]["gold_stories_total"] = totals["stories"]
    plan["expected"]["gold_stories_never_matched"] = totals["stories"] - matched_total
    plan["model_name"] = MODEL_NAME
    (out / "review_plan.json").write_text(
        json.dumps(plan, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    print(
        f"fixtures written to {out}: 25 documents, 50 recorded responses, "
        f"{len(story_keys)} stories, plan expects "
        f"{plan['expected']['accurate_all']}/{plan['expected']['accurate_any']}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
