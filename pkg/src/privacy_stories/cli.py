"""Command-line pipeline driver.

Stages talk to each other only through files in the run directory, so
every stage can be rerun, diffed, or committed as a fixture:

    run/
      manifest.json      ingest: documents + gold, text embedded
      taxonomy.json      ingest: the label tree the run used
      run.json           metadata: model, template, fingerprints
      prompts/           annotate: one prompt bundle per document
      responses/         annotate: raw model text per document/response
      annotations/       annotate: parsed labels + stories
      report.json/.csv   evaluate
      sft.jsonl          export-sft (+ sidecars)
      preferences.jsonl  export-dpo (+ sidecar)
      sessions.jsonl     review-serve: append-only session events
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from .corpus import (
    FileType,
    Manifest,
    attach_gold,
    ingest_documents,
    load_manifest,
    save_manifest,
    validate_gold,
)
from .embeddings import RemoteEmbedder
from .evaluation import (
    aggregate,
    score_document,
    write_report_csv,
    write_report_json,
)
from .gateway import (
    DEFAULT_TEMPERATURE,
    ModelConfig,
    ReplayStore,
    complete,
    record,
)
from .parsing import annotation_from_json, annotation_to_json, parse_response
from .prompts import (
    TemplateOptions,
    build_prompt,
    bundle_to_json,
    load_template,
    select_icl_example,
)
from .taxonomy import (
    Category,
    Taxonomy,
    default_taxonomy_path,
    load_taxonomy_file,
)
from .training import SplitSpec, export_preferences, export_sft


class StageError(RuntimeError):
    """A stage precondition failed; the message says which."""


def _log(args, message: str) -> None:
    print(message, file=sys.stderr)


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    file = Path(path)
    if not file.exists():
        raise StageError(f"config file {path} does not exist")
    return json.loads(file.read_text(encoding="utf-8"))


def _setting(args, config: dict, key: str, default=None):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return config.get(key, default)


def _run_dir(args, config: dict) -> Path:
    value = _setting(args, config, "run_dir")
    if not value:
        raise StageError("--run-dir is required (or set run_dir in the config file)")
    return Path(value)


def _taxonomy_for_run(run_dir: Path) -> Taxonomy:
    path = run_dir / "taxonomy.json"
    if not path.exists():
        raise StageError(f"{path} missing; run `ingest` first")
    return load_taxonomy_file(path)


def _manifest_for_run(run_dir: Path) -> Manifest:
    path = run_dir / "manifest.json"
    if not path.exists():
        raise StageError(f"{path} missing; run `ingest` first")
    return load_manifest(path)


def _read_run_meta(run_dir: Path) -> dict:
    path = run_dir / "run.json"
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def _write_run_meta(run_dir: Path, meta: dict) -> None:
    (run_dir / "run.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# stage: ingest


def cmd_ingest(args) -> int:
    config = _load_config(args.config)
    run_dir = _run_dir(args, config)
    docs_dir = _setting(args, config, "docs")
    if not docs_dir:
        raise StageError("--docs is required")

    taxonomy_path = _setting(args, config, "taxonomy") or default_taxonomy_path()
    taxonomy = load_taxonomy_file(taxonomy_path)

    hints = None
    hints_path = _setting(args, config, "hints")
    if hints_path:
        raw = json.loads(Path(hints_path).read_text(encoding="utf-8"))
        hints = {pattern: FileType(value) for pattern, value in raw.items()}

    manifest = ingest_documents(docs_dir, hints, taxonomy_version=taxonomy.version)
    for warning in manifest.warnings:
        _log(args, f"ingest: {warning}")

    gold_path = _setting(args, config, "gold")
    if gold_path:
        manifest = attach_gold(manifest, gold_path)
        violations = validate_gold(manifest, taxonomy)
        if violations:
            for violation in violations[:20]:
                _log(args, f"gold: {violation}")
            raise StageError(f"gold annotations invalid ({len(violations)} problems)")

    run_dir.mkdir(parents=True, exist_ok=True)
    save_manifest(manifest, run_dir / "manifest.json", embed_text=True)
    shutil.copyfile(taxonomy_path, run_dir / "taxonomy.json")
    meta = _read_run_meta(run_dir)
    meta.update(
        {
            "run_id": run_dir.name,
            "taxonomy_version": taxonomy.version,
            "document_count": len(manifest.documents),
            "gold_document_count": len(manifest.gold),
        }
    )
    _write_run_meta(run_dir, meta)
    _log(
        args,
        f"ingest: wrote manifest with {len(manifest.documents)} documents "
        f"({len(manifest.gold)} gold-annotated) to {run_dir}",
    )
    return 0


# stage: annotate


def _model_config(args, config: dict) -> ModelConfig:
    model_cfg = dict(config.get("model", {}))
    if getattr(args, "model", None):
        model_cfg["model_name"] = args.model
    if getattr(args, "temperature", None) is not None:
        model_cfg["temperature"] = args.temperature
    store = _setting(args, config, "store")
    replay = bool(getattr(args, "replay", False)) or model_cfg.get("provider_kind") == "replay"
    return ModelConfig(
        provider_kind="replay" if replay else "remote_chat",
        model_name=model_cfg.get("model_name", "default"),
        temperature=model_cfg.get("temperature", DEFAULT_TEMPERATURE),
        max_output_tokens=model_cfg.get("max_output_tokens", 2048),
        store_path=str(store) if store else None,
    )


def cmd_annotate(args) -> int:
    config = _load_config(args.config)
    run_dir = _run_dir(args, config)
    manifest = _manifest_for_run(run_dir)
    taxonomy = _taxonomy_for_run(run_dir)
    template = load_template(_setting(args, config, "template"))

    mode = _setting(args, config, "mode", "full")
    responses_per_doc = int(_setting(args, config, "responses", 1))
    jobs = int(_setting(args, config, "jobs", 4))
    cfg = _model_config(args, config)

    if cfg.provider_kind == "replay" and not cfg.store_path:
        raise StageError("replay mode needs --store pointing at a response store")
    store = ReplayStore(cfg.store_path) if cfg.store_path else None

    # None means a fresh local tf-idf fit per document, which keeps example
    # selection independent of processing order
    provider = RemoteEmbedder() if _setting(args, config, "remote_embeddings") else None

    opts = TemplateOptions(mode=mode)
    documents = sorted(manifest.documents, key=lambda d: d.id)

    bundles = {}
    icl_map: dict[str, Optional[str]] = {}
    for doc in documents:
        if mode == "full":
            icl_id = select_icl_example(doc, manifest, provider)[0]
            icl_doc = manifest.document(icl_id)
            bundle = build_prompt(
                doc,
                taxonomy,
                icl=(icl_doc, manifest.gold_for(icl_id)),
                opts=opts,
                template=template,
            )
            icl_map[doc.id] = icl_id
        else:
            bundle = build_prompt(doc, taxonomy, opts=opts, template=template)
            icl_map[doc.id] = None
        bundles[doc.id] = bundle

    tasks = [
        (doc.id, index) for doc in documents for index in range(responses_per_doc)
    ]

    def run_task(task: tuple[str, int]):
        doc_id, index = task
        bundle = bundles[doc_id]
        if args.record:
            if store is None:
                raise StageError("--record needs --store to write into")
            return task, record(bundle, cfg, store, index)
        return task, complete(bundle, cfg, index, store=store)

    results = {}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for task, response in pool.map(run_task, tasks):
            results[task] = response
            _log(args, f"annotate: {task[0]} response {task[1]} done")

    prompts_dir = run_dir / "prompts"
    responses_dir = run_dir / "responses"
    annotations_dir = run_dir / "annotations"
    for directory in (prompts_dir, responses_dir, annotations_dir):
        directory.mkdir(parents=True, exist_ok=True)

    fingerprints: dict[str, dict[str, str]] = {}
    for doc in documents:
        bundle = bundles[doc.id]
        (prompts_dir / f"{doc.id}.json").write_text(
            json.dumps(bundle_to_json(bundle), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        for index in range(responses_per_doc):
            response = results[(doc.id, index)]
            (responses_dir / f"{doc.id}.{index}.txt").write_text(
                response.text, encoding="utf-8"
            )
            parsed = parse_response(response.text, taxonomy, doc.id, index)
            (annotations_dir / f"{doc.id}.{index}.json").write_text(
                json.dumps(annotation_to_json(parsed), indent=2, sort_keys=True)
                + "\n",
                encoding="utf-8",
            )
            fingerprints.setdefault(doc.id, {})[str(index)] = (
                response.request_fingerprint
            )

    meta = _read_run_meta(run_dir)
    meta.update(
        {
            "model_name": cfg.model_name,
            "temperature": cfg.temperature,
            "template_mode": mode,
            "template_version": template.template_version,
            "taxonomy_version": taxonomy.version,
            "response_indices": list(range(responses_per_doc)),
            "store_path": cfg.store_path,
            "fingerprints": fingerprints,
            "icl": icl_map,
        }
    )
    _write_run_meta(run_dir, meta)
    _log(
        args,
        f"annotate: {len(documents)} documents x {responses_per_doc} responses "
        f"written to {run_dir}",
    )
    return 0


# stage: evaluate


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    run_dir = _run_dir(args, config)
    manifest = _manifest_for_run(run_dir)
    taxonomy = _taxonomy_for_run(run_dir)
    annotations_dir = run_dir / "annotations"
    if not annotations_dir.is_dir():
        raise StageError(f"{annotations_dir} missing; run `annotate` first")

    index = int(_setting(args, config, "response_index", 0))
    penalize = bool(_setting(args, config, "penalize_invented", False))

    scores = []
    for doc_id in sorted(manifest.gold):
        path = annotations_dir / f"{doc_id}.{index}.json"
        if not path.exists():
            raise StageError(
                f"annotation {path.name} missing; run `annotate` with enough "
                f"responses first"
            )
        parsed = annotation_from_json(json.loads(path.read_text(encoding="utf-8")))
        scores.append(
            score_document(
                parsed,
                manifest.gold[doc_id],
                taxonomy,
                count_invented_as_predictions=penalize,
            )
        )
    if not scores:
        raise StageError("no gold-annotated documents to evaluate")

    meta = _read_run_meta(run_dir)
    report = aggregate(
        scores,
        manifest,
        metadata={
            "model_name": str(meta.get("model_name", "")),
            "template_mode": str(meta.get("template_mode", "")),
            "template_version": str(meta.get("template_version", "")),
            "taxonomy_version": str(meta.get("taxonomy_version", "")),
            "response_index": str(index),
        },
    )
    write_report_json(report, run_dir / "report.json")
    write_report_csv(report, run_dir / "report.csv")
    rendered = report.overall_micro
    _log(
        args,
        f"evaluate: {len(scores)} documents; overall micro F1 "
        f"{float(rendered.f1):.3f}; report.json and report.csv written",
    )
    return 0


# stage: export-sft


def cmd_export_sft(args) -> int:
    config = _load_config(args.config)
    run_dir = _run_dir(args, config)
    manifest = _manifest_for_run(run_dir)
    taxonomy = _taxonomy_for_run(run_dir)

    heldout_ids = _setting(args, config, "heldout_ids")
    if isinstance(heldout_ids, str):
        heldout_ids = [h for h in heldout_ids.split(",") if h]
    heldout_count = _setting(args, config, "heldout_count")
    seed = int(_setting(args, config, "seed", 13))
    split = SplitSpec(
        heldout_ids=tuple(heldout_ids or ()),
        heldout_count=int(heldout_count) if heldout_count is not None else None,
        seed=seed,
    )
    out = Path(_setting(args, config, "out") or run_dir / "sft.jsonl")
    summary = export_sft(manifest, taxonomy, split, out)
    _log(
        args,
        f"export-sft: {summary['train_records']} train records, "
        f"{summary['heldout_documents']} heldout documents -> {summary['dataset']}",
    )
    return 0


# stage: export-dpo


def cmd_export_dpo(args) -> int:
    from .review import SessionStore, load_run

    config = _load_config(args.config)
    run_dir = _run_dir(args, config)
    run = load_run(run_dir)
    store_path = _setting(args, config, "store") or run.metadata.get("store_path")
    if not store_path:
        raise StageError("--store is required (no store_path recorded for the run)")
    store = ReplayStore(store_path)
    fingerprints = run.metadata.get("fingerprints", {})

    sessions = SessionStore(run).sessions
    choices = []
    for session in sorted(sessions.values(), key=lambda s: s.session_id):
        for doc_id, (chosen, rejected) in sorted(session.preferences.items()):
            doc_fps = fingerprints.get(doc_id, {})
            try:
                choices.append(
                    {
                        "document_id": doc_id,
                        "reviewer_id": session.reviewer_id,
                        "chosen_fingerprint": doc_fps[str(chosen)],
                        "rejected_fingerprint": doc_fps[str(rejected)],
                    }
                )
            except KeyError as exc:
                raise StageError(
                    f"no recorded fingerprint for document {doc_id!r} response "
                    f"{exc}; re-run annotate"
                )
    if not choices:
        raise StageError("no preference choices recorded; review the run first")

    out = Path(_setting(args, config, "out") or run_dir / "preferences.jsonl")
    summary = export_preferences(choices, store, out)
    _log(
        args,
        f"export-dpo: {summary['preference_records']} records -> {summary['dataset']}",
    )
    return 0


# stage: review-serve


def cmd_review_serve(args) -> int:
    import uvicorn

    from .review.app import create_app

    config = _load_config(args.config)
    data_dir = _setting(args, config, "data_dir")
    if not data_dir:
        data_dir = _run_dir(args, config)
    ui_dir = _setting(args, config, "ui")
    host = _setting(args, config, "host", "127.0.0.1")
    port = int(_setting(args, config, "port", 8321))

    app = create_app(data_dir, ui_dir)
    _log(args, f"review-serve: listening on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# stage: taxonomy-check


def cmd_taxonomy_check(args) -> int:
    config = _load_config(args.config)
    path = _setting(args, config, "taxonomy") or default_taxonomy_path()
    taxonomy = load_taxonomy_file(path)
    counts = taxonomy.category_counts()
    print(f"taxonomy {taxonomy.version} at {path}")
    for category in Category:
        print(f"  {category.value}: {counts[category]} labels")
    print("  all names unique after normalization; structure valid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privacy-stories",
        description="Extract privacy behaviors from software documents, "
        "generate privacy stories, score them, and review them.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with stage settings")
    common.add_argument("--run-dir", help="pipeline run directory")
    common.add_argument(
        "--replay",
        action="store_true",
        help="serve model responses from the recorded store",
    )
    common.add_argument("--verbose", action="store_true", help="chatty progress")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="build the run manifest")
    p.add_argument("--docs", help="directory of software documents")
    p.add_argument("--gold", help="gold annotation JSON sidecar")
    p.add_argument("--hints", help="JSON file of filename-pattern -> file-type hints")
    p.add_argument("--taxonomy", help="taxonomy JSON (defaults to the packaged tree)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("annotate", parents=[common], help="prompt the model")
    p.add_argument("--mode", choices=["full", "base"], help="prompt template mode")
    p.add_argument("--responses", type=int, help="responses per document")
    p.add_argument("--store", help="response store directory")
    p.add_argument("--record", action="store_true", help="record live responses")
    p.add_argument("--model", help="model name")
    p.add_argument("--temperature", type=float, help="sampling temperature")
    p.add_argument("--jobs", type=int, help="parallel requests")
    p.add_argument("--template", help="prompt template JSON override")
    p.add_argument(
        "--remote-embeddings",
        action="store_true",
        dest="remote_embeddings",
        help="use the remote embeddings endpoint for example selection",
    )
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("evaluate", parents=[common], help="score annotations")
    p.add_argument("--response-index", type=int, dest="response_index")
    p.add_argument(
        "--penalize-invented",
        action="store_true",
        dest="penalize_invented",
        help="count labels outside the taxonomy against precision",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-sft", parents=[common], help="write the SFT dataset")
    p.add_argument("--heldout-count", type=int, dest="heldout_count")
    p.add_argument(
        "--heldout-ids",
        dest="heldout_ids",
        help="comma-separated document ids to hold out",
    )
    p.add_argument("--seed", type=int, help="split seed")
    p.add_argument("--out", help="output JSONL path")
    p.set_defaults(func=cmd_export_sft)

    p = sub.add_parser(
        "export-dpo", parents=[common], help="write the preference dataset"
    )
    p.add_argument("--store", help="response store directory")
    p.add_argument("--out", help="output JSONL path")
    p.set_defaults(func=cmd_export_dpo)

    p = sub.add_parser(
        "review-serve", parents=[common], help="serve the review workflow"
    )
    p.add_argument("--data-dir", dest="data_dir", help="directory of run directories")
    p.add_argument("--ui", help="compiled review UI directory to host")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_review_serve)

    p = sub.add_parser(
        "taxonomy-check", parents=[common], help="validate a taxonomy file"
    )
    p.add_argument("--taxonomy", help="taxonomy JSON (defaults to the packaged tree)")
    p.set_defaults(func=cmd_taxonomy_check)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # every stage failure becomes a nonzero exit
        if getattr(args, "verbose", False):
            traceback.print_exc()
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
