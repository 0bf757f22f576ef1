"""Export fine-tuning datasets: supervised pairs and preference pairs.

SFT records pair a base-mode prompt with the gold annotation rendered in
the response tag format, so a model trained on them learns to emit text the
response parser accepts. Preference records pair two recorded responses for
one document as chosen/rejected, keeping the rationale tags verbatim.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Manifest, validate_gold
from .gateway import ReplayStore
from .prompts import (
    PromptBundle,
    TemplateOptions,
    build_prompt,
    render_gold_output,
    select_icl_example,
)
from .taxonomy import Taxonomy

# Reference settings for the downstream preference-tuning run this dataset
# feeds; exported alongside the data so consumers need no side channel.
SUGGESTED_TUNING_CONFIG = {
    "method": "dpo",
    "batch_size": 2,
    "gradient_accumulation_steps": 3,
    "learning_rate": 5e-6,
    "epochs": 3,
    "lora_rank": 64,
    "dpo_beta": 0.1,
}


class ExportError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    """Partition of manifest documents into train and heldout sets.

    Either list the heldout ids explicitly or give a count plus seed for a
    reproducible random draw.
    """

    heldout_ids: tuple[str, ...] = ()
    heldout_count: Optional[int] = None
    seed: int = 13

    def resolve(self, document_ids: Sequence[str]) -> tuple[list[str], list[str]]:
        ids = sorted(document_ids)
        if self.heldout_ids and self.heldout_count is not None:
            raise ExportError("give heldout ids or a count, not both")
        if self.heldout_ids:
            unknown = sorted(set(self.heldout_ids) - set(ids))
            if unknown:
                raise ExportError(f"heldout ids not in manifest: {unknown}")
            heldout = sorted(set(self.heldout_ids))
        elif self.heldout_count is not None:
            if not 0 <= self.heldout_count <= len(ids):
                raise ExportError(
                    f"heldout count {self.heldout_count} out of range for "
                    f"{len(ids)} documents"
                )
            heldout = sorted(random.Random(self.seed).sample(ids, self.heldout_count))
        else:
            heldout = []
        train = [i for i in ids if i not in set(heldout)]
        overlap = set(train) & set(heldout)
        if overlap:
            raise ExportError(f"documents in both splits: {sorted(overlap)}")
        return train, heldout


@dataclass(frozen=True)
class SftRecord:
    prompt: str
    completion: str
    document_id: str
    split: str  # "train" or "heldout"


def _prompt_text(bundle: PromptBundle) -> str:
    return bundle.system_text + "\n\n" + bundle.user_text


def build_sft_records(
    manifest: Manifest,
    t: Taxonomy,
    split: SplitSpec,
    template_mode: str = "base",
) -> list[SftRecord]:
    """One record per gold-annotated document, tagged with its split."""
    violations = validate_gold(manifest, t)
    if violations:
        first = violations[0]
        raise ExportError(
            f"gold does not validate ({len(violations)} problems; first: {first})"
        )
    gold_ids = sorted(manifest.gold)
    train, heldout = split.resolve(gold_ids)
    heldout_set = set(heldout)

    records = []
    for doc_id in sorted(train + heldout):
        doc = manifest.document(doc_id)
        gold = manifest.gold_for(doc_id)
        opts = TemplateOptions(mode=template_mode)
        if template_mode == "base":
            bundle = build_prompt(doc, t, opts=opts)
        else:
            icl_id = select_icl_example(doc, manifest)[0]
            icl_doc = manifest.document(icl_id)
            bundle = build_prompt(
                doc, t, icl=(icl_doc, manifest.gold_for(icl_id)), opts=opts
            )
        records.append(
            SftRecord(
                prompt=_prompt_text(bundle),
                completion=render_gold_output(gold, t),
                document_id=doc_id,
                split="heldout" if doc_id in heldout_set else "train",
            )
        )
    return records


def export_sft(
    manifest: Manifest,
    t: Taxonomy,
    split: SplitSpec,
    out_path: str | Path,
) -> dict:
    """Write train records as JSONL plus heldout and config sidecars.

    Returns a summary dict with counts and the paths written.
    """
    out_path = Path(out_path)
    records = build_sft_records(manifest, t, split)
    train_records = [r for r in records if r.split == "train"]
    heldout_ids = sorted(r.document_id for r in records if r.split == "heldout")

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
        for record in train_records:
            handle.write(
                json.dumps(
                    {
                        "prompt": record.prompt,
                        "completion": record.completion,
                        "document_id": record.document_id,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )

    heldout_path = out_path.with_name(out_path.stem + ".heldout.json")
    heldout_path.write_text(
        json.dumps({"heldout_document_ids": heldout_ids}, indent=2) + "\n",
        encoding="utf-8",
    )
    config_path = out_path.with_name(out_path.stem + ".tuning-config.json")
    config_path.write_text(
        json.dumps(SUGGESTED_TUNING_CONFIG, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if not train_records:
        import warnings

        warnings.warn("no train documents; wrote an empty dataset", stacklevel=2)
    return {
        "train_records": len(train_records),
        "heldout_documents": len(heldout_ids),
        "dataset": str(out_path),
        "heldout_sidecar": str(heldout_path),
        "config_sidecar": str(config_path),
    }


@dataclass(frozen=True)
class PreferenceRecord:
    prompt: str
    chosen: str
    rejected: str
    document_id: str
    reviewer_id: str

    def __post_init__(self):
        if self.chosen == self.rejected:
            raise ExportError(
                f"chosen and rejected texts are identical for {self.document_id}"
            )


def build_preference_records(
    choices: Sequence[dict],
    store: ReplayStore,
) -> list[PreferenceRecord]:
    """Resolve reviewer choices against the recorded response store.

    Each choice carries document_id, reviewer_id, chosen_fingerprint and
    rejected_fingerprint. The prompt text is recovered from the store index
    so records stay self-contained.
    """
    records = []
    for choice in choices:
        doc_id = choice["document_id"]
        chosen_fp = choice["chosen_fingerprint"]
        rejected_fp = choice["rejected_fingerprint"]
        if chosen_fp == rejected_fp:
            raise ExportError(
                f"preference for {doc_id} picks the same response on both sides"
            )
        chosen_meta = store.meta(chosen_fp)
        records.append(
            PreferenceRecord(
                prompt=chosen_meta["system_text"] + "\n\n" + chosen_meta["user_text"],
                chosen=store.get(chosen_fp),
                rejected=store.get(rejected_fp),
                document_id=doc_id,
                reviewer_id=choice["reviewer_id"],
            )
        )
    records.sort(key=lambda r: (r.document_id, r.reviewer_id))
    return records


def export_preferences(
    choices: Sequence[dict],
    store: ReplayStore,
    out_path: str | Path,
) -> dict:
    out_path = Path(out_path)
    records = build_preference_records(choices, store)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(
                json.dumps(
                    {
                        "prompt": record.prompt,
                        "chosen": record.chosen,
                        "rejected": record.rejected,
                        "document_id": record.document_id,
                        "reviewer_id": record.reviewer_id,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
    config_path = out_path.with_name(out_path.stem + ".tuning-config.json")
    config_path.write_text(
        json.dumps(SUGGESTED_TUNING_CONFIG, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return {
        "preference_records": len(records),
        "dataset": str(out_path),
        "config_sidecar": str(config_path),
    }
