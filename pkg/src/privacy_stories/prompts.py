"""Annotation prompt construction: task text, label lists, one similarity-chosen
in-context example, the XML output contract, and a restated-task verification step.

The wording lives in a versioned template file so it can be revised without a
code change; section order is fixed here. The ``base`` mode drops the example,
the format contract, and the verification step.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .corpus import Document, GoldAnnotation, Manifest
from .embeddings import EmbeddingProvider, LocalTfidfEmbedder, cosine
from .stories import render_story
from .taxonomy import Category, Taxonomy

TAG_ACTIONS = "ACTIONS"
TAG_DATA_TYPES = "DATA_TYPES"
TAG_PURPOSES = "PURPOSES"
TAG_STORIES = "STORIES"
TAG_REASONING = "R"
CONTRACT_TAGS = (TAG_ACTIONS, TAG_DATA_TYPES, TAG_PURPOSES, TAG_STORIES, TAG_REASONING)

_CATEGORY_TAGS = {
    Category.ACTION: TAG_ACTIONS,
    Category.DATA_TYPE: TAG_DATA_TYPES,
    Category.PURPOSE: TAG_PURPOSES,
}


@dataclass(frozen=True)
class PromptTemplate:
    template_version: str
    system_text: str
    task_statement: str
    labels_header: str
    icl_header: str
    icl_document_label: str
    icl_output_label: str
    format_instructions: str
    target_header: str
    verification_instructions: str
    tag_names: tuple[str, ...] = CONTRACT_TAGS

    @classmethod
    def from_json(cls, raw: dict) -> "PromptTemplate":
        return cls(
            template_version=raw["template_version"],
            system_text=raw["system_text"],
            task_statement=raw["task_statement"],
            labels_header=raw["labels_header"],
            icl_header=raw["icl_header"],
            icl_document_label=raw["icl_document_label"],
            icl_output_label=raw["icl_output_label"],
            format_instructions=raw["format_instructions"],
            target_header=raw["target_header"],
            verification_instructions=raw["verification_instructions"],
            tag_names=tuple(raw.get("tag_names", CONTRACT_TAGS)),
        )


def load_template(path: Optional[str | Path] = None) -> PromptTemplate:
    if path is None:
        text = resources.files("privacy_stories").joinpath("data/prompt_template.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return PromptTemplate.from_json(json.loads(text))


@dataclass(frozen=True)
class TemplateOptions:
    mode: str = "full"  # "full" or "base"
    icl_k: int = 1
    max_doc_chars: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("full", "base"):
            raise ValueError(f"unknown template mode {self.mode!r}")
        if self.icl_k < 1:
            raise ValueError("icl_k must be >= 1")


@dataclass(frozen=True)
class PromptBundle:
    document_id: str
    system_text: str
    user_text: str
    icl_document_id: Optional[str]
    tag_contract: tuple[str, ...]
    taxonomy_version: str
    template_version: str
    warnings: tuple[str, ...] = field(default=())


def select_icl_example(
    target: Document,
    pool: Manifest,
    provider: Optional[EmbeddingProvider] = None,
    k: int = 1,
) -> list[str]:
    """Pick the k gold-annotated documents most similar to the target.

    Similarity is cosine over provider embeddings; the target itself is never
    eligible, and ties break toward the lexicographically smallest document id.
    """
    candidates = [d for d in pool.documents if d.id != target.id and d.id in pool.gold]
    if not candidates:
        raise ValueError(f"no gold-annotated candidates for document {target.id!r}")
    if provider is None:
        provider = LocalTfidfEmbedder()
    if isinstance(provider, LocalTfidfEmbedder) and not provider.fitted:
        provider.fit([target.text] + [c.text for c in candidates])
    target_vec = provider.embed(target.text)
    scored = sorted(
        ((cosine(target_vec, provider.embed(c.text)), c.id) for c in candidates),
        key=lambda pair: (-pair[0], pair[1]),
    )
    return [doc_id for _, doc_id in scored[:k]]


def render_label_lists(t: Taxonomy) -> str:
    lines = []
    for category in Category:
        root = t.roots[category]
        lines.append(f"{root.name}:")
        for node in t.labels(category):
            indent = "  " * node.depth
            lines.append(f"{indent}- {node.name}")
        lines.append("")
    return "\n".join(lines).rstrip()


def render_gold_output(gold: GoldAnnotation, t: Taxonomy) -> str:
    """Render a gold annotation in the XML tag contract, stories included."""
    def block(tag: str, labels) -> str:
        body = "\n".join(labels)
        return f"<{tag}>\n{body}\n</{tag}>"

    return "\n".join(
        [
            block(TAG_ACTIONS, sorted(gold.actions)),
            block(TAG_DATA_TYPES, sorted(gold.data_types)),
            block(TAG_PURPOSES, sorted(gold.purposes)),
            block(TAG_STORIES, [render_story(s, t) for s in gold.stories]),
        ]
    )


def _truncate(text: str, limit: Optional[int], warnings: list[str], doc_id: str) -> str:
    if limit is not None and len(text) > limit:
        warnings.append(f"document {doc_id} truncated from {len(text)} to {limit} chars")
        return text[:limit]
    return text


def build_prompt(
    doc: Document,
    t: Taxonomy,
    icl: Optional[tuple[Document, GoldAnnotation]] = None,
    opts: TemplateOptions = TemplateOptions(),
    template: Optional[PromptTemplate] = None,
) -> PromptBundle:
    """Assemble the annotation prompt for one document.

    Full mode emits, in order: task statement, label lists, the in-context
    example (document plus tagged gold output), the output-format contract,
    the target document, and the restated task with the verification
    instruction. Base mode keeps only task, labels, and target document.
    """
    if not doc.text.strip():
        raise ValueError(f"document {doc.id!r} has no text to annotate")
    if template is None:
        template = load_template()
    full = opts.mode == "full"
    if full:
        if icl is None:
            raise ValueError("full template requires an in-context example")
        icl_doc, icl_gold = icl
        if icl_doc.id == doc.id:
            raise ValueError("in-context example must differ from the target document")

    warnings: list[str] = []
    sections = [template.task_statement, template.labels_header + "\n" + render_label_lists(t)]
    if full:
        example_text = _truncate(icl_doc.text, opts.max_doc_chars, warnings, icl_doc.id)
        sections.append(
            "\n".join(
                [
                    template.icl_header,
                    template.icl_document_label,
                    example_text,
                    template.icl_output_label,
                    render_gold_output(icl_gold, t),
                ]
            )
        )
        sections.append(template.format_instructions)
    target_text = _truncate(doc.text, opts.max_doc_chars, warnings, doc.id)
    sections.append(template.target_header + "\n" + target_text)
    if full:
        sections.append(template.task_statement + "\n" + template.verification_instructions)

    return PromptBundle(
        document_id=doc.id,
        system_text=template.system_text,
        user_text="\n\n".join(sections),
        icl_document_id=icl_doc.id if full else None,
        tag_contract=tuple(template.tag_names) if full else (),
        taxonomy_version=t.version,
        template_version=template.template_version,
        warnings=tuple(warnings),
    )


def bundle_to_json(b: PromptBundle) -> dict:
    return {
        "document_id": b.document_id,
        "system_text": b.system_text,
        "user_text": b.user_text,
        "icl_document_id": b.icl_document_id,
        "tag_contract": list(b.tag_contract),
        "taxonomy_version": b.taxonomy_version,
        "template_version": b.template_version,
        "warnings": list(b.warnings),
    }


def bundle_from_json(raw: dict) -> PromptBundle:
    return PromptBundle(
        document_id=raw["document_id"],
        system_text=raw["system_text"],
        user_text=raw["user_text"],
        icl_document_id=raw.get("icl_document_id"),
        tag_contract=tuple(raw.get("tag_contract", ())),
        taxonomy_version=raw.get("taxonomy_version", ""),
        template_version=raw.get("template_version", ""),
        warnings=tuple(raw.get("warnings", ())),
    )
