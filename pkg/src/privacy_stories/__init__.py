"""Privacy behavior extraction, story generation, scoring, and review.

The pipeline turns software documents into structured privacy annotations
(actions, data types, purposes on a fixed label tree), renders them as
template privacy stories, scores them against gold annotations with
hierarchical partial credit, and exports fine-tuning datasets from human
review sessions.
"""

from .corpus import (
    Document,
    FileType,
    GoldAnnotation,
    Manifest,
    attach_gold,
    ingest_documents,
    load_manifest,
    save_manifest,
    validate_gold,
)
from .embeddings import LocalTfidfEmbedder, RemoteEmbedder, cosine
from .evaluation import (
    CategoryScore,
    DocumentScore,
    EvalReport,
    aggregate,
    compare_stories,
    score_category,
    score_document,
)
from .gateway import ModelConfig, RawResponse, ReplayStore, complete, fingerprint, record
from .parsing import ParsedAnnotation, StoryLine, parse_response
from .prompts import (
    PromptBundle,
    PromptTemplate,
    TemplateOptions,
    build_prompt,
    load_template,
    select_icl_example,
)
from .stories import StoryTriple, parse_story, render_story
from .taxonomy import (
    Category,
    Taxonomy,
    TaxonomyError,
    TaxonomyNode,
    load_default_taxonomy,
    load_taxonomy,
    load_taxonomy_file,
    normalize_name,
)
from .training import SplitSpec, export_preferences, export_sft

__version__ = "0.1.0"

__all__ = [
    "Category",
    "CategoryScore",
    "Document",
    "DocumentScore",
    "EvalReport",
    "FileType",
    "GoldAnnotation",
    "LocalTfidfEmbedder",
    "Manifest",
    "ModelConfig",
    "ParsedAnnotation",
    "PromptBundle",
    "PromptTemplate",
    "RawResponse",
    "RemoteEmbedder",
    "ReplayStore",
    "SplitSpec",
    "StoryLine",
    "StoryTriple",
    "Taxonomy",
    "TaxonomyError",
    "TaxonomyNode",
    "TemplateOptions",
    "aggregate",
    "attach_gold",
    "build_prompt",
    "compare_stories",
    "complete",
    "cosine",
    "export_preferences",
    "export_sft",
    "fingerprint",
    "ingest_documents",
    "load_default_taxonomy",
    "load_manifest",
    "load_taxonomy",
    "load_taxonomy_file",
    "load_template",
    "normalize_name",
    "parse_response",
    "parse_story",
    "record",
    "render_story",
    "save_manifest",
    "score_category",
    "score_document",
    "select_icl_example",
    "validate_gold",
]
