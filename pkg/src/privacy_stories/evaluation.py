"""Hierarchical precision/recall/F1 scoring and report generation.

Predicted labels earn partial credit against gold labels that sit on the
same taxonomy branch: 1/(1+d) for tree distance d, zero across branches or
categories. Each document's predictions are paired one-to-one with gold
labels by an optimal assignment over the credit matrix. All arithmetic is
exact (fractions); reports render to three decimals.
"""
from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import GoldAnnotation, Manifest
from .parsing import ParsedAnnotation
from .stories import StoryTriple
from .taxonomy import Category, Taxonomy, TaxonomyNode, normalize_name


@dataclass(frozen=True)
class CategoryScore:
    """Assignment outcome for one label set; category None means pooled."""

    category: Optional[Category]
    credit_sum: Fraction
    prediction_count: int
    gold_count: int
    pairings: tuple[tuple[str, str, Fraction], ...] = ()

    @property
    def precision(self) -> Fraction:
        if self.prediction_count == 0:
            return Fraction(0)
        return self.credit_sum / self.prediction_count

    @property
    def recall(self) -> Fraction:
        if self.gold_count == 0:
            return Fraction(0)
        return self.credit_sum / self.gold_count

    @property
    def f1(self) -> Fraction:
        p, r = self.precision, self.recall
        if p + r == 0:
            return Fraction(0)
        return 2 * p * r / (p + r)


def _dedupe_nodes(
    labels: Sequence[str], t: Taxonomy, category: Category
) -> list[TaxonomyNode]:
    nodes: list[TaxonomyNode] = []
    seen: set[str] = set()
    for label in labels:
        node = t.find_label(label)
        if node is None:
            raise ValueError(f"label {label!r} not in taxonomy")
        if node.category != category:
            raise ValueError(
                f"label {label!r} is a {node.category.value} label, "
                f"expected {category.value}"
            )
        key = normalize_name(node.name)
        if key not in seen:
            seen.add(key)
            nodes.append(node)
    return nodes


def _optimal_pairing(
    pred: list[TaxonomyNode], gold: list[TaxonomyNode], t: Taxonomy
) -> tuple[Fraction, tuple[tuple[str, str, Fraction], ...]]:
    """Maximize total credit over one-to-one pred/gold pairs.

    Credits are fractions with small denominators (1 + tree distance), so
    scaling by their least common multiple turns the matrix into exact
    integers for the assignment solver.
    """
    if not pred or not gold:
        return Fraction(0), ()
    credits = [[t.credit(p, g) for g in gold] for p in pred]
    scale = math.lcm(*(c.denominator for row in credits for c in row))
    matrix = np.array(
        [[int(c * scale) for c in row] for row in credits], dtype=np.int64
    )
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    total = Fraction(0)
    pairings: list[tuple[str, str, Fraction]] = []
    for i, j in zip(rows.tolist(), cols.tolist()):
        credit = credits[i][j]
        if credit > 0:
            total += credit
            pairings.append((pred[i].name, gold[j].name, credit))
    return total, tuple(pairings)


def score_category(
    pred: Sequence[str],
    gold: Sequence[str],
    t: Taxonomy,
    category: Category,
) -> CategoryScore:
    """Score one category of one document over deduplicated label sets."""
    pred_nodes = _dedupe_nodes(pred, t, category)
    gold_nodes = _dedupe_nodes(gold, t, category)
    credit, pairings = _optimal_pairing(pred_nodes, gold_nodes, t)
    return CategoryScore(
        category=category,
        credit_sum=credit,
        prediction_count=len(pred_nodes),
        gold_count=len(gold_nodes),
        pairings=pairings,
    )


@dataclass(frozen=True)
class StoryComparison:
    """Exact-triple story matching; a lower bound under human review."""

    matched: tuple[StoryTriple, ...]
    missing_gold: tuple[StoryTriple, ...]
    extra_predicted: tuple[StoryTriple, ...]
    prediction_count: int
    gold_count: int

    @property
    def precision(self) -> Fraction:
        if self.prediction_count == 0:
            return Fraction(0)
        return Fraction(len(self.matched), self.prediction_count)

    @property
    def recall(self) -> Fraction:
        if self.gold_count == 0:
            return Fraction(0)
        return Fraction(len(self.matched), self.gold_count)


def compare_stories(
    predicted: Sequence[StoryTriple], gold: Sequence[StoryTriple]
) -> StoryComparison:
    """Match stories one-to-one on exact (action, type set, purpose set)."""
    remaining = Counter(s.key() for s in predicted)
    matched: list[StoryTriple] = []
    missing: list[StoryTriple] = []
    for story in gold:
        key = story.key()
        if remaining[key] > 0:
            remaining[key] -= 1
            matched.append(story)
        else:
            missing.append(story)
    matched_keys = Counter(s.key() for s in matched)
    extra: list[StoryTriple] = []
    for story in predicted:
        key = story.key()
        if matched_keys[key] > 0:
            matched_keys[key] -= 1
        else:
            extra.append(story)
    return StoryComparison(
        matched=tuple(matched),
        missing_gold=tuple(missing),
        extra_predicted=tuple(extra),
        prediction_count=len(predicted),
        gold_count=len(gold),
    )


@dataclass(frozen=True)
class DocumentScore:
    document_id: str
    categories: dict[Category, CategoryScore]
    matched_counts: dict[Category, int]
    invented_counts: dict[Category, int]
    stories: Optional[StoryComparison] = None

    @property
    def micro(self) -> CategoryScore:
        """Pool credit and counts across the three categories."""
        return CategoryScore(
            category=None,
            credit_sum=sum((s.credit_sum for s in self.categories.values()), Fraction(0)),
            prediction_count=sum(s.prediction_count for s in self.categories.values()),
            gold_count=sum(s.gold_count for s in self.categories.values()),
        )


def score_document(
    parsed: ParsedAnnotation,
    gold: GoldAnnotation,
    t: Taxonomy,
    count_invented_as_predictions: bool = False,
) -> DocumentScore:
    """Score one document across all three categories.

    Labels absent from the taxonomy are excluded from precision by default
    and surfaced through invented_counts; the flag instead counts them as
    zero-credit predictions.
    """
    categories: dict[Category, CategoryScore] = {}
    matched: dict[Category, int] = {}
    invented: dict[Category, int] = {}
    for category in Category:
        score = score_category(
            parsed.matched(category), gold.labels(category), t, category
        )
        matched[category] = score.prediction_count
        n_invented = len(parsed.invented(category))
        invented[category] = n_invented
        if count_invented_as_predictions and n_invented:
            score = replace(
                score, prediction_count=score.prediction_count + n_invented
            )
        categories[category] = score
    comparison = compare_stories(parsed.story_triples(), list(gold.stories))
    return DocumentScore(
        document_id=parsed.document_id,
        categories=categories,
        matched_counts=matched,
        invented_counts=invented,
        stories=comparison,
    )


@dataclass
class EvalReport:
    per_document: dict[str, DocumentScore]
    file_types: dict[str, str]
    category_micro: dict[Category, CategoryScore]
    category_macro: dict[Category, Fraction]
    per_file_type: dict[str, Fraction]
    overall_micro: CategoryScore
    overall_macro: Fraction
    hallucination_rates: dict[str, Fraction]
    story_totals: dict[str, int]
    metadata: dict[str, str] = field(default_factory=dict)


def _mean(values: Sequence[Fraction]) -> Fraction:
    return sum(values, Fraction(0)) / len(values)


def aggregate(
    scores: Sequence[DocumentScore],
    manifest: Manifest,
    metadata: Optional[dict[str, str]] = None,
) -> EvalReport:
    """Fold per-document scores into corpus-level aggregates."""
    if not scores:
        raise ValueError("no document scores to aggregate")
    by_id: dict[str, DocumentScore] = {}
    file_types: dict[str, str] = {}
    for score in scores:
        doc = manifest.document(score.document_id)
        by_id[score.document_id] = score
        file_types[score.document_id] = doc.file_type.value

    ordered = [by_id[doc_id] for doc_id in sorted(by_id)]

    category_micro: dict[Category, CategoryScore] = {}
    category_macro: dict[Category, Fraction] = {}
    for category in Category:
        parts = [s.categories[category] for s in ordered]
        category_micro[category] = CategoryScore(
            category=category,
            credit_sum=sum((p.credit_sum for p in parts), Fraction(0)),
            prediction_count=sum(p.prediction_count for p in parts),
            gold_count=sum(p.gold_count for p in parts),
        )
        category_macro[category] = _mean([p.f1 for p in parts])

    micros = [s.micro for s in ordered]
    overall_micro = CategoryScore(
        category=None,
        credit_sum=sum((m.credit_sum for m in micros), Fraction(0)),
        prediction_count=sum(m.prediction_count for m in micros),
        gold_count=sum(m.gold_count for m in micros),
    )
    overall_macro = _mean([m.f1 for m in micros])

    grouped: dict[str, list[Fraction]] = {}
    for score in ordered:
        grouped.setdefault(file_types[score.document_id], []).append(score.micro.f1)
    per_file_type = {ft: _mean(f1s) for ft, f1s in sorted(grouped.items())}

    rates: dict[str, Fraction] = {}
    total_matched = 0
    total_invented = 0
    for category in Category:
        matched = sum(s.matched_counts[category] for s in ordered)
        invented = sum(s.invented_counts[category] for s in ordered)
        seen = matched + invented
        rates[category.value] = Fraction(invented, seen) if seen else Fraction(0)
        total_matched += matched
        total_invented += invented
    seen = total_matched + total_invented
    rates["overall"] = Fraction(total_invented, seen) if seen else Fraction(0)

    story_totals = {"gold": 0, "matched": 0, "missing": 0, "extra": 0, "predicted": 0}
    for score in ordered:
        if score.stories is None:
            continue
        story_totals["gold"] += score.stories.gold_count
        story_totals["matched"] += len(score.stories.matched)
        story_totals["missing"] += len(score.stories.missing_gold)
        story_totals["extra"] += len(score.stories.extra_predicted)
        story_totals["predicted"] += score.stories.prediction_count

    return EvalReport(
        per_document=by_id,
        file_types=file_types,
        category_micro=category_micro,
        category_macro=category_macro,
        per_file_type=per_file_type,
        overall_micro=overall_micro,
        overall_macro=overall_macro,
        hallucination_rates=rates,
        story_totals=story_totals,
        metadata=dict(metadata or {}),
    )


def _round3(value: Fraction) -> float:
    return round(value.numerator / value.denominator, 3)


def _score_to_json(score: CategoryScore, include_pairings: bool = False) -> dict:
    out = {
        "precision": _round3(score.precision),
        "recall": _round3(score.recall),
        "f1": _round3(score.f1),
        "credit": _round3(score.credit_sum),
        "predictions": score.prediction_count,
        "gold": score.gold_count,
    }
    if include_pairings:
        out["pairings"] = [
            {"predicted": p, "gold": g, "credit": _round3(c)}
            for p, g, c in score.pairings
        ]
    return out


def _triple_to_json(s: StoryTriple) -> dict:
    return {
        "action": s.action,
        "data_types": list(s.data_types),
        "purposes": list(s.purposes),
    }


def report_to_json(report: EvalReport) -> dict:
    per_document = {}
    for doc_id in sorted(report.per_document):
        score = report.per_document[doc_id]
        entry = {
            "file_type": report.file_types[doc_id],
            "categories": {
                cat.value: _score_to_json(score.categories[cat], include_pairings=True)
                for cat in Category
            },
            "micro": _score_to_json(score.micro),
            "invented_labels": {
                cat.value: score.invented_counts[cat] for cat in Category
            },
        }
        if score.stories is not None:
            entry["stories"] = {
                "predicted": score.stories.prediction_count,
                "gold": score.stories.gold_count,
                "matched": len(score.stories.matched),
                "missing_gold": [
                    _triple_to_json(s) for s in score.stories.missing_gold
                ],
                "extra_predicted": [
                    _triple_to_json(s) for s in score.stories.extra_predicted
                ],
            }
        per_document[doc_id] = entry

    return {
        "metadata": dict(sorted(report.metadata.items())),
        "per_document": per_document,
        "per_category": {
            cat.value: {
                "micro": _score_to_json(report.category_micro[cat]),
                "macro_f1": _round3(report.category_macro[cat]),
            }
            for cat in Category
        },
        "per_file_type": {
            ft: _round3(f1) for ft, f1 in sorted(report.per_file_type.items())
        },
        "overall": {
            "micro": _score_to_json(report.overall_micro),
            "macro_f1": _round3(report.overall_macro),
        },
        "hallucination_rates": {
            key: _round3(rate)
            for key, rate in sorted(report.hallucination_rates.items())
        },
        "stories": dict(sorted(report.story_totals.items())),
    }


def write_report_json(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def write_report_csv(report: EvalReport, path: str | Path) -> None:
    """Flat per-document rows for spreadsheet inspection."""
    columns = ["document_id", "file_type"]
    for cat in Category:
        prefix = cat.value
        columns += [f"{prefix}_precision", f"{prefix}_recall", f"{prefix}_f1"]
    columns += ["micro_precision", "micro_recall", "micro_f1", "invented_labels"]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for doc_id in sorted(report.per_document):
            score = report.per_document[doc_id]
            row: list = [doc_id, report.file_types[doc_id]]
            for cat in Category:
                cs = score.categories[cat]
                row += [_round3(cs.precision), _round3(cs.recall), _round3(cs.f1)]
            micro = score.micro
            row += [
                _round3(micro.precision),
                _round3(micro.recall),
                _round3(micro.f1),
                sum(score.invented_counts.values()),
            ]
            writer.writerow(row)
