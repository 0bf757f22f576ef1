"""Scoring: distance-discounted credit, optimal pairing, and aggregation."""
import csv
import json
import random
from fractions import Fraction

import pytest

from privacy_stories.corpus import GoldAnnotation, attach_gold, ingest_documents
from privacy_stories.evaluation import (
    CategoryScore,
    aggregate,
    compare_stories,
    report_to_json,
    score_category,
    score_document,
    write_report_csv,
    write_report_json,
)
from privacy_stories.parsing import ParsedAnnotation, parse_response
from privacy_stories.stories import StoryTriple
from privacy_stories.taxonomy import Category, load_default_taxonomy

from scoring_reference import best_injective_credit, reference_prf1

T = load_default_taxonomy()


def test_two_predictions_one_gold():
    # an extra predicted action costs precision, never recall
    score = score_category(["Collect", "Share"], ["Collect"], T, Category.ACTION)
    assert score.credit_sum == 1
    assert score.precision == Fraction(1, 2)
    assert score.recall == 1
    assert score.f1 == Fraction(2, 3)


def test_parent_prediction_earns_half():
    score = score_category(["App Interactions"], ["Usage Data"], T, Category.DATA_TYPE)
    assert score.credit_sum == Fraction(1, 2)
    assert score.pairings == (("App Interactions", "Usage Data", Fraction(1, 2)),)


def test_empty_sides():
    none_pred = score_category([], ["Collect"], T, Category.ACTION)
    assert none_pred.precision == 0 and none_pred.recall == 0 and none_pred.f1 == 0
    none_gold = score_category(["Collect"], [], T, Category.ACTION)
    assert none_gold.recall == 0 and none_gold.f1 == 0
    both = score_category([], [], T, Category.ACTION)
    assert both.f1 == 0


def test_duplicates_count_once():
    score = score_category(
        ["Collect", "collect", " COLLECT "], ["Collect"], T, Category.ACTION
    )
    assert score.prediction_count == 1
    assert score.f1 == 1


def test_unknown_label_raises():
    with pytest.raises(ValueError, match="not in taxonomy"):
        score_category(["Nonsense"], ["Collect"], T, Category.ACTION)


def test_wrong_category_raises():
    with pytest.raises(ValueError, match="expected actions"):
        score_category(["Usage Data"], ["Collect"], T, Category.ACTION)


def test_each_gold_label_matched_at_most_once():
    # two child predictions compete for one parent: only one may score
    parent = "App Interactions"
    children = [n.name for n in T.find_label(parent).children]
    pred = children[:1] + [parent]
    score = score_category(pred, [parent], T, Category.DATA_TYPE)
    assert score.credit_sum == 1  # the exact match wins, the child gets nothing


DT_NAMES = [n.name for n in T.labels(Category.DATA_TYPE)]


@pytest.mark.parametrize("trial", range(40))
def test_pairing_matches_exhaustive_search(trial):
    rng = random.Random(1000 + trial)
    pred = rng.sample(DT_NAMES, rng.randint(0, 6))
    gold = rng.sample(DT_NAMES, rng.randint(0, 6))
    score = score_category(pred, gold, T, Category.DATA_TYPE)
    expected = best_injective_credit(
        [T.find_label(x) for x in pred], [T.find_label(x) for x in gold], T.credit
    )
    assert score.credit_sum == expected


@pytest.mark.parametrize("trial", range(10))
def test_pairing_order_invariant(trial):
    rng = random.Random(2000 + trial)
    pred = rng.sample(DT_NAMES, 5)
    gold = rng.sample(DT_NAMES, 5)
    base = score_category(pred, gold, T, Category.DATA_TYPE)
    rng.shuffle(pred)
    rng.shuffle(gold)
    shuffled = score_category(pred, gold, T, Category.DATA_TYPE)
    assert base.credit_sum == shuffled.credit_sum
    assert base.f1 == shuffled.f1


def test_prf1_formulas_match_reference():
    score = score_category(
        ["App Interactions", "Email Address"], ["Usage Data"], T, Category.DATA_TYPE
    )
    p, r, f1 = reference_prf1(score.credit_sum, score.prediction_count, score.gold_count)
    assert (score.precision, score.recall, score.f1) == (p, r, f1)


def triple(action, dts, purposes):
    return StoryTriple(action, tuple(dts), tuple(purposes))


def test_compare_stories_exact_and_one_to_one():
    a = triple("Collect", ["Email Address"], ["Analytics"])
    b = triple("Share", ["Usage Data"], ["Analytics"])
    comparison = compare_stories([a, a, b], [a, b])
    assert len(comparison.matched) == 2
    assert len(comparison.extra_predicted) == 1  # the duplicate a
    assert comparison.missing_gold == ()
    assert comparison.precision == Fraction(2, 3)
    assert comparison.recall == 1


def test_compare_stories_ignores_component_order():
    pred = triple("Collect", ["Email Address", "Usage Data"], ["Analytics"])
    gold = triple("Collect", ["Usage Data", "Email Address"], ["Analytics"])
    assert len(compare_stories([pred], [gold]).matched) == 1


def test_compare_stories_conservation():
    rng = random.Random(7)
    pool = [
        triple("Collect", [rng.choice(DT_NAMES)], ["Analytics"]) for _ in range(6)
    ]
    pred = [rng.choice(pool) for _ in range(5)]
    gold = [rng.choice(pool) for _ in range(4)]
    c = compare_stories(pred, gold)
    assert len(c.matched) + len(c.missing_gold) == c.gold_count
    assert len(c.matched) + len(c.extra_predicted) == c.prediction_count


def make_annotation(doc_id, actions=(), dts=(), purposes=(), invented_dts=()):
    ann = ParsedAnnotation(document_id=doc_id)
    ann.labels[Category.ACTION] = list(actions)
    ann.labels[Category.DATA_TYPE] = list(dts)
    ann.labels[Category.PURPOSE] = list(purposes)
    ann.hallucinated[Category.DATA_TYPE] = list(invented_dts)
    return ann


def make_gold(doc_id, actions=(), dts=(), purposes=()):
    return GoldAnnotation(
        document_id=doc_id, actions=set(actions), data_types=set(dts), purposes=set(purposes)
    )


def test_invented_labels_excluded_by_default():
    ann = make_annotation("d", dts=["Email Address"], invented_dts=["Telemetry Beacon"])
    gold = make_gold("d", dts=["Email Address"])
    score = score_document(ann, gold, T)
    assert score.categories[Category.DATA_TYPE].precision == 1
    assert score.invented_counts[Category.DATA_TYPE] == 1


def test_invented_labels_can_penalize_precision():
    ann = make_annotation("d", dts=["Email Address"], invented_dts=["Telemetry Beacon"])
    gold = make_gold("d", dts=["Email Address"])
    score = score_document(ann, gold, T, count_invented_as_predictions=True)
    assert score.categories[Category.DATA_TYPE].precision == Fraction(1, 2)
    # recall untouched: gold count is what it is
    assert score.categories[Category.DATA_TYPE].recall == 1
    # matched_counts still reflects only taxonomy labels
    assert score.matched_counts[Category.DATA_TYPE] == 1


def test_document_micro_pools_categories():
    ann = make_annotation("d", actions=["Collect"], dts=["Email Address"], purposes=["Analytics"])
    gold = make_gold("d", actions=["Collect", "Share"], dts=["Email Address"], purposes=["Analytics"])
    score = score_document(ann, gold, T)
    micro = score.micro
    assert micro.credit_sum == 3
    assert micro.prediction_count == 3
    assert micro.gold_count == 4
    assert micro.recall == Fraction(3, 4)


@pytest.fixture(scope="module")
def small_report(fixtures_dir):
    manifest = attach_gold(ingest_documents(fixtures_dir / "corpus"), fixtures_dir / "gold.json")
    scores = []
    for doc_id in sorted(manifest.gold)[:6]:
        gold = manifest.gold_for(doc_id)
        response = "\n".join(
            [
                "<ACTIONS>", *gold.labels(Category.ACTION), "</ACTIONS>",
                "<DATA_TYPES>", *gold.labels(Category.DATA_TYPE)[:-1], "</DATA_TYPES>",
                "<PURPOSES>", *gold.labels(Category.PURPOSE), "</PURPOSES>",
                "<STORIES>", "</STORIES>",
            ]
        )
        ann = parse_response(response, T, doc_id)
        scores.append(score_document(ann, gold, T))
    return aggregate(scores, manifest, metadata={"model": "unit-test"}), scores, manifest


def test_aggregate_requires_scores(fixtures_dir):
    manifest = attach_gold(ingest_documents(fixtures_dir / "corpus"), fixtures_dir / "gold.json")
    with pytest.raises(ValueError):
        aggregate([], manifest)


def test_aggregate_micro_pools_credit(small_report):
    report, scores, _ = small_report
    total_credit = sum((s.micro.credit_sum for s in scores), Fraction(0))
    assert report.overall_micro.credit_sum == total_credit
    assert report.overall_micro.prediction_count == sum(s.micro.prediction_count for s in scores)


def test_aggregate_macro_is_mean_of_document_f1(small_report):
    report, scores, _ = small_report
    assert report.overall_macro == sum((s.micro.f1 for s in scores), Fraction(0)) / len(scores)


def test_aggregate_per_file_type_means_document_micro(small_report):
    report, scores, manifest = small_report
    groups = {}
    for s in scores:
        ft = manifest.document(s.document_id).file_type.value
        groups.setdefault(ft, []).append(s.micro.f1)
    for ft, f1s in groups.items():
        assert report.per_file_type[ft] == sum(f1s, Fraction(0)) / len(f1s)


def test_aggregate_hallucination_rates(small_report):
    report, scores, _ = small_report
    for category in Category:
        matched = sum(s.matched_counts[category] for s in scores)
        invented = sum(s.invented_counts[category] for s in scores)
        expected = Fraction(invented, matched + invented) if matched + invented else Fraction(0)
        assert report.hallucination_rates[category.value] == expected


def test_report_json_values_rounded(small_report, tmp_path):
    report, _, _ = small_report
    path = tmp_path / "report.json"
    write_report_json(report, path)
    data = json.loads(path.read_text())
    micro = data["overall"]["micro"]
    # every rendered number carries at most three decimals
    for key in ("precision", "recall", "f1", "credit"):
        assert round(micro[key], 3) == micro[key]
    assert data["metadata"] == {"model": "unit-test"}
    assert sorted(data["per_document"]) == list(data["per_document"])


def test_report_json_deterministic(small_report, tmp_path):
    report, _, _ = small_report
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_report_json(report, a)
    write_report_json(report, b)
    assert a.read_bytes() == b.read_bytes()


def test_report_csv_shape(small_report, tmp_path):
    report, scores, _ = small_report
    path = tmp_path / "report.csv"
    write_report_csv(report, path)
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == len(scores)
    assert [r["document_id"] for r in rows] == sorted(r["document_id"] for r in rows)
    first = rows[0]
    for column in ("file_type", "micro_f1", "actions_precision", "invented_labels"):
        assert column in first


def test_category_score_json_includes_pairings(small_report, tmp_path):
    report, _, _ = small_report
    data = report_to_json(report)
    doc = next(iter(data["per_document"].values()))
    cats = doc["categories"]
    assert set(cats) == {"actions", "data_types", "purposes"}
    for block in cats.values():
        assert "pairings" in block
