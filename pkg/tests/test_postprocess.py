from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evalscope.postprocess import (
    PostprocessError,
    Prediction,
    assemble_detections,
    load_labels,
    score_accuracy,
    top_k,
)


def test_basic_ranking() -> None:
    result = top_k(np.array([[0.1, 0.7, 0.2]]), 2, ["a", "b", "c"])[0]
    assert [(p.rank, p.label, p.probability) for p in result] == [(1, "b", 0.7), (2, "c", 0.2)]


def test_tie_break_by_lower_index() -> None:
    result = top_k(np.array([[0.25, 0.25, 0.25, 0.25]]), 3, ["a", "b", "c", "d"])[0]
    assert [p.label_index for p in result] == [0, 1, 2]


def test_probabilities_non_increasing() -> None:
    rng = np.random.default_rng(0)
    probs = rng.random((8, 10))
    for sample in top_k(probs, 5, [str(i) for i in range(10)]):
        values = [p.probability for p in sample]
        assert values == sorted(values, reverse=True)


def test_k_larger_than_classes_rejected() -> None:
    with pytest.raises(PostprocessError):
        top_k(np.array([[0.5, 0.5]]), 3, ["a", "b"])


def test_label_count_mismatch_rejected() -> None:
    with pytest.raises(PostprocessError):
        top_k(np.array([[0.5, 0.5]]), 1, ["a"])


def full_sort_oracle(row: np.ndarray) -> list[int]:
    """Independent full stable sort by (-probability, index)."""
    return [i for _, i in sorted(((-p, i) for i, p in enumerate(row)))]


def test_top_k_is_prefix_of_full_sort_exhaustive_small() -> None:
    values = [0.1, 0.25, 0.25, 0.4]
    labels = [str(i) for i in range(4)]
    for perm in itertools.permutations(values):
        row = np.array(perm)
        for k in range(1, 5):
            ours = [p.label_index for p in top_k(row[None, :], k, labels)[0]]
            assert ours == full_sort_oracle(row)[:k]


@settings(max_examples=100)
@given(st.integers(2, 12), st.integers(0, 2**31))
def test_top_k_matches_oracle_random(c: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    row = np.round(rng.random(c), 2)  # rounded to force ties
    labels = [str(i) for i in range(c)]
    k = int(rng.integers(1, c + 1))
    ours = [p.label_index for p in top_k(row[None, :], k, labels)[0]]
    assert ours == full_sort_oracle(row)[:k]


def test_top5_random_vector_matches_full_sort_prefix() -> None:
    rng = np.random.default_rng(1)
    row = rng.random(10)
    ours = [p.label_index for p in top_k(row[None, :], 5, [str(i) for i in range(10)])[0]]
    assert ours == full_sort_oracle(row)[:5]


# ---------------------------------------------------------------------------
# detection assembly


def test_assemble_sorted_by_score() -> None:
    boxes = np.array([[0.1, 0.1, 0.2, 0.2], [0.3, 0.3, 0.4, 0.4]])
    features = assemble_detections(boxes, np.array([0.4, 0.9]), np.array([7, 3]))
    assert [f.score for f in features] == [0.9, 0.4]
    assert features[0].class_index == 3
    assert features[0].box == (0.3, 0.3, 0.4, 0.4)


def test_assemble_empty() -> None:
    assert assemble_detections(np.zeros((0, 4)), np.zeros(0), np.zeros(0)) == []


def test_assemble_with_masks() -> None:
    boxes = np.array([[0, 0, 1, 1], [0, 0, 0.5, 0.5]])
    masks = np.arange(2 * 2 * 2).reshape(2, 2, 2)
    features = assemble_detections(boxes, np.array([0.2, 0.8]), np.array([1, 2]), masks)
    assert np.array_equal(features[0].mask, masks[1])
    assert np.array_equal(features[1].mask, masks[0])


def test_assemble_dim_mismatch_rejected() -> None:
    with pytest.raises(PostprocessError):
        assemble_detections(np.zeros((2, 4)), np.zeros(3), np.zeros(2))


# ---------------------------------------------------------------------------
# accuracy


def _preds(indices: list[int]) -> list[Prediction]:
    return [
        Prediction(rank, index, str(index), 1.0 / rank)
        for rank, index in enumerate(indices, start=1)
    ]


def test_all_rank1_correct() -> None:
    results = [_preds([3, 1, 2]) for _ in range(4)]
    report = score_accuracy(results, [3, 3, 3, 3])
    assert report.top1 == report.top5 == 1.0


def test_correct_at_rank3() -> None:
    results = [_preds([9, 8, 5, 7, 6]) for _ in range(4)]
    report = score_accuracy(results, [5] * 4)
    assert report.top1 == 0.0
    assert report.top5 == 1.0


def test_counting_oracle_on_planted_hits() -> None:
    rng = np.random.default_rng(2)
    results = []
    truths = []
    expected1 = expected5 = 0
    for i in range(100):
        truth = int(rng.integers(0, 50))
        rank_of_truth = int(rng.integers(1, 8))  # ranks 6,7 are misses
        others = [x for x in range(50, 60)]
        indices = others[: rank_of_truth - 1] + [truth] + others[rank_of_truth - 1 :]
        results.append(_preds(indices[:7]))
        truths.append(truth)
        expected1 += rank_of_truth == 1
        expected5 += rank_of_truth <= 5
    report = score_accuracy(results, truths)
    assert report.n_samples == 100
    assert report.top1 == expected1 / 100
    assert report.top5 == expected5 / 100


def test_permutation_invariance() -> None:
    rng = np.random.default_rng(3)
    results = [_preds(list(rng.permutation(10)[:5])) for _ in range(30)]
    truths = [int(rng.integers(0, 10)) for _ in range(30)]
    base = score_accuracy(results, truths)
    order = list(rng.permutation(30))
    shuffled = score_accuracy([results[i] for i in order], [truths[i] for i in order])
    assert (base.top1, base.top5) == (shuffled.top1, shuffled.top5)


def test_length_mismatch_rejected() -> None:
    with pytest.raises(PostprocessError):
        score_accuracy([_preds([1])], [1, 2])


def test_top1_never_exceeds_top5() -> None:
    rng = np.random.default_rng(4)
    for _ in range(20):
        results = [_preds(list(rng.permutation(8)[:5])) for _ in range(10)]
        truths = [int(rng.integers(0, 8)) for _ in range(10)]
        report = score_accuracy(results, truths)
        assert 0.0 <= report.top1 <= report.top5 <= 1.0


def test_load_labels_line_indexed() -> None:
    labels = load_labels("first\nsecond\nthird\n")
    assert labels == ["first", "second", "third"]
