"""Model-output post-processing: top-K ranking, detection assembly, accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class PostprocessError(ValueError):
    pass


@dataclass(frozen=True)
class Prediction:
    rank: int  # 1-based
    label_index: int
    label: str
    probability: float

    def to_json_obj(self) -> dict:
        return {
            "rank": self.rank,
            "label_index": self.label_index,
            "label": self.label,
            "probability": float(self.probability),
        }


@dataclass(frozen=True)
class DetectionFeature:
    box: tuple[float, float, float, float]  # ymin, xmin, ymax, xmax (normalized)
    class_index: int
    score: float
    mask: np.ndarray | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "box": [float(v) for v in self.box],
            "class_index": self.class_index,
            "score": float(self.score),
        }
        if self.mask is not None:
            obj["mask"] = self.mask.tolist()
        return obj


@dataclass(frozen=True)
class AccuracyReport:
    n_samples: int
    top1: float
    top5: float

    def to_json_obj(self) -> dict:
        return {"n_samples": self.n_samples, "top1": self.top1, "top5": self.top5}


def load_labels(text: str) -> list[str]:
    """Label files carry one label per line; the index is the line number."""
    return [line.rstrip("\n") for line in text.splitlines()]


def top_k(
    probabilities: np.ndarray, k: int, labels: Sequence[str]
) -> list[list[Prediction]]:
    """Rank each sample's classes by descending probability.

    Ties break toward the lower label index, so the ranking is a prefix of
    a deterministic full sort.
    """
    probs = np.asarray(probabilities)
    if probs.ndim == 1:
        probs = probs[None, :]
    if probs.ndim != 2:
        raise PostprocessError(f"expected [N, C] probabilities, got shape {probs.shape}")
    n, c = probs.shape
    if k > c:
        raise PostprocessError(f"k={k} exceeds class count {c}")
    if len(labels) != c:
        raise PostprocessError(f"expected {c} labels, got {len(labels)}")

    results: list[list[Prediction]] = []
    for row in probs:
        # stable sort on (-prob, index): ties resolve to the lower index
        order = sorted(range(c), key=lambda i: (-row[i], i))[:k]
        results.append(
            [
                Prediction(rank + 1, int(i), labels[i], float(row[i]))
                for rank, i in enumerate(order)
            ]
        )
    return results


def assemble_detections(
    boxes: np.ndarray,
    scores: np.ndarray,
    classes: np.ndarray,
    masks: np.ndarray | None = None,
) -> list[DetectionFeature]:
    """Zip per-detection tensors into one feature list, sorted by descending score."""
    boxes = np.asarray(boxes, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    classes = np.asarray(classes).reshape(-1)
    if boxes.ndim != 2 or (boxes.size and boxes.shape[1] != 4):
        raise PostprocessError(f"boxes must be [N, 4], got shape {boxes.shape}")
    n = boxes.shape[0]
    if scores.shape[0] != n or classes.shape[0] != n:
        raise PostprocessError(
            f"leading dimensions disagree: boxes={n} scores={scores.shape[0]} classes={classes.shape[0]}"
        )
    if masks is not None:
        masks = np.asarray(masks)
        if masks.shape[0] != n:
            raise PostprocessError(f"leading dimensions disagree: boxes={n} masks={masks.shape[0]}")

    order = sorted(range(n), key=lambda i: (-scores[i], i))
    features = []
    for i in order:
        features.append(
            DetectionFeature(
                box=tuple(float(v) for v in boxes[i]),
                class_index=int(classes[i]),
                score=float(scores[i]),
                mask=None if masks is None else masks[i],
            )
        )
    return features


def score_accuracy(
    results: Sequence[Sequence[Prediction]], ground_truth: Sequence[int]
) -> AccuracyReport:
    """Fractions of samples whose true label is at rank 1 / within ranks 1-5."""
    if len(results) != len(ground_truth):
        raise PostprocessError(
            f"got {len(results)} results for {len(ground_truth)} ground-truth labels"
        )
    if not results:
        return AccuracyReport(0, 0.0, 0.0)
    hits1 = hits5 = 0
    for predictions, truth in zip(results, ground_truth):
        indices = [p.label_index for p in predictions[:5]]
        if indices and indices[0] == truth:
            hits1 += 1
        if truth in indices:
            hits5 += 1
    n = len(results)
    return AccuracyReport(n, hits1 / n, hits5 / n)
