"""
Detection scoring: one-to-one greedy IoU matching, precision / recall /
F-measure over a sweep of IoU thresholds, the matched-IoU histogram, and the
anchor aspect-ratio statistic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import EmptyDataset
from .geometry import Quad, polygon_iou

DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)
HIST_EDGES = np.round(np.arange(0.5, 1.0001, 0.05), 2)


class Prediction(NamedTuple):
    quad: Quad
    confidence: float = 1.0


class GroundTruth(NamedTuple):
    quad: Quad
    ignore: bool = False


class Match(NamedTuple):
    pred: int
    gt: int
    iou: float


@dataclass
class ImageMatch:
    matches: list  # Match tuples, in prediction processing order
    num_pred: int  # predictions not absorbed by ignored ground truth
    num_gt: int  # ground truth not flagged ignore

    @property
    def matched(self) -> int:
        return len(self.matches)


@dataclass
class ReportRow:
    iou_threshold: float
    matched: int
    num_pred: int
    num_gt: int
    precision: float
    recall: float
    f_measure: float


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    histogram: list = field(default_factory=list)  # counts per HIST_EDGES bin

    def row(self, threshold: float) -> ReportRow:
        for r in self.rows:
            if abs(r.iou_threshold - threshold) < 1e-9:
                return r
        raise KeyError(threshold)


def _as_pred(p) -> Prediction:
    if isinstance(p, Prediction):
        return p
    if isinstance(p, Quad):
        return Prediction(p)
    return Prediction(*p)


def _as_gt(g) -> GroundTruth:
    if isinstance(g, GroundTruth):
        return g
    if isinstance(g, Quad):
        return GroundTruth(g)
    return GroundTruth(*g)


def iou_matrix(preds, gts) -> np.ndarray:
    out = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            out[i, j] = polygon_iou(p.quad, g.quad)
    return out


def match_greedy(preds: Sequence, gts: Sequence, iou_threshold: float = 0.5,
                 ious: np.ndarray | None = None) -> ImageMatch:
    """Confidence-ordered one-to-one matching.

    Predictions are visited by descending confidence (stable on ties); each
    takes the unmatched ground truth of highest IoU, provided the IoU reaches
    the threshold. A prediction landing on an ignored ground truth is dropped
    from both the match list and the prediction count.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in (0, 1]")
    preds = [_as_pred(p) for p in preds]
    gts = [_as_gt(g) for g in gts]
    if ious is None:
        ious = iou_matrix(preds, gts)
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken = np.zeros(len(gts), dtype=bool)
    matches = []
    absorbed = 0
    for i in order:
        if not len(gts):
            break
        cand = np.where(taken, -1.0, ious[i])
        j = int(np.argmax(cand))
        if cand[j] < iou_threshold:
            continue
        taken[j] = True
        if gts[j].ignore:
            absorbed += 1
        else:
            matches.append(Match(i, j, float(ious[i, j])))
    num_gt = sum(1 for g in gts if not g.ignore)
    return ImageMatch(matches, len(preds) - absorbed, num_gt)


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf(matched: int, num_pred: int, num_gt: int) -> tuple[float, float, float]:
    precision = matched / num_pred if num_pred else 0.0
    recall = matched / num_gt if num_gt else 0.0
    return precision, recall, f_measure(precision, recall)


def iou_histogram(values) -> list[int]:
    """Counts over [0.5, 0.55), ..., [0.95, 1.0]; values below 0.5 are ignored."""
    v = np.asarray(list(values), dtype=float)
    v = v[v >= HIST_EDGES[0] - 1e-12]
    counts, _ = np.histogram(np.clip(v, HIST_EDGES[0], HIST_EDGES[-1]), bins=HIST_EDGES)
    return [int(c) for c in counts]


def iou_sweep(preds: Mapping[str, Sequence], gts: Mapping[str, Sequence],
              thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> EvalReport:
    """Per-image greedy matching at every threshold, summed over images.

    ``preds`` and ``gts`` map image id to lists of predictions / ground truth.
    Images present on only one side count with an empty list on the other.
    The histogram is built from the matching at IoU 0.5.
    """
    thresholds = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly ascending")
    ids = sorted(set(preds) | set(gts))
    per_image = {}
    for k in ids:
        p = [_as_pred(x) for x in preds.get(k, [])]
        g = [_as_gt(x) for x in gts.get(k, [])]
        per_image[k] = (p, g, iou_matrix(p, g))
    report = EvalReport()
    for t in thresholds:
        matched = num_pred = num_gt = 0
        for p, g, m in per_image.values():
            res = match_greedy(p, g, t, m)
            matched += res.matched
            num_pred += res.num_pred
            num_gt += res.num_gt
        report.rows.append(ReportRow(t, matched, num_pred, num_gt, *prf(matched, num_pred, num_gt)))
    hist_ious = []
    for p, g, m in per_image.values():
        hist_ious.extend(x.iou for x in match_greedy(p, g, 0.5, m).matches)
    report.histogram = iou_histogram(hist_ious)
    return report


def geometric_ratios(low: float, high: float, count: int) -> list[float]:
    """``count`` values from ``low`` to ``high`` with a constant ratio between neighbours."""
    if count < 2:
        raise ValueError("count must be >= 2")
    out = np.geomspace(low, high, count)
    out[0], out[-1] = low, high
    return [float(v) for v in out]


def compute_anchor_ratios(boxes, low_q: float = 0.05, high_q: float = 0.95, count: int = 5) -> list[float]:
    """Anchor aspect ratios (w/h) spread geometrically between two quantiles.

    Quantiles use linear interpolation between the closest order statistics.
    """
    wh = np.asarray(boxes, dtype=float).reshape(-1, 2)
    if len(wh) == 0:
        raise EmptyDataset("no boxes")
    if not 0.0 < low_q < high_q < 1.0:
        raise ValueError("need 0 < low_q < high_q < 1")
    ratios = wh[:, 0] / wh[:, 1]
    lo, hi = np.quantile(ratios, [low_q, high_q], method="linear")
    return geometric_ratios(float(lo), float(hi), count)
