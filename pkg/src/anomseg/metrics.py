"""Detection and reconstruction metrics.

Detection matching is the standard greedy protocol: predictions sorted by
descending score, each matched to the unmatched same-class ground truth with
the highest IoU above the threshold.  Average precision uses all-point
interpolation (monotone precision envelope integrated over recall) at a
default IoU threshold of 0.5; mAP averages over the classes present in the
ground truth.  MSE is reported in 8-bit units (values scaled by 255 before
squaring).  Precision/recall/F1 here are micro-averaged over all classes.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "mse",
    "iou",
    "MatchResult",
    "match_detections",
    "precision_recall_f1",
    "average_precision",
    "mean_average_precision",
    "classification_accuracy",
    "scan_level_prf1",
    "evaluate_detections",
    "MetricReport",
]


def mse(a, b):
    """Mean squared difference in 8-bit units."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(((a - b) * 255.0) ** 2))


def _area(box):
    x0, y0, x1, y1 = box
    return (x1 - x0 + 1) * (y1 - y0 + 1)


def iou(a, b):
    """Intersection over union with inclusive pixel coordinates."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0) + 1
    ih = min(ay1, by1) - max(ay0, by0) + 1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (_area(a) + _area(b) - inter)


def _box_of(obj):
    return obj.bbox if hasattr(obj, "bbox") else tuple(obj)


def _label_of(obj):
    for attr in ("class_label", "label"):
        if hasattr(obj, attr):
            return getattr(obj, attr)
    return None


def _score_of(obj):
    score = getattr(obj, "score", None)
    return 0.0 if score is None else float(score)


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list = field(default_factory=list)  # (pred_index, gt_index, iou)


def _greedy_match(preds, gts, iou_thresh, class_aware=True):
    """Match flags for predictions sorted by descending score.

    Returns (order, flags, pairs): order is the sort permutation, flags[i]
    is True when the i-th sorted prediction is a true positive.
    """
    order = sorted(range(len(preds)), key=lambda i: -_score_of(preds[i]))
    taken = [False] * len(gts)
    flags = []
    pairs = []
    for pi in order:
        pred = preds[pi]
        best_iou, best_gt = 0.0, None
        for gi, gt in enumerate(gts):
            if taken[gi] or (class_aware and _label_of(gt) != _label_of(pred)):
                continue
            value = iou(_box_of(pred), _box_of(gt))
            if value >= iou_thresh and value > best_iou:
                best_iou, best_gt = value, gi
        if best_gt is None:
            flags.append(False)
        else:
            taken[best_gt] = True
            flags.append(True)
            pairs.append((pi, best_gt, best_iou))
    return order, flags, pairs


def match_detections(preds, gts, iou_thresh=0.5):
    """Greedy score-ranked matching; each gt and each pred used at most once."""
    if not (0.0 < iou_thresh <= 1.0):
        raise ValueError(f"iou_thresh must be in (0, 1], got {iou_thresh}")
    _, flags, pairs = _greedy_match(list(preds), list(gts), iou_thresh)
    tp = sum(flags)
    return MatchResult(tp, len(flags) - tp, len(list(gts)) - tp, pairs)


def precision_recall_f1(match):
    """(P, R, F1) with the 0-when-undefined convention."""
    p = match.tp / (match.tp + match.fp) if match.tp + match.fp else 0.0
    r = match.tp / (match.tp + match.fn) if match.tp + match.fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def average_precision(preds, gts, iou_thresh=0.5):
    """All-point interpolated AP for a single class.

    Returns None when there are no ground truths (undefined, not zero).
    """
    preds, gts = list(preds), list(gts)
    if not gts:
        return None
    if not preds:
        return 0.0
    _, flags, _ = _greedy_match(preds, gts, iou_thresh)
    tp_cum = np.cumsum(flags)
    ranks = np.arange(1, len(flags) + 1)
    precision = tp_cum / ranks
    recall = tp_cum / len(gts)
    # monotone non-increasing precision envelope, integrated over recall
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    prev_recall = 0.0
    for p, r in zip(envelope, recall):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return float(ap)


def mean_average_precision(preds, gts, iou_thresh=0.5):
    """Per-class AP dict and their mean over classes present in the gts.

    Returns (per_class, mAP); mAP is None when no class has ground truths.
    """
    classes = sorted({_label_of(g) for g in gts}, key=lambda c: (c is None, c))
    per_class = {}
    for cls in classes:
        cls_preds = [p for p in preds if _label_of(p) == cls]
        cls_gts = [g for g in gts if _label_of(g) == cls]
        per_class[cls] = average_precision(cls_preds, cls_gts, iou_thresh)
    values = [v for v in per_class.values() if v is not None]
    return per_class, (float(np.mean(values)) if values else None)


def classification_accuracy(predicted, actual):
    """Fraction of exact label matches."""
    predicted, actual = list(predicted), list(actual)
    if len(predicted) != len(actual):
        raise ValueError("label vectors differ in length")
    if not predicted:
        raise ValueError("empty label vectors")
    return sum(p == a for p, a in zip(predicted, actual)) / len(predicted)


def evaluate_detections(preds_per_scan, gts_per_scan, iou_thresh=0.5):
    """Dataset-level detection metrics with per-scan matching.

    Matching never crosses scan boundaries; AP pools the score-ranked
    match flags of all scans per class.  Returns a MetricReport with
    box-level micro P/R/F1, per-class AP, mAP, the scan-level P/R/F1, and
    (when matched pairs carry labels on both sides) classification accuracy.
    """
    if len(preds_per_scan) != len(gts_per_scan):
        raise ValueError("scan lists differ in length")
    pooled = {}  # class -> list of (score, is_tp)
    n_gt = {}
    tp = fp = fn = 0
    matched_labels = []
    for preds, gts in zip(preds_per_scan, gts_per_scan):
        preds, gts = list(preds), list(gts)
        for g in gts:
            n_gt[_label_of(g)] = n_gt.get(_label_of(g), 0) + 1
        order, flags, _ = _greedy_match(preds, gts, iou_thresh)
        for pi, flag in zip(order, flags):
            pooled.setdefault(_label_of(preds[pi]), []).append(
                (_score_of(preds[pi]), flag)
            )
        tp += sum(flags)
        fp += len(flags) - sum(flags)
        fn += len(gts) - sum(flags)
        # label accuracy given correct localization: match class-agnostically
        _, _, loc_pairs = _greedy_match(preds, gts, iou_thresh, class_aware=False)
        for pi, gi, _ in loc_pairs:
            pred_label, gt_label = _label_of(preds[pi]), _label_of(gts[gi])
            if pred_label is not None and gt_label is not None:
                matched_labels.append((pred_label, gt_label))
    per_class = {}
    for cls, total in sorted(n_gt.items(), key=lambda kv: (kv[0] is None, kv[0])):
        entries = sorted(pooled.get(cls, []), key=lambda sf: -sf[0])
        if not entries:
            per_class[cls] = 0.0
            continue
        flags = np.array([f for _, f in entries])
        tp_cum = np.cumsum(flags)
        precision = tp_cum / np.arange(1, len(flags) + 1)
        recall = tp_cum / total
        envelope = np.maximum.accumulate(precision[::-1])[::-1]
        ap = 0.0
        prev = 0.0
        for p, r in zip(envelope, recall):
            if r > prev:
                ap += (r - prev) * p
                prev = r
        per_class[cls] = float(ap)
    values = list(per_class.values())
    p, r, f1 = precision_recall_f1(MatchResult(tp, fp, fn))
    sp, sr, sf1 = scan_level_prf1(preds_per_scan, gts_per_scan)
    accuracy = None
    if matched_labels:
        accuracy = classification_accuracy(*zip(*matched_labels))
    return MetricReport(
        precision=p,
        recall=r,
        f1=f1,
        accuracy=accuracy,
        ap_per_class=per_class,
        map=(float(np.mean(values)) if values else None),
        scan_precision=sp,
        scan_recall=sr,
        scan_f1=sf1,
    )


def scan_level_prf1(detections_per_scan, gts_per_scan):
    """F1 on the binary decision "scan contains at least one anomaly"."""
    if len(detections_per_scan) != len(gts_per_scan):
        raise ValueError("scan lists differ in length")
    tp = fp = fn = 0
    for dets, gts in zip(detections_per_scan, gts_per_scan):
        predicted = len(dets) > 0
        actual = len(gts) > 0
        if predicted and actual:
            tp += 1
        elif predicted:
            fp += 1
        elif actual:
            fn += 1
    return precision_recall_f1(MatchResult(tp, fp, fn))


@dataclass
class MetricReport:
    """Bundle of the quantitative measures; absent values stay None."""

    mse: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    accuracy: float | None = None
    ap_per_class: dict | None = None
    map: float | None = None
    scan_precision: float | None = None
    scan_recall: float | None = None
    scan_f1: float | None = None

    def _items(self):
        for name in ("mse", "precision", "recall", "f1", "accuracy", "map",
                     "scan_precision", "scan_recall", "scan_f1"):
            value = getattr(self, name)
            if value is not None:
                yield name, value
        if self.ap_per_class:
            for cls, value in self.ap_per_class.items():
                if value is not None:
                    yield f"ap[{cls}]", value

    def as_text(self):
        return "\n".join(f"{k} = {v:.6f}" for k, v in self._items()) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.as_text())

    @staticmethod
    def parse(text):
        values = {}
        for line in text.splitlines():
            if "=" in line:
                key, _, raw = line.partition("=")
                values[key.strip()] = float(raw)
        return values
