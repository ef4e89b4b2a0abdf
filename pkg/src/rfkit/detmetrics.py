"""Detection evaluation: IoU matching, precision/recall/F1 and mAP at IoU 0.5."""
from __future__ import annotations

import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .aligner import parse_float, read_csv_rows
from .errors import ValidationError

logger = logging.getLogger(__name__)

GT_HEADER = ["image_id", "class", "x_min", "y_min", "x_max", "y_max"]
DET_HEADER = ["image_id", "class", "score", "x_min", "y_min", "x_max", "y_max"]
INTERPOLATIONS = ("all", "11pt")

Box = tuple[float, float, float, float]


def _check_box(box: Box):
    if len(box) != 4:
        raise ValidationError(f"box needs 4 coordinates, got {len(box)}")
    if not (box[2] > box[0] and box[3] > box[1]):
        raise ValidationError(f"inverted or empty box {tuple(box)}")


@dataclass(frozen=True)
class GroundTruthRecord:
    image_id: str
    class_label: str
    box: Box

    def __post_init__(self):
        object.__setattr__(self, "box", tuple(self.box))
        _check_box(self.box)


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    class_label: str
    score: float
    box: Box

    def __post_init__(self):
        object.__setattr__(self, "box", tuple(self.box))
        _check_box(self.box)
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score {self.score} outside [0, 1]")


@dataclass
class EvalReport:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    tp: int
    fp: int
    fn: int
    per_class_ap: dict[str, Fraction]
    map50: Fraction
    iou_threshold: float
    conf_threshold: float
    interpolation: str = "all"
    # operating point with the best F1 over all score thresholds
    best_f1: Fraction = Fraction(0)
    best_f1_conf: float | None = None
    best_f1_precision: Fraction = Fraction(0)
    best_f1_recall: Fraction = Fraction(0)
    per_class_counts: dict[str, tuple[int, int, int]] = field(default_factory=dict)


def iou(a: Box, b: Box) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def f1_score(precision: Fraction, recall: Fraction) -> Fraction:
    if precision + recall == 0:
        return Fraction(0)
    return 2 * precision * recall / (precision + recall)


def match_detections(gts: list[Box], dets: list[tuple[float, Box]],
                     iou_threshold: float = 0.5) -> list[int | None]:
    """Greedy matching for one (image, class) group.

    Detections are visited by descending score (stable on input order); each
    takes the unmatched ground truth of highest IoU >= threshold, earliest
    ground truth on ties.  Returns the matched ground-truth index per detection.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i][0])
    taken = [False] * len(gts)
    result: list[int | None] = [None] * len(dets)
    for i in order:
        best, best_iou = None, -1.0
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            o = iou(dets[i][1], gt)
            if o >= iou_threshold and o > best_iou:
                best, best_iou = j, o
        if best is not None:
            taken[best] = True
            result[i] = best
    return result


def average_precision(is_tp: list[bool], n_gt: int, interpolation: str = "all") -> Fraction:
    """AP of a score-ranked TP/FP list against ``n_gt`` ground truths.

    ``"all"`` integrates the monotone precision envelope exactly over every
    recall step; ``"11pt"`` averages the envelope at recall 0, 0.1, .., 1.
    """
    if n_gt == 0:
        raise ValidationError("AP is undefined without ground truths")
    recalls, precisions = [], []
    tp = 0
    for k, hit in enumerate(is_tp, start=1):
        tp += hit
        recalls.append(Fraction(tp, n_gt))
        precisions.append(Fraction(tp, k))
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    if interpolation == "all":
        ap, prev = Fraction(0), Fraction(0)
        for r, p in zip(recalls, envelope):
            ap += (r - prev) * p
            prev = r
        return ap
    if interpolation == "11pt":
        ap = Fraction(0)
        for t in range(11):
            level = Fraction(t, 10)
            ap += max((p for r, p in zip(recalls, envelope) if r >= level), default=Fraction(0))
        return ap / 11
    raise ValidationError(f"unknown interpolation {interpolation!r} (expected one of {INTERPOLATIONS})")


def evaluate(gts: list[GroundTruthRecord], dets: list[DetectionRecord],
             iou_threshold: float = 0.5, conf_threshold: float = 0.25,
             interpolation: str = "all") -> EvalReport:
    if interpolation not in INTERPOLATIONS:
        raise ValidationError(f"unknown interpolation {interpolation!r} (expected one of {INTERPOLATIONS})")
    if not 0.0 <= iou_threshold <= 1.0 or not 0.0 <= conf_threshold <= 1.0:
        raise ValidationError("iou and conf thresholds must lie in [0, 1]")

    gt_groups = defaultdict(list)
    for g in gts:
        gt_groups[g.image_id, g.class_label].append(g.box)
    n_gt = defaultdict(int)
    for g in gts:
        n_gt[g.class_label] += 1

    det_groups = defaultdict(list)
    for idx, d in enumerate(dets):
        det_groups[d.image_id, d.class_label].append(idx)
    unknown = sorted({d.class_label for d in dets} - set(n_gt))
    if unknown:
        logger.warning("detections for classes without ground truth counted as FP: %s", ", ".join(unknown))

    hit = [False] * len(dets)
    for key, members in det_groups.items():
        matched = match_detections(gt_groups.get(key, []), [(dets[i].score, dets[i].box) for i in members],
                                   iou_threshold)
        for i, m in zip(members, matched):
            hit[i] = m is not None

    def counts(threshold, label=None):
        tp = fp = 0
        for d, h in zip(dets, hit):
            if d.score >= threshold and (label is None or d.class_label == label):
                tp += h
                fp += not h
        total = len(gts) if label is None else n_gt.get(label, 0)
        return tp, fp, total - tp

    tp, fp, fn = counts(conf_threshold)
    precision, recall = _ratio(tp, tp + fp), _ratio(tp, tp + fn)

    per_class_counts = {c: counts(conf_threshold, c) for c in sorted(set(n_gt) | set(unknown))}

    per_class_ap = {}
    for label in sorted(n_gt):
        ranked = sorted((i for i, d in enumerate(dets) if d.class_label == label), key=lambda i: -dets[i].score)
        per_class_ap[label] = (average_precision([hit[i] for i in ranked], n_gt[label], interpolation)
                               if ranked else Fraction(0))
    map50 = sum(per_class_ap.values(), Fraction(0)) / len(per_class_ap) if per_class_ap else Fraction(0)

    report = EvalReport(precision, recall, f1_score(precision, recall), tp, fp, fn, per_class_ap, map50,
                        iou_threshold, conf_threshold, interpolation, per_class_counts=per_class_counts)
    for threshold in sorted({d.score for d in dets}, reverse=True):
        t_tp, t_fp, t_fn = counts(threshold)
        p, r = _ratio(t_tp, t_tp + t_fp), _ratio(t_tp, t_tp + t_fn)
        f = f1_score(p, r)
        if report.best_f1_conf is None or f > report.best_f1:
            report.best_f1, report.best_f1_conf = f, threshold
            report.best_f1_precision, report.best_f1_recall = p, r
    return report


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def report_csv(report: EvalReport) -> str:
    out = io.StringIO()
    out.write("metric,value\n")
    for name in ("precision", "recall", "f1", "tp", "fp", "fn", "map50", "iou_threshold",
                 "conf_threshold", "interpolation", "best_f1", "best_f1_conf",
                 "best_f1_precision", "best_f1_recall"):
        out.write(f"{name},{_fmt(getattr(report, name))}\n")
    out.write("\nclass,ap50\n")
    for label, ap in report.per_class_ap.items():
        out.write(f"{label},{_fmt(ap)}\n")
    return out.getvalue()


# --- CSV I/O ------------------------------------------------------------------

def _coords(row, line):
    return tuple(parse_float(v, f"row {line}") for v in row)


def load_ground_truth(text: str) -> list[GroundTruthRecord]:
    records = []
    for line, row in read_csv_rows(text, GT_HEADER):
        box = _coords(row[2:], line)
        try:
            records.append(GroundTruthRecord(row[0], row[1], box))
        except ValidationError as exc:
            raise ValidationError(f"row {line}: {exc}") from None
    return records


def load_detections(text: str) -> list[DetectionRecord]:
    records = []
    for line, row in read_csv_rows(text, DET_HEADER):
        score = parse_float(row[2], f"row {line}")
        box = _coords(row[3:], line)
        try:
            records.append(DetectionRecord(row[0], row[1], score, box))
        except ValidationError as exc:
            raise ValidationError(f"row {line}: {exc}") from None
    return records


def dump_ground_truth(records: list[GroundTruthRecord]) -> str:
    lines = [",".join(GT_HEADER)]
    lines += [",".join([r.image_id, r.class_label, *map(repr, r.box)]) for r in records]
    return "\n".join(lines) + "\n"


def dump_detections(records: list[DetectionRecord]) -> str:
    lines = [",".join(DET_HEADER)]
    lines += [",".join([r.image_id, r.class_label, repr(r.score), *map(repr, r.box)]) for r in records]
    return "\n".join(lines) + "\n"
