"""Anchor-size statistics, per-stage RF targets and the block-count search."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .archspec import STAGE_NAMES, BackboneParams, build_backbone
from .errors import ValidationError
from .rfengine import stage_table

ANNOTATION_HEADER = ["image_id", "class", "x_min", "y_min", "x_max", "y_max"]
SIZE_METRICS = ("max", "gmean")
DEFAULT_LAMBDA = 4.0


@dataclass(frozen=True)
class BoxRecord:
    image_id: str
    class_label: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not self.x_max > self.x_min or not self.y_max > self.y_min:
            raise ValidationError(
                f"inverted or empty box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min


@dataclass(frozen=True)
class AnchorStats:
    tiny: float
    mean: float
    large: float
    count: int


@dataclass(frozen=True)
class AlignConfig:
    lam: float = DEFAULT_LAMBDA
    input_size: int = 640
    native_size: int = 2048

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError(f"lambda must be positive, got {self.lam}")
        if self.input_size < 1 or self.native_size < 1:
            raise ValidationError("input and native sizes must be positive")

    @property
    def scale(self) -> float:
        return self.input_size / self.native_size


@dataclass(frozen=True)
class RFTargets:
    p1: float
    p2: float
    p3: float
    p4: float
    p5: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.p1, self.p2, self.p3, self.p4, self.p5)


@dataclass(frozen=True)
class AlignmentResult:
    block_counts: tuple[int, ...]
    achieved_rf: tuple[int, ...]
    targets: RFTargets
    objective: float


def parse_float(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{what}: non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{what}: non-finite value {text!r}")
    return value


def read_csv_rows(text: str, header: list[str]):
    """Yield ``(line_number, row)`` after checking the header; line 1 is the header."""
    if not text.strip():
        raise ValidationError("empty file")
    reader = csv.reader(io.StringIO(text))
    first = next(reader)
    if [h.strip() for h in first] != header:
        raise ValidationError(f"bad header {','.join(first)!r}, expected {','.join(header)!r}")
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"row {reader.line_num}: expected {len(header)} fields, got {len(row)}")
        yield reader.line_num, row


def load_annotations(text: str) -> list[BoxRecord]:
    boxes = []
    for line, row in read_csv_rows(text, ANNOTATION_HEADER):
        coords = [parse_float(v, f"row {line}") for v in row[2:]]
        try:
            boxes.append(BoxRecord(row[0], row[1], *coords))
        except ValidationError as exc:
            raise ValidationError(f"row {line}: {exc}") from None
    return boxes


def box_sizes(boxes: list[BoxRecord], scale: float = 1.0, metric: str = "max") -> list[float]:
    if metric == "max":
        return [max(b.width, b.height) * scale for b in boxes]
    if metric == "gmean":
        return [math.sqrt(b.width * b.height) * scale for b in boxes]
    raise ValidationError(f"unknown size metric {metric!r} (expected one of {SIZE_METRICS})")


def anchor_stats(boxes: list[BoxRecord], scale: float = 1.0, metric: str = "max") -> AnchorStats:
    """Mean size of the smallest 5%, of all, and of the largest 2% of boxes.

    Percentile counts are ``ceil(p*N)``, so at least one box always falls in each tail.
    """
    if not boxes:
        raise ValidationError("no boxes to compute anchor statistics from")
    sizes = sorted(box_sizes(boxes, scale, metric))
    n = len(sizes)
    n_tiny = math.ceil(Fraction(5, 100) * n)
    n_large = math.ceil(Fraction(2, 100) * n)
    return AnchorStats(
        tiny=math.fsum(sizes[:n_tiny]) / n_tiny,
        mean=math.fsum(sizes) / n,
        large=math.fsum(sizes[-n_large:]) / n_large,
        count=n,
    )


def rf_targets(stats: AnchorStats, cfg: AlignConfig) -> RFTargets:
    if stats.large <= 1:
        raise ValidationError(f"anchor_large={stats.large} gives a non-positive log target for P5")
    lam = cfg.lam
    return RFTargets(
        p1=lam * stats.tiny,
        p2=lam * (stats.tiny + stats.mean),
        p3=lam * stats.mean,
        p4=lam * (stats.mean + stats.large),
        p5=lam * math.log(stats.large),
    )


def backbone_rfs(block_counts, input_size: int = 640) -> tuple[int, ...]:
    table = stage_table(build_backbone(BackboneParams(tuple(int(n) for n in block_counts), input_size)))
    return tuple(r.rf for r in table)


def search_blocks(targets: RFTargets, input_size: int = 640, n_max: int = 8) -> AlignmentResult:
    """Exhaustive search over ``[0, n_max]^5`` minimizing ``sum|rf_i - target_i|``.

    Ties go to the smaller total block count, then the lexicographically
    smallest configuration.  Stage RFs are affine in the block counts, so the
    grid is scored from the zero configuration plus one unit column per stage.
    """
    if not 0 <= n_max <= 16:
        raise ValidationError(f"n_max must be in [0, 16], got {n_max}")
    base = np.array(backbone_rfs((0,) * 5, input_size), dtype=np.int64)
    units = np.array([np.array(backbone_rfs(np.eye(5, dtype=int)[i], input_size)) - base
                      for i in range(5)], dtype=np.int64)
    axis = np.arange(n_max + 1)
    # lexicographic enumeration: row index order == lexicographic order
    grid = np.stack(np.meshgrid(*[axis] * 5, indexing="ij"), axis=-1).reshape(-1, 5)
    rfs = base + grid @ units
    target = np.array(targets.as_tuple(), dtype=float)
    objective = np.abs(rfs - target).sum(axis=1)
    totals = grid.sum(axis=1)
    best = np.lexsort((np.arange(len(grid)), totals, objective))[0]
    counts = tuple(int(v) for v in grid[best])
    achieved = backbone_rfs(counts, input_size)
    return AlignmentResult(counts, achieved, targets, float(objective[best]))


def alignment_report_csv(result: AlignmentResult) -> str:
    out = io.StringIO()
    out.write("stage,target_rf,achieved_rf,blocks\n")
    for name, target, rf, n in zip(STAGE_NAMES, result.targets.as_tuple(),
                                   result.achieved_rf, result.block_counts):
        out.write(f"{name},{target!r},{rf},{n}\n")
    return out.getvalue()


def sizes_csv(boxes: list[BoxRecord], scale: float = 1.0, metric: str = "max") -> str:
    """Per-box size list (``image_id,class,size``) for plotting the size distribution."""
    out = io.StringIO()
    out.write("image_id,class,size\n")
    for box, size in zip(boxes, box_sizes(boxes, scale, metric)):
        out.write(f"{box.image_id},{box.class_label},{size!r}\n")
    return out.getvalue()
