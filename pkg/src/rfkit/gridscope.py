"""Pixel-utilization maps of stride-1 convolution stacks.

The count at an input offset is the number of tap paths (one tap chosen per
layer) whose offsets sum to it, i.e. how many times that input pixel feeds the
central output unit.  Zeros inside the support are the gridding holes left by
dilated convolutions.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .archspec import LayerSpec, NetworkSpec
from .errors import ValidationError
from .rfengine import propagate

MAX_RF = 1024
ASCII_RAMP = " .:-=+*#%@"


@dataclass(frozen=True)
class UtilizationMap:
    counts: np.ndarray
    half_extent: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support_box(self) -> tuple[int, int, int, int]:
        """``(row_min, row_max, col_min, col_max)`` of nonzero cells, as array indices."""
        rows = np.flatnonzero(self.counts.any(axis=1))
        cols = np.flatnonzero(self.counts.any(axis=0))
        return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])

    @property
    def support_width(self) -> int:
        r0, r1, c0, c1 = self.support_box()
        return max(r1 - r0, c1 - c0) + 1

    def at(self, dx: int, dy: int) -> int:
        """Count at offset ``(dx, dy)`` from the center tap."""
        h = self.half_extent
        if abs(dx) > h or abs(dy) > h:
            return 0
        return int(self.counts[dy + h, dx + h])


@dataclass(frozen=True)
class GridDiagnostics:
    has_interior_zeros: bool
    coverage_ratio: Fraction
    uniformity: Fraction


@dataclass(frozen=True)
class AntiGridResult:
    admissible: bool
    k_prime: int
    lhs: int


def _taps(layer: LayerSpec) -> list[int]:
    half = layer.dilation * (layer.kernel - 1) // 2
    return list(range(-half, half + 1, layer.dilation))


def _count_dtype(spec: NetworkSpec):
    total = math.prod(layer.kernel ** 2 for layer in spec.layers)
    return np.int64 if total < 2 ** 62 else object


def utilization_map(spec: NetworkSpec) -> UtilizationMap:
    if not spec.layers:
        raise ValidationError("utilization map needs a non-empty stack")
    for i, layer in enumerate(spec.layers):
        if layer.stride != 1:
            raise ValidationError(f"layer {i}: utilization maps need stride 1, got {layer.stride}")
    rf = propagate(spec)[-1].rf
    if rf > MAX_RF:
        raise ValidationError(f"receptive field {rf} exceeds the map limit of {MAX_RF}")
    half = (rf - 1) // 2
    size = 2 * half + 1
    counts = np.zeros((size, size), dtype=_count_dtype(spec))
    counts[half, half] = 1
    reach = 0
    for layer in spec.layers:
        taps = _taps(layer)
        # only the window reached so far can hold nonzeros
        lo, hi = half - reach, half + reach + 1
        src = counts[lo:hi, lo:hi]
        out = np.zeros_like(counts)
        for dy in taps:
            for dx in taps:
                out[lo + dy:hi + dy, lo + dx:hi + dx] += src
        counts = out
        reach += taps[-1]
    return UtilizationMap(counts, half)


def diagnostics(umap: UtilizationMap) -> GridDiagnostics:
    r0, r1, c0, c1 = umap.support_box()
    box = umap.counts[r0:r1 + 1, c0:c1 + 1]
    nonzero = box != 0
    n_nonzero = int(nonzero.sum())
    coverage = Fraction(n_nonzero, box.size)
    uniformity = Fraction(int(box[nonzero].min()), int(box.max()))
    return GridDiagnostics(n_nonzero < box.size, coverage, uniformity)


def equivalent_kernel(pre_stack: list[int]) -> int:
    """Kernel size of a stack of stride-1, dilation-1 convs: ``sum(k_i - 1) + 1``."""
    if not pre_stack:
        raise ValidationError("equivalent kernel of an empty stack is undefined")
    for k in pre_stack:
        if k < 1:
            raise ValidationError(f"kernel sizes must be positive, got {k}")
    return sum(k - 1 for k in pre_stack) + 1


def check_anti_grid(pre_stack: list[int], kernel: int, dilation: int) -> AntiGridResult:
    """Admissible iff the last dilated conv spans strictly less than the
    equivalent kernel of the standard convs before it: ``(k-1)*r + 1 < k'``."""
    if kernel < 1 or dilation < 1:
        raise ValidationError("kernel and dilation must be positive")
    k_prime = equivalent_kernel(pre_stack)
    lhs = (kernel - 1) * dilation + 1
    return AntiGridResult(lhs < k_prime, k_prime, lhs)


def max_admissible_dilation(pre_stack: list[int], kernel: int) -> int | None:
    """Largest admissible dilation; 0 when none is, ``None`` (unbounded) for a 1x1 kernel."""
    k_prime = equivalent_kernel(pre_stack)
    if kernel < 1:
        raise ValidationError("kernel must be positive")
    if kernel == 1:
        return None
    return max(0, (k_prime - 2) // (kernel - 1))


def build_agrfm_stack(n_standard: int, kernel: int, dilation: int) -> NetworkSpec:
    """Dilation branch of the anti-grid module: ``n_standard`` plain convs, then one dilated conv."""
    if n_standard < 1:
        raise ValidationError("the dilation branch needs at least one standard conv")
    layers = [LayerSpec(kernel, 1, 1, f"std{i}") for i in range(n_standard)]
    layers.append(LayerSpec(kernel, 1, dilation, "dilated"))
    rf = 1 + sum(layer.dilation * (layer.kernel - 1) for layer in layers)
    return NetworkSpec(layers, rf)


def stack_from_pairs(pairs: list[tuple[int, int]], input_size: int | None = None) -> NetworkSpec:
    """Stride-1 stack from ``(kernel, dilation)`` pairs."""
    layers = [LayerSpec(k, 1, d) for k, d in pairs]
    if input_size is None:
        input_size = 1 + sum(layer.dilation * (layer.kernel - 1) for layer in layers)
    return NetworkSpec(layers, input_size)


# --- exports ----------------------------------------------------------------

def map_to_csv(umap: UtilizationMap) -> str:
    out = io.StringIO()
    for row in umap.counts:
        out.write(",".join(str(int(v)) for v in row) + "\n")
    return out.getvalue()


def map_to_pgm(umap: UtilizationMap) -> str:
    """Plain (P2) PGM with maxval set to the largest count."""
    h, w = umap.counts.shape
    maxval = int(umap.counts.max())
    if maxval > 65535:
        raise ValidationError(f"max count {maxval} exceeds the PGM maxval limit 65535")
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in umap.counts]
    return "\n".join(lines) + "\n"


def map_to_ascii(umap: UtilizationMap) -> str:
    """Ten-level heatmap; zero is blank and the maximum count is ``@``."""
    maxval = int(umap.counts.max())
    top = len(ASCII_RAMP) - 1
    rows = []
    for row in umap.counts:
        rows.append("".join(ASCII_RAMP[-(-int(v) * top // maxval)] for v in row))
    return "\n".join(rows) + "\n"
