"""Sequential convolution-stack descriptions.

A :class:`NetworkSpec` is a plain ordered list of square convolutions plus
optional stage marks (``P1`` .. ``P5``) pointing at the last layer of each
stage.  Documents are JSON::

    {"input_size": 640,
     "layers": [{"kind": "conv", "kernel": 3, "stride": 2, "dilation": 1, "label": "stem"}],
     "stages": {"P1": 0}}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ValidationError

STAGE_NAMES = ("P1", "P2", "P3", "P4", "P5")
MAX_BLOCKS = 16

_LAYER_KEYS = {"kind", "kernel", "stride", "dilation", "label"}
_DOC_KEYS = {"input_size", "layers", "stages"}


@dataclass(frozen=True)
class LayerSpec:
    kernel: int
    stride: int = 1
    dilation: int = 1
    label: str | None = None
    kind: str = "conv"

    def __post_init__(self):
        if self.kind != "conv":
            raise ValidationError(f"unsupported layer kind {self.kind!r}")
        for name in ("kernel", "stride", "dilation"):
            value = getattr(self, name)
            if not _is_int(value) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")

    @property
    def extent(self) -> int:
        """Effective kernel extent ``d*(k-1)+1``."""
        return self.dilation * (self.kernel - 1) + 1


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    input_size: int
    stage_marks: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "stage_marks", dict(self.stage_marks))
        if not _is_int(self.input_size) or self.input_size < 1:
            raise ValidationError(f"input_size must be a positive integer, got {self.input_size!r}")
        last = -1
        for name in sorted(self.stage_marks, key=_stage_order):
            index = self.stage_marks[name]
            if not _is_int(index) or index < 0:
                raise ValidationError(f"stage {name} index must be a non-negative integer, got {index!r}")
            if index >= len(self.layers):
                raise ValidationError(
                    f"stage {name} index {index} out of range for {len(self.layers)} layers")
            if index <= last:
                raise ValidationError(f"stage marks must be strictly increasing in P1..P5 order (at {name})")
            last = index

    def __len__(self):
        return len(self.layers)


@dataclass(frozen=True)
class BackboneParams:
    block_counts: tuple[int, int, int, int, int]
    input_size: int = 640

    def __post_init__(self):
        counts = tuple(self.block_counts)
        object.__setattr__(self, "block_counts", counts)
        if len(counts) != 5:
            raise ValidationError(f"expected 5 block counts, got {len(counts)}")
        for n in counts:
            if not _is_int(n) or not 0 <= n <= MAX_BLOCKS:
                raise ValidationError(f"block counts must be integers in [0, {MAX_BLOCKS}], got {n!r}")
        if not _is_int(self.input_size) or self.input_size < 1:
            raise ValidationError(f"input_size must be a positive integer, got {self.input_size!r}")


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _stage_order(name: str) -> int:
    if name not in STAGE_NAMES:
        raise ValidationError(f"unknown stage name {name!r} (expected one of {', '.join(STAGE_NAMES)})")
    return STAGE_NAMES.index(name)


def build_backbone(params: BackboneParams) -> NetworkSpec:
    """Backbone template: a stride-2 stem, then per stage an optional
    stride-2 downsample (stages 2..5) and ``n_i`` bottlenecks of two 3x3 convs."""
    layers = [LayerSpec(3, 2, 1, "stem")]
    marks = {}
    for i, n in enumerate(params.block_counts, start=1):
        if i > 1:
            layers.append(LayerSpec(3, 2, 1, f"down{i}"))
        for b in range(n):
            layers.append(LayerSpec(3, 1, 1, f"p{i}.b{b}.cv1"))
            layers.append(LayerSpec(3, 1, 1, f"p{i}.b{b}.cv2"))
        marks[f"P{i}"] = len(layers) - 1
    return NetworkSpec(layers, params.input_size, marks)


def _layer_from_dict(obj, position: int) -> LayerSpec:
    if not isinstance(obj, dict):
        raise ValidationError(f"layers[{position}] must be an object")
    unknown = set(obj) - _LAYER_KEYS
    if unknown:
        raise ValidationError(f"layers[{position}]: unknown field(s) {sorted(unknown)}")
    for key in ("kind", "kernel", "stride", "dilation"):
        if key not in obj:
            raise ValidationError(f"layers[{position}]: missing field {key!r}")
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise ValidationError(f"layers[{position}]: label must be a string")
    try:
        return LayerSpec(kind=obj["kind"], kernel=obj["kernel"], stride=obj["stride"],
                         dilation=obj["dilation"], label=label)
    except ValidationError as exc:
        raise ValidationError(f"layers[{position}]: {exc}") from None


def parse_network(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ValidationError("network document must be a JSON object")
    unknown = set(doc) - _DOC_KEYS
    if unknown:
        raise ValidationError(f"unknown field(s) {sorted(unknown)}")
    for key in ("input_size", "layers"):
        if key not in doc:
            raise ValidationError(f"missing field {key!r}")
    if not isinstance(doc["layers"], list):
        raise ValidationError("'layers' must be a list")
    stages = doc.get("stages", {})
    if not isinstance(stages, dict):
        raise ValidationError("'stages' must be an object")
    layers = [_layer_from_dict(obj, i) for i, obj in enumerate(doc["layers"])]
    return NetworkSpec(layers, doc["input_size"], stages)


def serialize_network(spec: NetworkSpec) -> str:
    layers = []
    for layer in spec.layers:
        obj = {"kind": layer.kind, "kernel": layer.kernel, "stride": layer.stride,
               "dilation": layer.dilation}
        if layer.label is not None:
            obj["label"] = layer.label
        layers.append(obj)
    stages = {name: spec.stage_marks[name] for name in sorted(spec.stage_marks, key=_stage_order)}
    return json.dumps({"input_size": spec.input_size, "layers": layers, "stages": stages}, indent=1) + "\n"
