"""Receptive-field / cumulative-stride recursion and fusion-graph shape inference.

Every layer uses "same" padding ``p = d*(k-1)/2``, so only odd kernels are
accepted.  For layer ``n``::

    rf_n   = rf_{n-1} + d_n*(k_n-1)*jump_{n-1}
    jump_n = jump_{n-1}*s_n
    size_n = (size_{n-1} + 2p - d_n*(k_n-1) - 1) // s_n + 1
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

from .archspec import STAGE_NAMES, NetworkSpec
from .errors import ValidationError


@dataclass(frozen=True)
class RFState:
    rf: int
    jump: int
    size: int


@dataclass(frozen=True)
class StageReport:
    stage: str
    size: int
    rf: int
    jump: int


def propagate(spec: NetworkSpec) -> list[RFState]:
    """Per-layer states; element ``i`` is the state after ``spec.layers[i]``."""
    state = RFState(1, 1, spec.input_size)
    states = []
    for i, layer in enumerate(spec.layers):
        span = layer.dilation * (layer.kernel - 1)
        if layer.kernel % 2 == 0:
            raise ValidationError(f"layer {i}: even kernel {layer.kernel} is unsupported with same padding")
        pad = span // 2
        size = (state.size + 2 * pad - span - 1) // layer.stride + 1
        if size < 1:
            raise ValidationError(f"layer {i}: spatial size underflow ({state.size} -> {size})")
        state = RFState(state.rf + span * state.jump, state.jump * layer.stride, size)
        states.append(state)
    return states


def stage_table(spec: NetworkSpec) -> list[StageReport]:
    if not spec.stage_marks:
        return []
    states = propagate(spec)
    return [StageReport(name, states[spec.stage_marks[name]].size,
                        states[spec.stage_marks[name]].rf, states[spec.stage_marks[name]].jump)
            for name in STAGE_NAMES if name in spec.stage_marks]


def stage_table_csv(reports: list[StageReport]) -> str:
    out = io.StringIO()
    out.write("stage,size,rf,jump\n")
    for r in reports:
        out.write(f"{r.stage},{r.size},{r.rf},{r.jump}\n")
    return out.getvalue()


# --- fusion graph -----------------------------------------------------------

FUSION_OPS = ("source", "bilinear_resize", "concat", "agrfm_passthrough")


@dataclass(frozen=True)
class TensorShape:
    height: int
    width: int
    channels: int

    def __post_init__(self):
        for name in ("height", "width", "channels"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"tensor {name} must be a positive integer, got {value!r}")

    def __str__(self):
        return f"{self.height}x{self.width}x{self.channels}"


@dataclass
class FusionNode:
    """One node of a fusion graph.

    ``source`` nodes carry their shape up front.  ``bilinear_resize`` needs
    ``target=(h, w)``; ``agrfm_passthrough`` may set ``out_channels``
    (default: keep the input's channels).
    """
    id: str
    op: str
    inputs: tuple[str, ...] = ()
    shape: TensorShape | None = None
    target: tuple[int, int] | None = None
    out_channels: int | None = None


@dataclass
class FusionGraph:
    nodes: list[FusionNode] = field(default_factory=list)

    def __getitem__(self, node_id: str) -> FusionNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def add(self, node: FusionNode) -> FusionNode:
        if node.op not in FUSION_OPS:
            raise ValidationError(f"unknown fusion op {node.op!r}")
        if any(n.id == node.id for n in self.nodes):
            raise ValidationError(f"duplicate node id {node.id!r}")
        self.nodes.append(node)
        return node


def _topological_order(graph: FusionGraph) -> list[FusionNode]:
    by_id = {n.id: n for n in graph.nodes}
    for n in graph.nodes:
        for src in n.inputs:
            if src not in by_id:
                raise ValidationError(f"node {n.id!r} references unknown input {src!r}")
    order, state = [], {}

    def visit(node_id, path):
        mark = state.get(node_id)
        if mark == "done":
            return
        if mark == "active":
            raise ValidationError(f"fusion graph has a cycle through {' -> '.join(path + [node_id])}")
        state[node_id] = "active"
        for src in by_id[node_id].inputs:
            visit(src, path + [node_id])
        state[node_id] = "done"
        order.append(by_id[node_id])

    for n in graph.nodes:
        visit(n.id, [])
    return order


def infer_shapes(graph: FusionGraph) -> FusionGraph:
    """Fill in ``shape`` on every non-source node, in place; returns ``graph``."""
    for node in _topological_order(graph):
        ins = [graph[i].shape for i in node.inputs]
        if node.op == "source":
            if node.inputs or node.shape is None:
                raise ValidationError(f"source node {node.id!r} needs a shape and no inputs")
        elif node.op == "bilinear_resize":
            if len(ins) != 1 or node.target is None:
                raise ValidationError(f"resize node {node.id!r} needs one input and a target size")
            h, w = node.target
            node.shape = TensorShape(h, w, ins[0].channels)
        elif node.op == "agrfm_passthrough":
            if len(ins) != 1:
                raise ValidationError(f"agrfm node {node.id!r} needs exactly one input")
            node.shape = TensorShape(ins[0].height, ins[0].width, node.out_channels or ins[0].channels)
        elif node.op == "concat":
            if not ins:
                raise ValidationError(f"concat node {node.id!r} has no inputs")
            first = ins[0]
            for src, shape in zip(node.inputs[1:], ins[1:]):
                if (shape.height, shape.width) != (first.height, first.width):
                    raise ValidationError(
                        f"concat {node.id!r}: spatial mismatch between {node.inputs[0]} ({first}) "
                        f"and {src} ({shape})")
            node.shape = TensorShape(first.height, first.width, sum(s.channels for s in ins))
    return graph


def build_fusion_graph(stages: list[StageReport], channels: dict[str, int],
                       sup_channels: int | None = None) -> FusionGraph:
    """Standard high-resolution fusion: P5 and P4 resized to P3, concatenated
    with P3, passed through AGRFM, resized to P2 and concatenated with P2."""
    by_name = {s.stage: s for s in stages}
    missing = [p for p in ("P2", "P3", "P4", "P5") if p not in by_name or p not in channels]
    if missing:
        raise ValidationError(f"fusion needs sizes and channels for {', '.join(missing)}")
    g = FusionGraph()
    for p in ("P2", "P3", "P4", "P5"):
        s = by_name[p]
        g.add(FusionNode(p, "source", shape=TensorShape(s.size, s.size, channels[p])))
    p3, p2 = by_name["P3"].size, by_name["P2"].size
    g.add(FusionNode("P5_up", "bilinear_resize", ("P5",), target=(p3, p3)))
    g.add(FusionNode("P4_up", "bilinear_resize", ("P4",), target=(p3, p3)))
    g.add(FusionNode("F_fuse", "concat", ("P5_up", "P4_up", "P3")))
    g.add(FusionNode("F_sup", "agrfm_passthrough", ("F_fuse",), out_channels=sup_channels))
    g.add(FusionNode("F_sup_up", "bilinear_resize", ("F_sup",), target=(p2, p2)))
    g.add(FusionNode("F_B2", "concat", ("F_sup_up", "P2")))
    return g


def infer_fusion(stages: list[StageReport], channels: dict[str, int],
                 sup_channels: int | None = None) -> FusionGraph:
    return infer_shapes(build_fusion_graph(stages, channels, sup_channels))
