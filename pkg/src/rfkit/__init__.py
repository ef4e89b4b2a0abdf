"""Receptive-field alignment, grid-effect analysis and detection metrics."""
from .aligner import (AlignConfig, AlignmentResult, AnchorStats, BoxRecord, RFTargets, anchor_stats,
                      load_annotations, rf_targets, search_blocks)
from .archspec import (BackboneParams, LayerSpec, NetworkSpec, build_backbone, parse_network,
                       serialize_network)
from .detmetrics import (DetectionRecord, EvalReport, GroundTruthRecord, evaluate, iou, load_detections,
                         load_ground_truth)
from .errors import ValidationError
from .gridscope import (GridDiagnostics, UtilizationMap, build_agrfm_stack, check_anti_grid, diagnostics,
                        max_admissible_dilation, utilization_map)
from .rfengine import (FusionGraph, FusionNode, RFState, StageReport, TensorShape, infer_fusion,
                       infer_shapes, propagate, stage_table)

__version__ = "0.1.0"
