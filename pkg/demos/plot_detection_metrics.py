"""
Evaluating detections
=====================

A toy scene with two classes to show matching, the confidence-threshold
operating point, the best-F1 operating point and per-class AP.
"""
# %%
from rfkit.detmetrics import (DetectionRecord, GroundTruthRecord, evaluate, report_csv)

gts = [
    GroundTruthRecord("a", "pl40", (10, 10, 30, 30)),
    GroundTruthRecord("a", "pl40", (60, 10, 80, 30)),
    GroundTruthRecord("a", "i5", (100, 100, 124, 124)),
    GroundTruthRecord("b", "pl40", (5, 5, 20, 20)),
]
dets = [
    DetectionRecord("a", "pl40", 0.92, (11, 10, 31, 30)),
    DetectionRecord("a", "pl40", 0.40, (11, 11, 30, 31)),   # duplicate -> FP
    DetectionRecord("a", "pl40", 0.20, (61, 11, 80, 30)),
    DetectionRecord("a", "i5", 0.75, (101, 99, 125, 123)),
    DetectionRecord("b", "pl40", 0.66, (40, 40, 55, 55)),   # wrong place -> FP
]

report = evaluate(gts, dets)
print(report_csv(report))

# %%
# Eleven-point interpolation for comparison with older benchmarks.

print(float(evaluate(gts, dets, interpolation="11pt").map50))
