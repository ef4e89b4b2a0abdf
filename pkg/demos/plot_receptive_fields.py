"""
Receptive fields of the backbone template
=========================================

Block counts per stage set how large each stage's theoretical receptive
field grows.  We print the stage table for the reference configuration and
look at how the fusion neck combines the stages.
"""
# %%
from rfkit import BackboneParams, build_backbone, infer_fusion, propagate, stage_table
from rfkit.rfengine import stage_table_csv

spec = build_backbone(BackboneParams((3, 1, 1, 1, 1), 640))
print(f"{len(spec)} conv layers")
print(stage_table_csv(stage_table(spec)))

# %%
# The RF after every layer, not just at stage boundaries.  Stride-2 layers
# double the jump, so later 3x3 convs add more pixels each.

for layer, state in zip(spec.layers, propagate(spec)):
    print(f"{layer.label:12s} k={layer.kernel} s={layer.stride}  rf={state.rf:4d} jump={state.jump:3d} size={state.size}")

# %%
# Sweeping one stage at a time shows which downstream RFs move.

for stage in range(5):
    counts = [3, 1, 1, 1, 1]
    counts[stage] += 2
    rfs = [r.rf for r in stage_table(build_backbone(BackboneParams(tuple(counts), 640)))]
    print(counts, rfs)

# %%
# Shape inference through the fusion neck.  Channel counts are not part of the
# template, so we pick some.

graph = infer_fusion(stage_table(spec), {"P2": 64, "P3": 128, "P4": 256, "P5": 512})
for node in graph.nodes:
    print(f"{node.id:9s} {node.op:18s} {node.shape}")
