"""
Gridding in dilated stacks
==========================

Utilization maps count how many tap paths connect each input pixel to one
output unit.  Holes in the map are the gridding artifacts of dilated convs.
"""
# %%
from rfkit.gridscope import (build_agrfm_stack, check_anti_grid, diagnostics, map_to_ascii,
                             max_admissible_dilation, stack_from_pairs, utilization_map)

configs = {
    "four 3x3, d=2": [(3, 2)] * 4,
    "3x3 with d=1,2,3,4": [(3, 1), (3, 2), (3, 3), (3, 4)],
    "six 3x3, d=1": [(3, 1)] * 6,
    "five d=1 then d=4": [(3, 1)] * 5 + [(3, 4)],
    "five d=1 then d=5": [(3, 1)] * 5 + [(3, 5)],
}

for name, pairs in configs.items():
    umap = utilization_map(stack_from_pairs(pairs))
    d = diagnostics(umap)
    print(f"{name}: rf={umap.support_width} holes={d.has_interior_zeros} "
          f"coverage={float(d.coverage_ratio):.3f} uniformity={float(d.uniformity):.5f}")
    print(map_to_ascii(umap))

# %%
# The last two maps are both hole-free, but with d=5 the dilated taps reach
# past the span of the plain convs before them.  The admissibility check
# separates them.

pre = [3] * 5
for r in range(1, 7):
    res = check_anti_grid(pre, 3, r)
    print(f"r={r}: lhs={res.lhs} k'={res.k_prime} admissible={res.admissible}")
print("largest admissible dilation:", max_admissible_dilation(pre, 3))

# %%
# How many plain convs does a given dilation need?

for r in (2, 3, 4, 5):
    n = 1
    while not check_anti_grid([3] * n, 3, r).admissible:
        n += 1
    holes = diagnostics(utilization_map(build_agrfm_stack(n, 3, r))).has_interior_zeros
    print(f"d={r}: at least {n} plain 3x3 convs (map holes: {holes})")
