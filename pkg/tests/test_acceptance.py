"""Exit criteria.  Run ``pytest tests/test_acceptance.py`` for a per-criterion summary."""
import io
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from rfkit.aligner import AlignConfig, AnchorStats, RFTargets, rf_targets, search_blocks
from rfkit.cli import run
from rfkit.detmetrics import DetectionRecord, GroundTruthRecord, evaluate, match_detections
from rfkit.gridscope import diagnostics, stack_from_pairs, utilization_map
from rfkit.rfengine import propagate

from oracles import brute_force_map, brute_force_matching


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue()


@pytest.mark.criterion(1, "reference backbone stage sizes and RFs from `rf --backbone 3,1,1,1,1 --input 640`")
def test_reference_backbone_table():
    start = time.perf_counter()
    code, out = cli("rf", "--backbone", "3,1,1,1,1", "--input", "640")
    elapsed = time.perf_counter() - start
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert code == 0
    assert [(r[0], int(r[1]), int(r[2])) for r in rows] == [
        ("P1", 320, 27), ("P2", 160, 47), ("P3", 80, 87), ("P4", 40, 167), ("P5", 20, 327)]
    assert elapsed < 1.0


@pytest.mark.criterion(2, "anti-grid condition: r=4 admissible, r=5 not, --advise gives 4")
def test_anti_grid_fixtures():
    assert cli("agrfm", "--pre", "5x3", "--kernel", "3", "--dilation", "4")[1].startswith("admissible=true\n")
    assert cli("agrfm", "--pre", "5x3", "--kernel", "3", "--dilation", "5")[1].startswith("admissible=false\n")
    code, out = cli("agrfm", "--pre", "5x3", "--kernel", "3", "--dilation", "5", "--advise")
    assert code == 0 and "max_dilation=4" in out.splitlines()


@pytest.mark.criterion(3, "grid-effect pattern of the five utilization-map configurations")
def test_grid_effect_pattern():
    configs = {
        "a": ([(3, 2)] * 4, True),
        "b": ([(3, 1), (3, 2), (3, 3), (3, 4)], False),
        "c": ([(3, 1)] * 6, False),
        "d": ([(3, 1)] * 5 + [(3, 4)], False),
        "e": ([(3, 1)] * 5 + [(3, 5)], False),
    }
    start = time.perf_counter()
    for name, (pairs, zeros) in configs.items():
        assert diagnostics(utilization_map(stack_from_pairs(pairs))).has_interior_zeros is zeros, name
    assert time.perf_counter() - start < 5.0
    # (e) is flagged by the admissibility check instead
    assert cli("agrfm", "--pre", "5x3", "--kernel", "3", "--dilation", "5")[1].startswith("admissible=false")


@pytest.mark.criterion(4, "utilization map == brute-force tap enumeration (>=200 random stacks)")
def test_map_oracle():
    rng = random.Random(20241018)
    cases = 0
    while cases < 240:
        depth = rng.randint(1, 4)
        pairs = [(rng.choice([1, 3, 5]), rng.randint(1, 4)) for _ in range(depth)]
        if math.prod(k * k for k, _ in pairs) > 200_000:
            continue
        spec = stack_from_pairs(pairs)
        umap = utilization_map(spec)
        assert np.array_equal(umap.counts, brute_force_map(pairs)), pairs
        assert umap.total == math.prod(k * k for k, _ in pairs)
        assert umap.support_width == propagate(spec)[-1].rf
        cases += 1
    # four k=5 layers exceed the enumeration budget; conservation still holds
    for dilations in [(1, 2, 3, 4), (4, 4, 4, 4), (1, 1, 1, 1)]:
        pairs = [(5, d) for d in dilations]
        assert utilization_map(stack_from_pairs(pairs)).total == 5 ** 8


@pytest.mark.criterion(5, "block search recovers (3,1,1,1,1) from its own stage RFs")
def test_alignment_recovery():
    result = search_blocks(RFTargets(27, 47, 87, 167, 327), 640)
    assert result.block_counts == (3, 1, 1, 1, 1)
    assert result.objective == 0


@pytest.mark.criterion(6, "RF target arithmetic for tiny=10, mean=20, large=e^4, lambda=4")
def test_target_arithmetic():
    t = rf_targets(AnchorStats(10.0, 20.0, math.exp(4), 1), AlignConfig(lam=4))
    assert (t.p1, t.p2, t.p3) == (40, 120, 80)
    assert t.p4 == 4 * (20 + math.exp(4))
    assert round(t.p4, 2) == 298.39
    assert math.isclose(t.p5, 16, rel_tol=1e-9, abs_tol=0)


@pytest.mark.criterion(7, "detection metrics: brute-force matching, AP=5/6 fixture, perfect/empty mAP")
def test_metric_oracle():
    rng = random.Random(7)

    def box():
        x, y = rng.randint(0, 10), rng.randint(0, 10)
        return (float(x), float(y), float(x + rng.randint(1, 6)), float(y + rng.randint(1, 6)))

    for _ in range(500):
        gts = [box() for _ in range(rng.randint(0, 4))]
        dets = [(rng.random(), box()) for _ in range(rng.randint(0, 6))]
        matched = match_detections(gts, dets, 0.5)
        assert matched == brute_force_matching(gts, dets, 0.5)
        g_rec = [GroundTruthRecord("im", "c", b) for b in gts]
        d_rec = [DetectionRecord("im", "c", s, b) for s, b in dets]
        report = evaluate(g_rec, d_rec, conf_threshold=0.0)
        tp = sum(m is not None for m in matched)
        assert (report.tp, report.fp, report.fn) == (tp, len(dets) - tp, len(gts) - tp)

    g = [GroundTruthRecord("im", "c", (0, 0, 10, 10)), GroundTruthRecord("im", "c", (50, 50, 60, 60))]
    d = [DetectionRecord("im", "c", 0.9, (0, 0, 10, 10)), DetectionRecord("im", "c", 0.8, (100, 100, 110, 110)),
         DetectionRecord("im", "c", 0.7, (50, 50, 60, 60))]
    assert evaluate(g, d).map50 == Fraction(5, 6)
    assert evaluate(g, [DetectionRecord("im", "c", 1.0, x.box) for x in g]).map50 == 1
    assert evaluate(g, []).map50 == 0


@pytest.mark.criterion(8, "trained-network accuracy / FPS tables: not reproducible at desk scale")
def test_not_reproducible():
    pytest.skip("requires trained detectors and GPUs; covered by criteria 1-7 and the module invariant suites")
