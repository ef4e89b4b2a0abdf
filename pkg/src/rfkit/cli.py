"""Command-line front end: ``rfkit {rf,gridmap,agrfm,align,eval} ...``.

Exit status is 0 on success, 1 on a validation error (one line on stderr)
and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import re
import sys

from . import aligner, detmetrics, gridscope
from .archspec import BackboneParams, NetworkSpec, build_backbone, parse_network
from .errors import ValidationError
from .rfengine import stage_table, stage_table_csv


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _kd_pairs(text):
    pairs = []
    for item in text.split(","):
        m = re.fullmatch(r"\s*(\d+):(\d+)\s*", item)
        if not m:
            raise argparse.ArgumentTypeError(f"expected k:d[,k:d...], got {text!r}")
        pairs.append((int(m.group(1)), int(m.group(2))))
    return pairs


def _pre_stack(text):
    m = re.fullmatch(r"(\d+)x(\d+)", text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"expected COUNTxK, got {text!r}")
    return [int(m.group(2))] * int(m.group(1))


def _read(path):
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}") from None


def _emit(text, path, out):
    if path:
        _write(path, text)
    else:
        out.write(text)


def cmd_rf(args, out):
    if args.spec:
        spec = parse_network(_read(args.spec))
        spec = NetworkSpec(spec.layers, args.input, spec.stage_marks)
    else:
        spec = build_backbone(BackboneParams(args.backbone, args.input))
    _emit(stage_table_csv(stage_table(spec)), args.csv, out)


def cmd_gridmap(args, out):
    if args.spec:
        spec = parse_network(_read(args.spec))
    else:
        spec = gridscope.stack_from_pairs(args.stack)
    umap = gridscope.utilization_map(spec)
    diag = gridscope.diagnostics(umap)
    out.write("metric,value\n")
    out.write(f"rf,{umap.support_width}\n")
    out.write(f"total,{umap.total}\n")
    out.write(f"max_count,{int(umap.counts.max())}\n")
    out.write(f"has_interior_zeros,{str(diag.has_interior_zeros).lower()}\n")
    out.write(f"coverage_ratio,{diag.coverage_ratio}\n")
    out.write(f"uniformity,{diag.uniformity}\n")
    if args.csv:
        _write(args.csv, gridscope.map_to_csv(umap))
    if args.pgm:
        _write(args.pgm, gridscope.map_to_pgm(umap))
    if args.ascii:
        out.write(gridscope.map_to_ascii(umap))


def cmd_agrfm(args, out):
    res = gridscope.check_anti_grid(args.pre, args.kernel, args.dilation)
    out.write(f"admissible={str(res.admissible).lower()}\n")
    out.write(f"k_prime={res.k_prime}\n")
    out.write(f"lhs={res.lhs}\n")
    if args.advise:
        best = gridscope.max_admissible_dilation(args.pre, args.kernel)
        out.write(f"max_dilation={'unbounded' if best is None else best}\n")


def cmd_align(args, out):
    cfg = aligner.AlignConfig(args.lam, args.input, args.native)
    boxes = aligner.load_annotations(_read(args.annotations))
    stats = aligner.anchor_stats(boxes, cfg.scale, args.size_metric)
    targets = aligner.rf_targets(stats, cfg)
    result = aligner.search_blocks(targets, args.input, args.n_max)
    out.write(aligner.alignment_report_csv(result))


def cmd_eval(args, out):
    gts = detmetrics.load_ground_truth(_read(args.gt))
    dets = detmetrics.load_detections(_read(args.pred))
    report = detmetrics.evaluate(gts, dets, args.iou, args.conf, args.interp)
    out.write(detmetrics.report_csv(report))


def build_parser():
    parser = argparse.ArgumentParser(prog="rfkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rf", help="stage table (size, RF, jump) of a network")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", metavar="FILE")
    src.add_argument("--backbone", type=_int_list, metavar="n1,n2,n3,n4,n5")
    p.add_argument("--input", type=int, required=True)
    p.add_argument("--csv", metavar="FILE")
    p.set_defaults(func=cmd_rf)

    p = sub.add_parser("gridmap", help="pixel-utilization map of a stride-1 stack")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", metavar="FILE")
    src.add_argument("--stack", type=_kd_pairs, metavar="k:d[,k:d...]")
    p.add_argument("--pgm", metavar="FILE")
    p.add_argument("--csv", metavar="FILE")
    p.add_argument("--ascii", action="store_true")
    p.set_defaults(func=cmd_gridmap)

    p = sub.add_parser("agrfm", help="anti-grid admissibility of the last dilated conv")
    p.add_argument("--pre", type=_pre_stack, required=True, metavar="COUNTxK")
    p.add_argument("--kernel", type=int, required=True)
    p.add_argument("--dilation", type=int, required=True)
    p.add_argument("--advise", action="store_true", help="also report the largest admissible dilation")
    p.set_defaults(func=cmd_agrfm)

    p = sub.add_parser("align", help="align backbone RFs to annotation size statistics")
    p.add_argument("--annotations", required=True, metavar="FILE")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--input", type=int, required=True)
    p.add_argument("--native", type=int, required=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--size-metric", choices=aligner.SIZE_METRICS, default="max")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="precision / recall / F1 / mAP50")
    p.add_argument("--gt", required=True, metavar="FILE")
    p.add_argument("--pred", required=True, metavar="FILE")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--conf", type=float, default=0.25)
    p.add_argument("--interp", choices=detmetrics.INTERPOLATIONS, default="all")
    p.set_defaults(func=cmd_eval)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except ValidationError as exc:
        err.write(f"rfkit {args.command}: {' '.join(str(exc).split())}\n")
        return 1
    return 0


def main():
    sys.exit(run())
