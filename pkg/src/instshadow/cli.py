"""Command line entry point: ``instshadow {synth,match,eval,stats,light,render}``.

Every command writes JSON atomically, carries ``format_version`` in its
payloads and exits non-zero with a JSON error object on stderr on failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import association, light, render, soap, synth
from ._io import FORMAT_VERSION, dumps, read_json, write_json, write_text
from .association import MatchConfig
from .mask import centroid
from .model import GroundTruthDataset, Predictions, ValidationError, compute_stats, load_ground_truth


def _float_pair(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'low,high', got {text!r}")
    return tuple(parts)


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iou-floor", type=float, default=0.0,
                   help="minimum (exclusive) merged-box IoU for a match (default 0)")
    p.add_argument("--threshold-scale", type=float, default=1.0,
                   help="candidate distance limit as a multiple of the shadow box height")
    p.add_argument("--score-mode", choices=association.SCORE_MODES, default="geometric_mean")


def _match_config(args) -> MatchConfig:
    return MatchConfig(args.threshold_scale, args.iou_floor, args.score_mode)


def _load_paired_or_match(path, config: MatchConfig):
    """Read final pairs; raw prediction files are run through pair-and-match."""
    data = read_json(path)
    if isinstance(data, dict) and "paired" in data:
        return association.paired_from_dict(data)
    try:
        preds = Predictions.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return association.all_paired(association.match_predictions(preds, config))


def _emit(args, payload) -> None:
    if args.out:
        write_json(args.out, payload)
    else:
        sys.stdout.write(dumps(payload))


def cmd_synth(args) -> int:
    if args.spec:
        spec = synth.SceneSpec.from_dict(read_json(args.spec) or {})
    else:
        noise = synth.NoiseModel(
            box_jitter=args.box_jitter,
            mask_radius=args.mask_radius,
            tp_score=args.tp_score,
            fp_score=args.fp_score,
            fp_rate=args.fp_rate,
            fn_rate=args.fn_rate,
            angle_noise=args.angle_noise,
        )
        spec = synth.SceneSpec(
            seed=args.seed,
            num_images=args.images,
            width=args.width,
            height=args.height,
            pairs=(args.min_pairs, args.max_pairs),
            light_angle=args.light_angle,
            shapes=tuple(args.shapes.split(",")),
            noise=noise,
        )
    result = synth.generate(spec)
    paths = result.save(args.out)
    sys.stdout.write(dumps({k: str(v) for k, v in paths.items()}))
    return 0


def cmd_match(args) -> int:
    config = _match_config(args)
    preds = Predictions.from_dict(read_json(args.pred))
    results = association.match_predictions(preds, config)
    association.save_paired(results, args.out, config)
    diag_path = args.diagnostics or str(Path(args.out).with_suffix("")) + ".diagnostics.json"
    write_json(diag_path, association.diagnostics_to_dict(results))
    return 0


def cmd_eval(args) -> int:
    gt = load_ground_truth(args.gt)
    paired = _load_paired_or_match(args.pred, _match_config(args))
    thresholds = soap.parse_thresholds(args.taus)
    variants = ("box", "mask") if args.variant == "both" else (args.variant,)
    reports = {v: soap.evaluate(paired, gt, soap.SoapConfig(thresholds, v)) for v in variants}
    tables = [soap.format_table([soap.report_row(args.method, r)], v) for v, r in reports.items()]
    payload = reports[variants[0]].to_dict() if len(variants) == 1 else {
        "format_version": FORMAT_VERSION,
        "reports": {v: r.to_dict() for v, r in reports.items()},
    }
    # stdout carries the JSON report when there is no --out; the table moves to stderr
    (sys.stdout if args.out else sys.stderr).write("\n\n".join(tables) + "\n")
    _emit(args, payload)
    return 0


def cmd_stats(args) -> int:
    stats = compute_stats(load_ground_truth(args.gt))
    _emit(args, stats.to_dict())
    return 0


def _gt_image_angle(pairs):
    return light.circular_mean(
        [light.ground_truth_angle(centroid(p.shadow_mask), centroid(p.object_mask)) for p in pairs]
    )


def cmd_light(args) -> int:
    paired = _load_paired_or_match(args.pred, MatchConfig())
    wrap = args.wrap_angles == "on"
    gt = load_ground_truth(args.gt) if args.gt else None
    groups = {}
    for p in paired:
        groups.setdefault(p.image_id, []).append(p)
    images = []
    for image_id, pairs in groups.items():
        entry = {"image_id": image_id, "num_pairs": len(pairs)}
        try:
            est = light.estimate_image_direction(pairs)
            entry.update(estimated_angle=est, estimated_angle_deg=math.degrees(est))
        except ValueError as exc:
            entry.update(estimated_angle=None, estimated_angle_deg=None, error=str(exc))
            est = None
        try:
            pred = light.circular_mean([p.light_angle for p in pairs], [p.combined_score for p in pairs])
            entry.update(predicted_angle=pred, predicted_angle_deg=math.degrees(pred))
        except ValueError:
            entry.update(predicted_angle=None, predicted_angle_deg=None)
        if gt is not None and gt.pairs.get(image_id) and est is not None:
            g = _gt_image_angle(gt.pairs[image_id])
            entry.update(gt_angle=g, gt_angle_deg=math.degrees(g), loss=light.light_loss(est, g, wrap))
        images.append(entry)
        if args.svg:
            w, h = _canvas(gt, image_id, pairs)
            svg = render.render_svg(image_id, w, h, paired=pairs, image_angle=entry["estimated_angle"])
            _write_svg(args.svg, image_id, svg)
    _emit(args, {"format_version": FORMAT_VERSION, "wrap_angles": wrap, "images": images})
    return 0


def _canvas(gt: GroundTruthDataset, image_id, pairs):
    if gt is not None and image_id in gt.images:
        info = gt.images[image_id]
        return info.width, info.height
    return render.canvas_size(pairs)


def _write_svg(directory, image_id, svg: str) -> None:
    path = Path(directory) / f"{image_id}.svg"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_text(path, svg)


def cmd_render(args) -> int:
    spec = render.RenderSpec(args.out, args.gt, args.pred)
    gt = load_ground_truth(spec.gt_path) if spec.gt_path else None
    paired = _load_paired_or_match(spec.pred_path, MatchConfig()) if spec.pred_path else []
    groups = {}
    if gt is not None:
        for image_id in gt.images:
            groups[image_id] = []
    for p in paired:
        groups.setdefault(p.image_id, []).append(p)
    for image_id, pairs in groups.items():
        gt_pairs = gt.pairs.get(image_id, []) if gt is not None else []
        w, h = _canvas(gt, image_id, pairs)
        _write_svg(spec.output_dir, image_id,
                   render.render_svg(image_id, w, h, gt_pairs, pairs, spec.style))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="instshadow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with predictions")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="JSON scene spec (overrides the other flags)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--min-pairs", type=int, default=1)
    p.add_argument("--max-pairs", type=int, default=9)
    p.add_argument("--light-angle", type=float, default=None, help="fixed light angle (radians)")
    p.add_argument("--shapes", default=",".join(synth.SHAPES))
    p.add_argument("--box-jitter", type=float, default=0.0)
    p.add_argument("--mask-radius", type=int, default=0)
    p.add_argument("--tp-score", type=_float_pair, default=(1.0, 1.0))
    p.add_argument("--fp-score", type=_float_pair, default=(0.05, 0.6))
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--fn-rate", type=float, default=0.0)
    p.add_argument("--angle-noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("match", help="pair and match raw predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics", help="diagnostics JSON (default: <out>.diagnostics.json)")
    _add_match_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="compute SOAP")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True, help="paired file or raw prediction file")
    p.add_argument("--variant", choices=("box", "mask", "both"), default="box")
    p.add_argument("--taus", default="0.5:0.05:0.95")
    p.add_argument("--method", default="ours", help="row label in the text table")
    p.add_argument("--out")
    _add_match_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("light", help="per-image light direction estimates")
    p.add_argument("--pred", required=True, help="paired file or raw prediction file")
    p.add_argument("--gt", help="ground truth; adds reference angles and smooth-L1 loss")
    p.add_argument("--wrap-angles", choices=("on", "off"), default="on")
    p.add_argument("--svg", help="directory for per-image SVG arrow overlays")
    p.add_argument("--out")
    p.set_defaults(func=cmd_light)

    p = sub.add_parser("render", help="SVG overlays of ground truth and/or predictions")
    p.add_argument("--gt")
    p.add_argument("--pred", help="paired file or raw prediction file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError, OSError, synth.PlacementError) as exc:
        error = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        filename = getattr(exc, "filename", None)
        if filename:
            error["path"] = str(filename)
        sys.stderr.write(json.dumps(error) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
