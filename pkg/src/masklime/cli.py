"""Command-line frontend: explain, evaluate, phantom.

Every flag can also come from a config file of ``key=value`` lines
(``#`` starts a comment); explicit flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import EmptyAnnotation, MasklimeError
from .explainer import ExplainerParams, explain, heatmap_to_dict
from .image import load_gray, resize_normalize
from .maskgen import EdgeDetector, brain_mask
from .metrics import (
    brain_mask_segment_coverage,
    load_via_annotations,
    tumor_mask_from_polygons,
    tumor_segment_coverage,
)
from .overlay import render_overlay, save_overlay_png
from .phantom import write_phantom_set
from .predictor import PredictorHandle
from .refine import RefineParams, explanation_pixels, refine_heatmap
from .segmentation import QuickShiftParams, quickshift_segment

_DEFAULTS = {
    "predictor": "builtin",
    "samples": 1000,
    "seed": 0,
    "top_n": "1,3,5",
    "detectors": "canny,laplace,otsu",
    "image_side": 224,
    "batch_limit": 64,
    "kernel_size": 4.0,
    "max_dist": 200.0,
    "ratio": 0.2,
    "kernel_width": 0.25,
    "ridge_lambda": 1.0,
    "fill_mode": "segment-mean",
    "fill_constant": 0.0,
    "gaussian_sigma": 1.4,
    "canny_low": 0.1,
    "canny_high": 0.2,
    "laplace_threshold": 0.04,
    "inside_fraction": 0.8,
    "count": 10,
    "size": 224,
}

_BOOL_TRUE = ("1", "true", "yes", "on")


class ConfigError(MasklimeError):
    """Bad config file or inconsistent option values."""


def read_config(path) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _make_getter(args: argparse.Namespace, config: dict[str, str]):
    def get(key: str, cast=str):
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        if key in config:
            raw = config[key]
            if cast is bool:
                return raw.lower() in _BOOL_TRUE
            return cast(raw)
        default = _DEFAULTS.get(key)
        if default is None or cast is str or isinstance(default, cast):
            return default
        return cast(default)

    return get


def _parse_top_n(raw) -> list[int]:
    if isinstance(raw, list):
        values = raw
    else:
        try:
            values = [int(part) for part in str(raw).split(",") if part.strip()]
        except ValueError as exc:
            raise ConfigError(f"top_n must be comma-separated integers, got {raw!r}") from exc
    if not values or any(v < 1 for v in values) or any(
        b <= a for a, b in zip(values, values[1:])
    ):
        raise ConfigError(f"top_n must be strictly increasing positive integers, got {raw!r}")
    return values


def _parse_detectors(raw) -> list[str]:
    kinds = [part.strip() for part in str(raw).split(",") if part.strip()]
    bad = [k for k in kinds if k not in ("canny", "laplace", "otsu")]
    if bad or not kinds:
        raise ConfigError(f"detectors must be among canny,laplace,otsu, got {raw!r}")
    return kinds


def _detector_from(get, kind: str) -> EdgeDetector:
    return EdgeDetector(
        kind=kind,
        gaussian_sigma=get("gaussian_sigma", float),
        canny_low=get("canny_low", float),
        canny_high=get("canny_high", float),
        laplace_threshold=get("laplace_threshold", float),
    )


def _pipeline_params(get, seed: int):
    qs = QuickShiftParams(
        kernel_size=get("kernel_size", float),
        max_dist=get("max_dist", float),
        ratio=get("ratio", float),
        seed=seed,
    )
    ep = ExplainerParams(
        num_samples=get("samples", int),
        kernel_width=get("kernel_width", float),
        ridge_lambda=get("ridge_lambda", float),
        fill_mode=get("fill_mode", str),
        fill_constant=get("fill_constant", float),
        seed=seed,
    )
    return qs, ep


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_explain(args: argparse.Namespace, config: dict[str, str]) -> int:
    get = _make_getter(args, config)
    images = args.image or [p for p in str(config.get("image", "")).split(",") if p]
    if not images:
        raise ConfigError("explain needs at least one --image (or image= in the config)")
    out = get("out")
    if not out:
        raise ConfigError("explain needs --out (or out= in the config)")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    seed = get("seed", int)
    top_n = _parse_top_n(get("top_n"))
    side = get("image_side", int)
    qs, ep = _pipeline_params(get, seed)
    handle = PredictorHandle.from_spec(get("predictor"), batch_limit=get("batch_limit", int))
    refine_kind = get("refine")
    detector = _detector_from(get, refine_kind) if refine_kind else None
    refine_params = RefineParams(inside_fraction=get("inside_fraction", float))

    succeeded = 0
    try:
        for path in images:
            try:
                img = resize_normalize(load_gray(path), side)
                seg = quickshift_segment(img, qs)
                hm = explain(img, seg, handle, ep)
                stem = Path(path).stem
                _write_json(heatmap_to_dict(hm), out_dir / f"{stem}_heatmap.json")
                save_overlay_png(
                    render_overlay(img, hm, seg, max(top_n)),
                    out_dir / f"{stem}_overlay.png",
                )
                if detector is not None:
                    bm = brain_mask(img, detector)
                    refined = refine_heatmap(hm, seg, bm, refine_params)
                    for note in refined.warnings:
                        print(f"warning: {path}: {note}", file=sys.stderr)
                    _write_json(
                        heatmap_to_dict(refined), out_dir / f"{stem}_heatmap_refined.json"
                    )
                    save_overlay_png(
                        render_overlay(img, refined, seg, max(top_n), bm=bm),
                        out_dir / f"{stem}_overlay_refined.png",
                    )
                succeeded += 1
            except MasklimeError as exc:
                print(f"error: {path}: {exc}", file=sys.stderr)
    finally:
        handle.close()
    return 0 if succeeded > 0 else 1


def cmd_evaluate(args: argparse.Namespace, config: dict[str, str]) -> int:
    get = _make_getter(args, config)
    manifest = get("manifest")
    out = get("out")
    if not manifest or not out:
        raise ConfigError("evaluate needs --manifest and --out")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = Path(manifest)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        entries = [line.strip() for line in fh if line.strip()]
    # Relative manifest entries resolve against the manifest's directory;
    # absolute entries pass through (pathlib's join semantics).
    image_paths = [manifest_path.parent / e for e in entries]

    annotations_file = get("annotations")
    annotations = load_via_annotations(annotations_file) if annotations_file else {}

    seed = get("seed", int)
    top_n = _parse_top_n(get("top_n"))
    detectors = _parse_detectors(get("detectors"))
    side = get("image_side", int)
    qs, ep = _pipeline_params(get, seed)
    handle = PredictorHandle.from_spec(get("predictor"), batch_limit=get("batch_limit", int))
    refine_params = RefineParams(inside_fraction=get("inside_fraction", float))

    rows: list[list] = []
    try:
        for path in image_paths:
            raw = load_gray(path)
            orig_h, orig_w = raw.shape
            img = resize_normalize(raw, side)
            seg = quickshift_segment(img, qs)
            hm = explain(img, seg, handle, ep)

            tumor = None
            polys = annotations.get(path.name)
            if polys:
                scaled = [
                    [(x * side / orig_w, y * side / orig_h) for x, y in poly]
                    for poly in polys
                ]
                tumor = tumor_mask_from_polygons(scaled, side, side)

            for kind in detectors:
                bm = brain_mask(img, _detector_from(get, kind))
                refined_hm = refine_heatmap(hm, seg, bm, refine_params)
                for note in refined_hm.warnings:
                    print(f"warning: {path}: {note}", file=sys.stderr)
                for refined_flag, hmx in ((False, hm), (True, refined_hm)):
                    for n in top_n:
                        expl = explanation_pixels(hmx, seg, n)
                        tumor_field = ""
                        if tumor is not None:
                            try:
                                tumor_field = f"{tumor_segment_coverage(expl, tumor):.6f}"
                            except EmptyAnnotation:
                                print(
                                    f"warning: {path}: empty tumor annotation, row skipped",
                                    file=sys.stderr,
                                )
                                continue
                        brain_field = ""
                        if bm.mask.any():
                            brain_field = f"{brain_mask_segment_coverage(expl, bm.mask):.6f}"
                        else:
                            print(
                                f"warning: {path}: empty brain mask from {kind}",
                                file=sys.stderr,
                            )
                        rows.append(
                            [
                                path.name,
                                kind,
                                "true" if refined_flag else "false",
                                n,
                                tumor_field,
                                brain_field,
                            ]
                        )
    finally:
        handle.close()

    def _mean_field(values: list[str]) -> str:
        numbers = [float(v) for v in values if v != ""]
        return f"{sum(numbers) / len(numbers):.6f}" if numbers else ""

    summary: list[list] = []
    for kind in detectors:
        for refined_flag in ("false", "true"):
            for n in top_n:
                group = [
                    r for r in rows if r[1] == kind and r[2] == refined_flag and r[3] == n
                ]
                tumor_mean = _mean_field([r[4] for r in group])
                brain_mean = _mean_field([r[5] for r in group])
                summary.append(["mean", kind, refined_flag, n, tumor_mean, brain_mean])
    rows.extend(summary)

    report = out_dir / "coverage.csv"
    with open(report, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["image", "detector", "refined", "n", "tumor_coverage", "brain_coverage"]
        )
        writer.writerows(rows)
    print(f"wrote {report}")
    return 0


def cmd_phantom(args: argparse.Namespace, config: dict[str, str]) -> int:
    get = _make_getter(args, config)
    out = get("out")
    if not out:
        raise ConfigError("phantom needs --out")
    names = write_phantom_set(out, get("count", int), get("size", int), get("seed", int))
    print(f"wrote {len(names)} phantoms to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="masklime",
        description="Perturbation-based image explanations with brain-mask refinement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="explain images and render overlays")
    p_explain.add_argument("--image", nargs="+", help="input image path(s)")
    p_explain.add_argument("--predictor", help="builtin, exec:CMD, or an http(s) URL")
    p_explain.add_argument("--samples", type=int, help="number of perturbation samples")
    p_explain.add_argument("--seed", type=int)
    p_explain.add_argument("--refine", choices=["canny", "laplace", "otsu"])
    p_explain.add_argument("--top-n", dest="top_n", help="comma list, e.g. 1,3,5")
    p_explain.add_argument("--out", help="output directory")
    p_explain.add_argument("--config", help="key=value config file")
    p_explain.set_defaults(func=cmd_explain)

    p_eval = sub.add_parser("evaluate", help="coverage sweep over a manifest")
    p_eval.add_argument("--manifest", help="file listing image paths, one per line")
    p_eval.add_argument("--annotations", help="VGG Image Annotator JSON")
    p_eval.add_argument("--detectors", help="comma list among canny,laplace,otsu")
    p_eval.add_argument("--top-n", dest="top_n", help="comma list, e.g. 1,3,5")
    p_eval.add_argument("--predictor", help="builtin, exec:CMD, or an http(s) URL")
    p_eval.add_argument("--samples", type=int)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--out", help="output directory")
    p_eval.add_argument("--config", help="key=value config file")
    p_eval.set_defaults(func=cmd_evaluate)

    p_phantom = sub.add_parser("phantom", help="generate synthetic phantoms")
    p_phantom.add_argument("--count", type=int)
    p_phantom.add_argument("--size", type=int)
    p_phantom.add_argument("--seed", type=int)
    p_phantom.add_argument("--out", help="output directory")
    p_phantom.add_argument("--config", help="key=value config file")
    p_phantom.set_defaults(func=cmd_phantom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = read_config(args.config) if args.config else {}
        return args.func(args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MasklimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
