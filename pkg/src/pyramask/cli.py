"""Command line entry point: ``pyramask {generate,decode,synth,eval,bench}``.

Exit codes: 0 ok, 1 usage or parse error, 2 empty or degenerate input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import bench as bench_mod
from .baseline import DEFAULT_THRESHOLD
from .errors import DegenerateInput, DegenerateQuad, EmptyMask, PyramaskError
from .evaluation import DEFAULT_THRESHOLDS, iou_sweep
from .formats import FormatError, as_ground_truth, as_predictions, load_mask, quantized, read_regions, save_mask
from .geometry import Box, Quad
from .plane_clustering import ClusteringConfig
from .pyramid_label import rasterize_label
from .synth import NoiseSpec, QuadSampler, generate_corpus

log = logging.getLogger("pyramask")

EXIT_OK, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _dims(text: str) -> tuple[int, int]:
    try:
        w, h = (int(t) for t in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"dims must look like 28x28, got {text!r}") from exc
    if w < 2 or h < 2:
        raise argparse.ArgumentTypeError("mask dims must be >= 2")
    return w, h


def _truncation(text: str) -> dict:
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            side, frac = part.split("=")
            out[side.strip()] = float(frac)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected side=fraction, got {part!r}") from exc
    return out


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def clustering_config(cfg: dict, args) -> ClusteringConfig:
    values = dict(cfg.get("clustering", {}))
    for f in fields(ClusteringConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        return ClusteringConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad clustering config: {exc}") from exc


def noise_spec(cfg: dict, args) -> NoiseSpec:
    values = dict(cfg.get("noise", {}))
    for flag, name in (("noise_uniform", "additive_uniform_amplitude"),
                       ("noise_gaussian", "gaussian_sigma"),
                       ("salt", "salt_fraction"),
                       ("truncate", "truncation")):
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    try:
        return NoiseSpec.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad noise spec: {exc}") from exc


def _baseline_threshold(cfg: dict, args) -> float:
    if args.threshold is not None:
        return args.threshold
    return float(cfg.get("baseline", {}).get("threshold", DEFAULT_THRESHOLD))


def cmd_generate(args) -> int:
    try:
        quad = Quad.from_flat(args.quad)
    except PyramaskError:
        raise
    except ValueError as exc:
        raise UsageError(f"bad quad: {exc}") from exc
    box = Box.parse(args.box) if args.box else quad.bounds()
    w, h = args.dims
    mask = rasterize_label(quad, w, h, box)
    save_mask(mask, args.out)
    peak = quantized(mask).scores.max()
    print(json.dumps({"out": str(args.out), "width": w, "height": h, "box": list(box), "max_score": peak}))
    return EXIT_OK


def cmd_decode(args) -> int:
    cfg = load_config(args.config)
    ccfg = clustering_config(cfg, args)
    rid = args.id or Path(args.mask).stem
    try:
        mask = load_mask(args.mask)
    except (OSError, FormatError, ValueError) as exc:
        raise UsageError(f"cannot read mask: {exc}") from exc
    bbox = Box.parse(args.bbox) if args.bbox else mask.box
    d = bench_mod.decode_record(args.method, args.mask, bbox, ccfg, _baseline_threshold(cfg, args), rid)
    if d.error:
        print(json.dumps({"id": rid, "method": args.method, "error": d.error}))
        return EXIT_EMPTY
    out = {"id": rid, "method": args.method, "quad": d.quad.flat()}
    if args.method == "pyramid":
        out["iterations"] = d.iterations
        out["residual"] = d.residual
    print(json.dumps(out))
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = load_config(args.config)
    noise = noise_spec(cfg, args)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    sampler = QuadSampler(max_rotation_deg=args.max_rotation)
    manifest = generate_corpus(args.n, args.out, seed, args.dims, noise, args.margin, sampler, args.workers)
    print(json.dumps({"out": str(args.out), "count": manifest["count"], "seed": manifest["seed"]}))
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        gts = as_ground_truth(read_regions(args.gt, require_convex=True))
        preds = as_predictions(read_regions(args.pred))
    except (OSError, FormatError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        report = iou_sweep(preds, gts, args.iou_thresholds)
    except PyramaskError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}))
        return EXIT_EMPTY
    rows = bench_mod.report_rows({"predictions": report})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(bench_mod.render_csv(rows))
        (out / "report.md").write_text(bench_mod.render_markdown(rows))
    sys.stdout.write(bench_mod.render_markdown(rows))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    ccfg = clustering_config(cfg, args)
    try:
        result = bench_mod.run_bench(args.corpus, args.methods, args.iou_thresholds, ccfg,
                                     _baseline_threshold(cfg, args), args.baseline_input, args.workers)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot run bench on {args.corpus}: {exc}") from exc
    out = Path(args.out) if args.out else Path(args.corpus) / "bench"
    bench_mod.write_report(result, out)
    sys.stdout.write((out / "report.md").read_text())
    if result.fail_fraction > bench_mod.FAIL_LIMIT:
        log.error("%d of %d records failed", len(result.missing), result.total)
        return EXIT_USAGE
    return EXIT_OK


def _clustering_flags(p):
    g = p.add_argument_group("plane clustering")
    g.add_argument("--positive-threshold", dest="positive_threshold", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--residual-threshold", dest="residual_threshold", type=float)
    g.add_argument("--irls-iterations", dest="irls_iterations", type=int)
    g.add_argument("--irls-tuning-constant", dest="irls_tuning_constant", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pyramask", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="rasterize the soft pyramid label of a quad")
    p.add_argument("--quad", type=_floats, required=True, help="x1,y1,...,x4,y4")
    p.add_argument("--box", help="x0,y0,x1,y1 spanned by the mask (default: quad bounds)")
    p.add_argument("--dims", type=_dims, default=(28, 28), help="WxH, default 28x28")
    p.add_argument("--out", required=True, help="output .pgm path; sidecar .json written next to it")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decode", help="decode one mask file to a quad (JSON line)")
    p.add_argument("mask")
    p.add_argument("--bbox", help="x0,y0,x1,y1 detection box (default: mask box)")
    p.add_argument("--method", choices=bench_mod.METHODS, default="pyramid")
    p.add_argument("--threshold", type=float, help="baseline binarization threshold")
    p.add_argument("--id")
    p.add_argument("--config")
    _clustering_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dims", type=_dims, default=(56, 56))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--margin", type=float, default=0.15)
    p.add_argument("--max-rotation", type=float, default=30.0, help="degrees")
    p.add_argument("--noise-uniform", type=float)
    p.add_argument("--noise-gaussian", type=float)
    p.add_argument("--salt", type=float)
    p.add_argument("--truncate", type=_truncation, help="e.g. right=0.15,top=0.1")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="IoU sweep of predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--iou-thresholds", type=_floats, default=list(DEFAULT_THRESHOLDS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="decode a corpus with each method and tabulate")
    p.add_argument("corpus")
    p.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m], default=list(bench_mod.METHODS))
    p.add_argument("--iou-thresholds", type=_floats, default=list(DEFAULT_THRESHOLDS))
    p.add_argument("--threshold", type=float, help="baseline binarization threshold")
    p.add_argument("--baseline-input", choices=("hard", "soft"), default="hard")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--config")
    _clustering_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pyramask: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EmptyMask, DegenerateQuad, DegenerateInput) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}))
        return EXIT_EMPTY
    except (FormatError, ValueError) as exc:
        print(f"pyramask: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
