"""
Decode a synthetic corpus with several methods and tabulate an IoU sweep.

The report mirrors a matched-count / F-measure table with relative
improvements against a reference method (``baseline`` when present).
CSV and Markdown are rendered from the same list of formatted rows.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .baseline import DEFAULT_THRESHOLD, decode_baseline
from .errors import PyramaskError
from .evaluation import DEFAULT_THRESHOLDS, HIST_EDGES, GroundTruth, Prediction, iou_sweep
from .formats import FormatError, load_mask
from .geometry import Box, Quad
from .plane_clustering import ClusteringConfig, decode_pyramid
from .synth import load_manifest

log = logging.getLogger(__name__)

METHODS = ("pyramid", "baseline")
FAIL_LIMIT = 0.10


@dataclass
class Decoded:
    record_id: str
    method: str
    quad: Quad | None = None
    iterations: int | None = None
    residual: float | None = None
    error: str | None = None


@dataclass
class BenchResult:
    reports: dict = field(default_factory=dict)  # method -> EvalReport
    decoded: dict = field(default_factory=dict)  # method -> list[Decoded]
    missing: list = field(default_factory=list)  # (record id, message)
    total: int = 0

    @property
    def fail_fraction(self) -> float:
        return len(self.missing) / self.total if self.total else 0.0


def decode_record(method: str, mask_path, bbox=None, cfg: ClusteringConfig = ClusteringConfig(),
                  threshold: float = DEFAULT_THRESHOLD, record_id: str = "") -> Decoded:
    """Decode one mask file; decoder failures come back in ``error``."""
    mask = load_mask(mask_path)
    try:
        if method == "pyramid":
            res = decode_pyramid(mask, bbox, cfg)
            return Decoded(record_id, method, res.quad, res.fit.iterations_run, res.fit.final_residual)
        if method == "baseline":
            return Decoded(record_id, method, decode_baseline(mask, bbox, threshold))
    except PyramaskError as exc:
        return Decoded(record_id, method, error=type(exc).__name__)
    raise ValueError(f"unknown method {method!r}")


def _mask_for(method: str, record: dict, baseline_input: str) -> str:
    if method == "baseline" and baseline_input == "hard":
        return record["hard_mask"]
    return record["mask"]


def _decode_job(args) -> list[Decoded]:
    record, root, methods, cfg, threshold, baseline_input = args
    out = []
    for m in methods:
        path = Path(root) / _mask_for(m, record, baseline_input)
        out.append(decode_record(m, path, Box(*record["box"]), cfg, threshold, record["id"]))
    return out


def run_bench(corpus_dir, methods=METHODS, thresholds=DEFAULT_THRESHOLDS,
              cfg: ClusteringConfig = ClusteringConfig(), threshold: float = DEFAULT_THRESHOLD,
              baseline_input: str = "hard", workers: int = 1) -> BenchResult:
    """Decode every record with every method and run one IoU sweep per method.

    Records whose mask files are missing or unreadable are reported in
    ``missing`` and skipped; their ground truth still counts toward recall.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    if baseline_input not in ("hard", "soft"):
        raise ValueError("baseline_input must be 'hard' or 'soft'")
    root = Path(corpus_dir)
    manifest = load_manifest(root)
    records = sorted(manifest.get("records", []), key=lambda r: r["id"])
    result = BenchResult(total=len(records))

    # referential integrity before any decoding
    usable = []
    for r in records:
        paths = {root / _mask_for(m, r, baseline_input) for m in methods}
        bad = [p for p in sorted(paths) if not p.exists() or not p.with_suffix(".json").exists()]
        if bad:
            result.missing.append((r["id"], f"missing {', '.join(str(p) for p in bad)}"))
        else:
            usable.append(r)

    jobs = [(r, str(root), tuple(methods), cfg, threshold, baseline_input) for r in usable]
    outputs = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_decode_job, j) for j in jobs]
            for r, f in zip(usable, futures):
                try:
                    outputs.append((r, f.result()))
                except (OSError, FormatError, ValueError) as exc:
                    result.missing.append((r["id"], str(exc)))
    else:
        for r, j in zip(usable, jobs):
            try:
                outputs.append((r, _decode_job(j)))
            except (OSError, FormatError, ValueError) as exc:
                result.missing.append((r["id"], str(exc)))
    result.missing.sort()

    gts = {r["id"]: [GroundTruth(Quad.from_flat(r["quad"]))] for r in records}
    for k, m in enumerate(methods):
        decoded = [out[k] for _, out in outputs]
        result.decoded[m] = decoded
        preds = {d.record_id: [Prediction(d.quad, 1.0)] for d in decoded if d.quad is not None}
        result.reports[m] = iou_sweep(preds, gts, thresholds)
    return result


def _rel(new: float, ref: float) -> float | None:
    return None if ref == 0 else (new - ref) / ref


def _fmt(v, pct=False) -> str:
    if v is None:
        return "n/a"
    if pct:
        return f"{100.0 * v:.2f}%"
    if isinstance(v, int):
        return str(v)
    return f"{v:.4f}"


def report_rows(reports: dict) -> list[dict]:
    """One formatted row per (IoU threshold, method), with improvement over the reference."""
    methods = list(reports)
    if not methods:
        return []
    ref = "baseline" if "baseline" in reports else methods[0]
    rows = []
    for k, ref_row in enumerate(reports[ref].rows):
        for m in methods:
            row = reports[m].rows[k]
            rel_m = None if m == ref else _rel(row.matched, ref_row.matched)
            rel_f = None if m == ref else _rel(row.f_measure, ref_row.f_measure)
            rows.append({
                "iou": f"{row.iou_threshold:.2f}",
                "method": m,
                "matched": _fmt(row.matched),
                "num_pred": _fmt(row.num_pred),
                "num_gt": _fmt(row.num_gt),
                "precision": _fmt(row.precision),
                "recall": _fmt(row.recall),
                "f_measure": _fmt(row.f_measure),
                "rel_matched": "" if m == ref else _fmt(rel_m, pct=True),
                "rel_f_measure": "" if m == ref else _fmt(rel_f, pct=True),
            })
    return rows


COLUMNS = ["iou", "method", "matched", "num_pred", "num_gt", "precision", "recall",
           "f_measure", "rel_matched", "rel_f_measure"]


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def render_markdown(rows: list[dict]) -> str:
    lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
    for r in rows:
        lines.append("| " + " | ".join(r[c] for c in COLUMNS) + " |")
    return "\n".join(lines) + "\n"


def histogram_rows(reports: dict) -> list[dict]:
    rows = []
    for m, rep in reports.items():
        for lo, hi, c in zip(HIST_EDGES[:-1], HIST_EDGES[1:], rep.histogram):
            rows.append({"method": m, "iou_low": f"{lo:.2f}", "iou_high": f"{hi:.2f}", "count": str(c)})
    return rows


def write_report(result: BenchResult, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = report_rows(result.reports)
    (out / "report.csv").write_text(render_csv(rows))
    (out / "report.md").write_text(render_markdown(rows))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["method", "iou_low", "iou_high", "count"], lineterminator="\n")
    w.writeheader()
    w.writerows(histogram_rows(result.reports))
    (out / "histogram.csv").write_text(buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "method", "error"])
    for rid, msg in result.missing:
        w.writerow([rid, "*", msg])
    for m, decoded in result.decoded.items():
        for d in decoded:
            if d.error:
                w.writerow([d.record_id, m, d.error])
    (out / "errors.csv").write_text(buf.getvalue())
    for m, decoded in result.decoded.items():
        with open(out / f"predictions_{m}.jsonl", "w") as fh:
            for d in decoded:
                if d.quad is None:
                    continue
                obj = {"id": d.record_id, "method": m, "quad": d.quad.flat(), "confidence": 1.0}
                if d.iterations is not None:
                    obj["iterations"] = d.iterations
                    obj["residual"] = d.residual
                fh.write(json.dumps(obj) + "\n")
    return {"rows": rows}
