"""Batch drivers: per-sample preparation, rho sweeps, scoring, reporting.

Each driver is deterministic for a fixed (inputs, config, seed) triple:
per-sample work may run on a thread pool, but results are folded in
sample_id order and all serialization is canonical, so parallelism never
changes output bytes. One bad sample never aborts a batch; it becomes a
skip record instead.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import assembly, dataset, heatmap, judging, roi
from .assembly import InputMode, TwoScaleInput
from .cost import CostReport, ModelProfile, count_total_tokens, count_visual_tokens, estimate_flops, format_reduction, load_profile
from .errors import (
    GazeFoveaError,
    MissingImageError,
    SampleNotFoundError,
    ValidationError,
)
from .judging import DeterministicMockJudge, JudgeAuditLog, JudgeClient, Verdict

DEFAULT_RHO = 0.3
DEFAULT_PROFILE = "qwen25vl-3b-paper"
BASELINE_LABEL = "baseline"


@dataclass(frozen=True)
class RunConfig:
    """Effective settings for one pipeline run.

    ``sigma_px=None`` means the per-image default (2% of the diagonal).
    ``jobs`` and the output directory are execution details, not part of
    the run identity, so they are left out of the config echo.
    """

    manifest_path: str
    rhos: tuple[float, ...] = (DEFAULT_RHO,)
    mode: InputMode = InputMode.TWO_SCALE
    sigma_px: float | None = None
    min_crop: tuple[int, int] = (56, 56)
    profile_name: str = DEFAULT_PROFILE
    seed: int = 0
    jobs: int = 1

    def echo_dict(self) -> dict:
        return {
            "manifest_path": self.manifest_path,
            "rhos": list(self.rhos),
            "mode": self.mode.value,
            "sigma_px": self.sigma_px,
            "min_crop": list(self.min_crop),
            "profile_name": self.profile_name,
            "seed": self.seed,
            "template_version": assembly.TEMPLATE_VERSION,
        }


def write_config_echo(config: RunConfig, out_dir: Path) -> None:
    (out_dir / "effective_config.json").write_text(
        dataset.canonical_json(config.echo_dict()) + "\n", encoding="utf-8"
    )


# --- single-sample preparation ------------------------------------------------

def prepare_sample(
    sample: dataset.Sample,
    config: RunConfig,
    profile: ModelProfile,
    rho: float | None,
    manifest_root: Path,
    out_dir: Path,
) -> dict:
    """Run heatmap -> ROI -> views -> cost for one sample and write its bundle.

    ``rho=None`` selects baseline mode regardless of config.mode. Returns
    the per-sample results row.
    """
    image_path = sample.resolve_image(manifest_root)
    try:
        image = dataset.load_image(image_path)
    except OSError as exc:  # manifest load only checks the header; decode can still fail
        raise MissingImageError(sample.sample_id, str(image_path)) from exc
    img_h, img_w = image.shape[:2]
    geometry = profile.geometry
    mode = config.mode if rho is not None else InputMode.BASELINE

    box = None
    if mode is InputMode.BASELINE:
        view = assembly.make_baseline_view(image, geometry)
        bundle = assembly.assemble(None, view, sample.question, InputMode.BASELINE)
        roi_pixels = view.width * view.height
    else:
        trace = sample.trace(img_w, img_h)
        sigma = config.sigma_px or heatmap.default_sigma_px(img_w, img_h)
        gaze_map = heatmap.build_heatmap(trace, sigma)
        raw_box = roi.support_mass_box(gaze_map, rho)
        policy = roi.MinSizePolicy(*config.min_crop).clamped(img_w, img_h)
        box = roi.enforce_min_size(raw_box, policy, img_w, img_h)
        if box is not raw_box:  # expansion happened; refresh the box mass
            box = roi.RoiBox(
                box.x0, box.y0, box.x1, box.y1,
                covered_mass=roi.box_mass(gaze_map, box), rho=box.rho,
            )
        crop = roi.extract_roi(image, box)
        roi_pixels = box.pixels
        roi_view = assembly.make_roi_view(crop, geometry)
        if mode is InputMode.TWO_SCALE:
            global_view = assembly.make_global_view(image, geometry=geometry)
            bundle = assembly.assemble(global_view, roi_view, sample.question, mode)
        else:
            bundle = assembly.assemble(None, roi_view, sample.question, mode)

    visual = count_visual_tokens(bundle.views(), geometry)
    text = sample.text_token_count if sample.text_token_count is not None else profile.default_text_tokens
    total = count_total_tokens(visual, text)
    report = CostReport(
        visual_tokens=visual,
        text_tokens=text,
        total_tokens=total,
        flops_g=estimate_flops(total, profile),
    )
    dataset.export_bundle(sample, bundle, report, out_dir, roi_box=box)
    return {
        "sample_id": sample.sample_id,
        "rho": rho,
        "mode": mode.value,
        "roi_pixels": roi_pixels,
        "visual_tokens": visual,
        "total_tokens": total,
        "flops_g": report.flops_g,
        "verdict": None,
        "total_score": None,
    }


def _prepare_one(args) -> tuple[str, dict | None, dict | None]:
    sample, config, profile, rho, manifest_root, out_dir = args
    try:
        return sample.sample_id, prepare_sample(sample, config, profile, rho, manifest_root, out_dir), None
    except GazeFoveaError as exc:
        skip = {"sample_id": sample.sample_id, "stage": "prepare", "reason": str(exc)}
        return sample.sample_id, None, skip


def run_prepare(
    manifest: dataset.Manifest,
    config: RunConfig,
    out_dir: str | Path,
    *,
    rho: float | None,
    profile: ModelProfile | None = None,
) -> tuple[list[dict], list[dict]]:
    """Prepare every manifest sample; returns (result rows, skip records).

    Writes bundles, results.jsonl, skips.jsonl, and the config echo under
    out_dir. Work is distributed over config.jobs threads and folded back
    in sample_id order, so the outputs do not depend on scheduling.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    profile = profile or load_profile(config.profile_name)

    tasks = [
        (sample, config, profile, rho, manifest.root, out_dir)
        for sample in manifest.samples
    ]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_prepare_one, tasks))
    else:
        outcomes = [_prepare_one(t) for t in tasks]

    outcomes.sort(key=lambda o: o[0])
    rows = [row for _, row, _ in outcomes if row is not None]
    skips = [skip for _, _, skip in outcomes if skip is not None]

    dataset.write_jsonl(rows, out_dir / "results.jsonl")
    dataset.write_jsonl(skips, out_dir / "skips.jsonl")
    write_config_echo(config, out_dir)
    return rows, skips


# --- rho sweep ------------------------------------------------------------------

def _mean(rows: list[dict], key: str) -> float:
    return sum(r[key] for r in rows) / len(rows)

SWEEP_COLUMNS = (
    "label", "rho", "mode", "n_samples", "roi_pixels_mean",
    "visual_tokens_mean", "visual_reduction",
    "total_tokens_mean", "total_reduction",
    "flops_g_mean", "flops_reduction",
)


def _sweep_row(label: str, rho: float | None, mode: str, rows: list[dict], base: dict | None) -> dict:
    entry = {
        "label": label,
        "rho": "" if rho is None else f"{rho:g}",
        "mode": mode,
        "n_samples": len(rows),
        "roi_pixels_mean": _mean(rows, "roi_pixels"),
        "visual_tokens_mean": _mean(rows, "visual_tokens"),
        "total_tokens_mean": _mean(rows, "total_tokens"),
        "flops_g_mean": _mean(rows, "flops_g"),
        "visual_reduction": "",
        "total_reduction": "",
        "flops_reduction": "",
    }
    if base is not None:
        for field in ("visual_tokens_mean", "total_tokens_mean", "flops_g_mean"):
            pct = 100.0 * (1.0 - entry[field] / base[field])
            key = field.split("_")[0] + "_reduction"
            entry[key] = format_reduction(pct)
    return entry


def _write_sweep_csv(rows: list[dict], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        for key in ("roi_pixels_mean", "visual_tokens_mean", "total_tokens_mean", "flops_g_mean"):
            out[key] = f"{row[key]:.1f}"
        writer.writerow(out)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _sweep_markdown(rows: list[dict], config: RunConfig) -> str:
    def cell(row, mean_key, red_key):
        text = f"{row[mean_key]:.1f}"
        if row[red_key]:
            text += f" ({row[red_key]})"
        return text

    lines = [
        "# Cost sweep",
        "",
        f"mode: {config.mode.value}; profile: {config.profile_name}; seed: {config.seed}",
        "",
        "| input | rho | ROI px (mean) | visual tokens | total tokens | FLOPs (G) |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    for row in rows:
        lines.append(
            "| {label} | {rho} | {px} | {vis} | {tot} | {flops} |".format(
                label=row["label"],
                rho=row["rho"] or "-",
                px=f"{row['roi_pixels_mean']:.1f}",
                vis=cell(row, "visual_tokens_mean", "visual_reduction"),
                tot=cell(row, "total_tokens_mean", "total_reduction"),
                flops=cell(row, "flops_g_mean", "flops_reduction"),
            )
        )
    lines.append("")
    return "\n".join(lines)


def run_sweep(
    manifest: dataset.Manifest,
    config: RunConfig,
    out_dir: str | Path,
) -> tuple[list[dict], list[dict]]:
    """Prepare the manifest at every rho plus the full-image baseline.

    Each run lands in its own subdirectory (baseline/, rho-0.05/, ...);
    aggregate means with reduction percentages versus the baseline go to
    sweep.csv and sweep.md. Returns (sweep rows, all skip records).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    profile = load_profile(config.profile_name)

    all_skips: list[dict] = []
    base_rows, skips = run_prepare(
        manifest, config, out_dir / BASELINE_LABEL, rho=None, profile=profile
    )
    all_skips.extend(skips)
    if not base_rows:
        raise GazeFoveaError("baseline run produced no rows; cannot compute reductions")
    base = _sweep_row(BASELINE_LABEL, None, InputMode.BASELINE.value, base_rows, None)

    sweep_rows = [base]
    for rho in config.rhos:
        run_rows, skips = run_prepare(
            manifest, config, out_dir / f"rho-{rho:g}", rho=rho, profile=profile
        )
        all_skips.extend(skips)
        if run_rows:
            sweep_rows.append(_sweep_row(f"rho-{rho:g}", rho, config.mode.value, run_rows, base))

    _write_sweep_csv(sweep_rows, out_dir / "sweep.csv")
    (out_dir / "sweep.md").write_text(_sweep_markdown(sweep_rows, config), encoding="utf-8")
    write_config_echo(config, out_dir)
    return sweep_rows, all_skips


# --- scoring ---------------------------------------------------------------------

def load_answers(path: str | Path) -> dict[str, str]:
    """Read an answers JSONL file into {sample_id: answer_text}."""
    answers: dict[str, str] = {}
    for row in dataset.read_jsonl(path):
        sid = row.get("sample_id")
        text = row.get("answer_text", row.get("answer"))
        if not isinstance(sid, str) or not isinstance(text, str):
            raise ValidationError(str(sid), "answer rows need sample_id and answer_text")
        if sid in answers:
            raise ValidationError(sid, "duplicate sample_id in answers file")
        answers[sid] = text
    return answers


def run_score(
    manifest: dataset.Manifest,
    answers_a: dict[str, str],
    answers_b: dict[str, str],
    out_dir: str | Path,
    *,
    judge: JudgeClient | None = None,
    seed: int = 0,
    score_mode: str = "ab",
) -> tuple[judging.EvalSummary, list[str]]:
    """Judge answer set A against answer set B, paired by sample_id.

    Writes verdicts.jsonl, breakdown.csv, summary.json, and the raw judge
    audit log. Unpaired sample_ids are warnings, not failures; they are
    returned and recorded in the summary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    judge = judge or DeterministicMockJudge(seed=seed)

    by_id = manifest.by_id()
    paired = sorted(set(answers_a) & set(answers_b) & set(by_id))
    unpaired = sorted(
        (set(answers_a) ^ set(answers_b)) | ((set(answers_a) | set(answers_b)) - set(by_id))
    )

    audit_path = out_dir / "judge_audit.jsonl"
    audit_path.unlink(missing_ok=True)
    audit = JudgeAuditLog(audit_path)

    verdict_rows: list[dict] = []
    skip_rows: list[dict] = []
    verdicts: list[Verdict] = []
    totals: list[float] = []
    for sid in paired:
        sample = by_id[sid]
        try:
            verdict, scores_a, scores_b = judging.judge_pair(
                sample.question,
                sample.caption,
                sample.reference_answer,
                answers_a[sid],
                answers_b[sid],
                judge,
                audit_log=audit,
                audit_context={"sample_id": sid},
                score_mode=score_mode,
            )
        except GazeFoveaError as exc:
            skip_rows.append({"sample_id": sid, "stage": "score", "reason": str(exc)})
            continue
        total_a = judging.weighted_total(scores_a)
        total_b = judging.weighted_total(scores_b)
        verdicts.append(verdict.aggregate)
        totals.append(total_a)
        verdict_rows.append({
            "sample_id": sid,
            "verdict": verdict.aggregate.value,
            "order_ab": verdict.order_ab.value,
            "order_ba": verdict.order_ba.value,
            "scores_a": scores_a.as_dict(),
            "scores_b": scores_b.as_dict(),
            "total_score_a": total_a,
            "total_score_b": total_b,
        })

    summary = judging.summarize(verdicts, totals)
    dataset.write_jsonl(verdict_rows, out_dir / "verdicts.jsonl")
    dataset.write_jsonl(skip_rows, out_dir / "skips.jsonl")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "verdict", "total_score_a", "total_score_b"])
    for row in verdict_rows:
        writer.writerow([
            row["sample_id"], row["verdict"],
            f"{row['total_score_a']:.2f}", f"{row['total_score_b']:.2f}",
        ])
    (out_dir / "breakdown.csv").write_text(buf.getvalue(), encoding="utf-8")

    summary_obj = {
        "wins": summary.wins,
        "ties": summary.ties,
        "losses": summary.losses,
        "win_rate_pct": summary.win_rate_pct,
        "mean_total_score": summary.mean_total_score,
        "n_paired": len(paired),
        "n_scored": len(verdict_rows),
        "unpaired_sample_ids": unpaired,
        "seed": seed,
        "score_mode": score_mode,
    }
    (out_dir / "summary.json").write_text(
        dataset.canonical_json(summary_obj) + "\n", encoding="utf-8"
    )
    return summary, unpaired


# --- report ----------------------------------------------------------------------

def _read_sweep_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def run_report(
    sweep_dir: str | Path,
    score_dirs: list[str | Path],
    out_path: str | Path,
) -> str:
    """Render a markdown report from sweep and (optional) score outputs.

    When no score directories are given, the report carries the cost table
    only and says so explicitly. Reruns over the same inputs are
    byte-identical.
    """
    sweep_dir = Path(sweep_dir)
    lines = ["# Foveated-input run report", ""]

    sweep_csv = sweep_dir / "sweep.csv"
    if sweep_csv.exists():
        md = sweep_dir / "sweep.md"
        if md.exists():
            body = md.read_text(encoding="utf-8").splitlines()
            lines.extend(body[1:] if body and body[0].startswith("#") else body)
            lines.append("")
        else:
            for row in _read_sweep_csv(sweep_csv):
                lines.append(dataset.canonical_json(row))
            lines.append("")
    else:
        lines.extend([f"No sweep outputs found under {sweep_dir.name}/.", ""])

    if not score_dirs:
        lines.extend([
            "## Answer quality", "",
            "No answer-quality scores available: no score outputs were "
            "supplied, so this report carries cost columns only.", "",
        ])
    for score_dir in score_dirs:
        score_dir = Path(score_dir)
        summary_path = score_dir / "summary.json"
        lines.extend([f"## Answer quality: {score_dir.name}", ""])
        if not summary_path.exists():
            lines.extend(["Score files missing; cost columns only for this run.", ""])
            continue
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        rate = summary.get("win_rate_pct")
        mean = summary.get("mean_total_score")
        lines.extend([
            "| wins | ties | losses | win rate (ties excluded) | mean total score |",
            "| --- | --- | --- | --- | --- |",
            "| {w} | {t} | {l} | {r} | {m} |".format(
                w=summary["wins"], t=summary["ties"], l=summary["losses"],
                r="undefined (all ties)" if rate is None else f"{rate:.1f}%",
                m="n/a" if mean is None else f"{mean:.2f}",
            ),
            "",
        ])
        if summary.get("unpaired_sample_ids"):
            ids = ", ".join(summary["unpaired_sample_ids"])
            lines.extend([f"Unpaired sample_ids (not judged): {ids}", ""])

    text = "\n".join(lines)
    Path(out_path).write_text(text, encoding="utf-8")
    return text


# --- single-sample heatmap export ---------------------------------------------

def export_heatmap(
    manifest: dataset.Manifest,
    sample_id: str,
    out_dir: str | Path,
    sigma_px: float | None = None,
) -> tuple[Path, Path]:
    """Write one sample's heatmap as a float grid plus a grayscale PNG."""
    sample = manifest.by_id().get(sample_id)
    if sample is None:
        raise SampleNotFoundError(sample_id)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image_path = sample.resolve_image(manifest.root)
    w, h = dataset.image_size(image_path)
    gaze_map = heatmap.build_heatmap(sample.trace(w, h), sigma_px)
    grid_path = out_dir / f"{sample_id}.gzhm"
    png_path = out_dir / f"{sample_id}.png"
    heatmap.write_float_grid(gaze_map.values, grid_path)
    heatmap.write_grayscale_png(gaze_map.values, png_path)
    return grid_path, png_path
