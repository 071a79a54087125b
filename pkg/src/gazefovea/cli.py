"""Command-line surface for the foveated-input pipeline.

Subcommands: heatmap (single-sample debug export), prepare (batch bundle
building), sweep (prepare across a rho list plus baseline), score
(pairwise judging of two answer files), report (markdown rollup).

Settings resolve as CLI flag > config file (--config, JSON) > built-in
default. Exit codes: 0 clean, 1 usage error, 2 completed with skips,
3 fatal error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import judging, pipeline
from .assembly import InputMode
from .dataset import load_manifest
from .errors import GazeFoveaError
from .pipeline import RunConfig

EXIT_CLEAN = 0
EXIT_USAGE = 1
EXIT_SKIPS = 2
EXIT_FATAL = 3


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}")
    if not isinstance(obj, dict):
        raise click.UsageError(f"config file {path} must hold a JSON object")
    return obj


def _resolve(cli_value, file_value, default):
    if cli_value is not None:
        return cli_value
    if file_value is not None:
        return file_value
    return default


def _parse_min_crop(value) -> tuple[int, int]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return int(value[0]), int(value[1])
    try:
        w, _, h = str(value).lower().partition("x")
        crop = (int(w), int(h))
    except ValueError:
        crop = (0, 0)
    if crop[0] < 1 or crop[1] < 1:
        raise click.UsageError(f"--min-crop must look like 56x56, got {value!r}")
    return crop


def _parse_mode(value: str) -> InputMode:
    try:
        return InputMode(value)
    except ValueError:
        choices = ", ".join(m.value for m in InputMode)
        raise click.UsageError(f"--mode must be one of {choices}, got {value!r}")


def _build_run_config(cfg: dict, *, manifest, rho, mode, sigma_px, min_crop,
                      profile, jobs, seed) -> RunConfig:
    manifest = _resolve(manifest, cfg.get("manifest"), None)
    if not manifest:
        raise click.UsageError("--manifest is required (flag or config file)")
    rhos = rho or cfg.get("rho") or ()
    if isinstance(rhos, (int, float)):
        rhos = (rhos,)
    rhos = tuple(float(r) for r in rhos)
    for r in rhos:
        if not 0.0 < r < 1.0:
            raise click.UsageError(f"--rho must be in (0, 1), got {r}")
    return RunConfig(
        manifest_path=str(manifest),
        rhos=rhos or (pipeline.DEFAULT_RHO,),
        mode=_parse_mode(_resolve(mode, cfg.get("mode"), InputMode.TWO_SCALE.value)),
        sigma_px=_resolve(sigma_px, cfg.get("sigma_px"), None),
        min_crop=_parse_min_crop(_resolve(min_crop, cfg.get("min_crop"), "56x56")),
        profile_name=_resolve(profile, cfg.get("profile"), pipeline.DEFAULT_PROFILE),
        seed=int(_resolve(seed, cfg.get("seed"), 0)),
        jobs=max(1, int(_resolve(jobs, cfg.get("jobs"), 1))),
    )


def _out_dir(out, cfg: dict) -> Path:
    out = _resolve(out, cfg.get("out"), None)
    if not out:
        raise click.UsageError("--out is required (flag or config file)")
    return Path(out)


config_option = click.option("--config", "config_path", default=None,
                             help="JSON config file; flags override its keys.")
manifest_option = click.option("--manifest", default=None, help="Sample manifest (JSONL).")
out_option = click.option("--out", default=None, help="Output directory.")
common_prepare_options = [
    click.option("--mode", default=None, help="Input mode: roi_only, two_scale, baseline."),
    click.option("--sigma-px", type=float, default=None,
                 help="Gaussian sigma in px (default: 2% of the image diagonal)."),
    click.option("--min-crop", default=None, help="Minimum ROI crop, WxH (default 56x56)."),
    click.option("--profile", default=None, help="Model profile name or config path."),
    click.option("--jobs", type=int, default=None, help="Worker threads (default 1)."),
    click.option("--seed", type=int, default=None, help="Run seed, recorded in outputs."),
]


def _apply(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
def cli() -> None:
    """Gaze-driven foveated inputs: build, sweep, score, report."""


@cli.command("heatmap")
@manifest_option
@out_option
@click.option("--sample-id", required=True, help="Sample to export.")
@click.option("--sigma-px", type=float, default=None)
@config_option
def cmd_heatmap(manifest, out, sample_id, sigma_px, config_path) -> int:
    """Export one sample's gaze heatmap (float grid + grayscale PNG)."""
    cfg = _load_config_file(config_path)
    manifest = _resolve(manifest, cfg.get("manifest"), None)
    if not manifest:
        raise click.UsageError("--manifest is required (flag or config file)")
    loaded = load_manifest(manifest)
    grid_path, png_path = pipeline.export_heatmap(
        loaded, sample_id, _out_dir(out, cfg),
        sigma_px=_resolve(sigma_px, cfg.get("sigma_px"), None),
    )
    click.echo(f"wrote {grid_path} and {png_path}")
    return EXIT_CLEAN


@cli.command("prepare")
@manifest_option
@out_option
@click.option("--rho", type=float, multiple=True,
              help="Gaze-mass threshold in (0, 1); first value is used.")
@_apply(common_prepare_options)
@config_option
def cmd_prepare(manifest, out, rho, mode, sigma_px, min_crop, profile, jobs,
                seed, config_path) -> int:
    """Build prepared-input bundles and per-sample cost rows."""
    cfg = _load_config_file(config_path)
    run_config = _build_run_config(
        cfg, manifest=manifest, rho=rho, mode=mode, sigma_px=sigma_px,
        min_crop=min_crop, profile=profile, jobs=jobs, seed=seed,
    )
    out_dir = _out_dir(out, cfg)
    loaded = load_manifest(run_config.manifest_path)
    run_rho = None if run_config.mode is InputMode.BASELINE else run_config.rhos[0]
    rows, skips = pipeline.run_prepare(loaded, run_config, out_dir, rho=run_rho)
    for skip in skips:
        click.echo(f"skipped {skip['sample_id']}: {skip['reason']}", err=True)
    click.echo(f"prepared {len(rows)} samples, skipped {len(skips)} -> {out_dir}")
    return EXIT_SKIPS if skips else EXIT_CLEAN


@cli.command("sweep")
@manifest_option
@out_option
@click.option("--rho", type=float, multiple=True,
              help="Gaze-mass thresholds to sweep (repeatable).")
@_apply(common_prepare_options)
@config_option
def cmd_sweep(manifest, out, rho, mode, sigma_px, min_crop, profile, jobs,
              seed, config_path) -> int:
    """Prepare at every rho plus a full-image baseline; write sweep tables."""
    cfg = _load_config_file(config_path)
    if not rho and not cfg.get("rho"):
        raise click.UsageError("sweep needs at least one --rho value")
    run_config = _build_run_config(
        cfg, manifest=manifest, rho=rho, mode=mode, sigma_px=sigma_px,
        min_crop=min_crop, profile=profile, jobs=jobs, seed=seed,
    )
    if run_config.mode is InputMode.BASELINE:
        raise click.UsageError("sweep mode must be roi_only or two_scale")
    out_dir = _out_dir(out, cfg)
    loaded = load_manifest(run_config.manifest_path)
    sweep_rows, skips = pipeline.run_sweep(loaded, run_config, out_dir)
    for skip in skips:
        click.echo(f"skipped {skip['sample_id']}: {skip['reason']}", err=True)
    click.echo(f"swept {len(sweep_rows) - 1} rho values + baseline -> {out_dir}")
    return EXIT_SKIPS if skips else EXIT_CLEAN


@cli.command("score")
@manifest_option
@click.option("--answers-a", required=True, help="Candidate answers JSONL.")
@click.option("--answers-b", required=True, help="Baseline answers JSONL.")
@out_option
@click.option("--judge", "judge_kind", default="mock",
              type=click.Choice(["mock", "http"]), help="Judge backend.")
@click.option("--judge-endpoint", default=None, envvar=judging.JUDGE_ENDPOINT_ENV,
              help="Judge chat-completions URL (env GAZEFOVEA_JUDGE_ENDPOINT).")
@click.option("--judge-model", default=None, envvar=judging.JUDGE_MODEL_ENV,
              help="Judge model identifier (env GAZEFOVEA_JUDGE_MODEL).")
@click.option("--score-mode", default=None, type=click.Choice(["ab", "mean"]),
              help="Take per-pair scores from the AB call or the mean of both.")
@click.option("--seed", type=int, default=None)
@config_option
def cmd_score(manifest, answers_a, answers_b, out, judge_kind, judge_endpoint,
              judge_model, score_mode, seed, config_path) -> int:
    """Judge two answer files pairwise and write verdicts and a summary."""
    cfg = _load_config_file(config_path)
    manifest = _resolve(manifest, cfg.get("manifest"), None)
    if not manifest:
        raise click.UsageError("--manifest is required (flag or config file)")
    seed = int(_resolve(seed, cfg.get("seed"), 0))
    score_mode = _resolve(score_mode, cfg.get("score_mode"), "ab")
    loaded = load_manifest(manifest)
    if judge_kind == "http":
        judge = judging.HttpJudgeClient(endpoint=judge_endpoint, model=judge_model)
    else:
        judge = judging.DeterministicMockJudge(seed=seed)
    summary, unpaired = pipeline.run_score(
        loaded,
        pipeline.load_answers(answers_a),
        pipeline.load_answers(answers_b),
        _out_dir(out, cfg),
        judge=judge,
        seed=seed,
        score_mode=score_mode,
    )
    for sid in unpaired:
        click.echo(f"warning: unpaired sample_id {sid}", err=True)
    rate = "undefined" if summary.win_rate_pct is None else f"{summary.win_rate_pct:.1f}%"
    click.echo(
        f"wins={summary.wins} ties={summary.ties} losses={summary.losses} "
        f"win_rate={rate}"
    )
    return EXIT_SKIPS if unpaired else EXIT_CLEAN


@cli.command("report")
@click.option("--sweep", "sweep_dir", required=True, help="Directory written by sweep.")
@click.option("--score", "score_dirs", multiple=True,
              help="Directory written by score (repeatable).")
@click.option("--out", "out_path", required=True, help="Markdown report path.")
def cmd_report(sweep_dir, score_dirs, out_path) -> int:
    """Render the markdown run report."""
    pipeline.run_report(sweep_dir, list(score_dirs), out_path)
    click.echo(f"wrote {out_path}")
    return EXIT_CLEAN


def main(argv=None) -> int:
    """Entry point mapping exceptions onto the documented exit codes."""
    try:
        result = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_FATAL
    except (GazeFoveaError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_FATAL
    return int(result) if isinstance(result, int) else EXIT_CLEAN


if __name__ == "__main__":
    sys.exit(main())
