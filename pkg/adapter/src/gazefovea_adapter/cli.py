"""Command line entry point: answer one prepare run's bundles."""

import sys

import click

from .client import (
    VLM_ENDPOINT_ENV,
    VLM_MODEL_ENV,
    GenerationSettings,
    HttpVlmClient,
)
from .errors import AdapterError
from .runner import ModelConfig, run_batch

EXIT_CLEAN = 0
EXIT_USAGE = 1
EXIT_FAILURES = 2
EXIT_FATAL = 3


@click.command("gazefovea-adapter")
@click.option("--run-dir", required=True,
              help="Prepare output directory (results.jsonl + bundle dirs).")
@click.option("--out", required=True, help="Output directory for answers.jsonl.")
@click.option("--endpoint", default=None, envvar=VLM_ENDPOINT_ENV,
              help=f"Chat-completions URL (env {VLM_ENDPOINT_ENV}).")
@click.option("--model", default=None, envvar=VLM_MODEL_ENV,
              help=f"Model identifier (env {VLM_MODEL_ENV}).")
@click.option("--concurrency", type=int, default=2, show_default=True,
              help="Maximum in-flight requests.")
@click.option("--max-tokens", type=int, default=256, show_default=True,
              help="Generation cap, recorded in run_meta.json.")
def cmd_run(run_dir, out, endpoint, model, concurrency, max_tokens) -> int:
    """Feed prepared bundles to the model and write answers JSONL."""
    if not model:
        raise click.UsageError(f"--model is required (or set {VLM_MODEL_ENV})")
    if concurrency < 1:
        raise click.UsageError("--concurrency must be >= 1")
    client = HttpVlmClient(endpoint=endpoint, model=model)
    config = ModelConfig(
        model_name=model,
        concurrency=concurrency,
        settings=GenerationSettings(max_tokens=max_tokens),
    )
    records, failures = run_batch(run_dir, config, client, out)
    for failure in failures:
        click.echo(f"failed {failure['sample_id']}: {failure['reason']}", err=True)
    click.echo(f"answered {len(records)} bundles, {len(failures)} failures -> {out}")
    return EXIT_FAILURES if failures else EXIT_CLEAN


def main(argv=None) -> int:
    """Run the command with library-style exit codes (no click exits)."""
    try:
        result = cmd_run.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_FATAL
    except (AdapterError, OSError) as exc:
        click.echo(f"fatal: {exc}", err=True)
        return EXIT_FATAL
    return result if isinstance(result, int) else EXIT_CLEAN


if __name__ == "__main__":
    sys.exit(main())
