"""Command-line interface.

Every subcommand is a thin client over the HTTP service: by default the
FastAPI app runs in-process (no socket), and --server redirects the same
calls to a remote instance. Exit codes: 0 success, 1 usage, 2 data error,
3 plug-in error.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .errors import EXIT_DATA, EXIT_PLUGIN, EXIT_USAGE, LyristicsError

_KIND_EXIT = {"data": EXIT_DATA, "plugin": EXIT_PLUGIN}


def _client(ctx):
    server = ctx.obj["server"]
    import httpx

    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # fastapi's testclient import warns about its own starlette dep
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _call(ctx, method: str, path: str, payload: dict | None = None) -> dict:
    import httpx

    try:
        with _client(ctx) as client:
            response = client.request(method, path, json=payload)
    except httpx.TransportError as exc:
        click.echo(f"error: cannot reach {ctx.obj['server']}: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if response.status_code >= 400:
        try:
            body = response.json()
        except ValueError:
            body = {}
        message = body.get("error") or body.get("detail") or response.text
        click.echo(f"error: {message}", err=True)
        sys.exit(_KIND_EXIT.get(body.get("kind"), EXIT_DATA))
    return response.json()


def _explicit(ctx, name: str) -> bool:
    source = ctx.get_parameter_source(name)
    return source is not None and source.name != "DEFAULT"


@click.group()
@click.option("--server", default=None, metavar="URL", help="Remote service URL (default: in-process).")
@click.option("--out", "out_dir", default=None, metavar="DIR", help="Output directory for artifacts.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base RNG seed.")
@click.option("--log-base", type=click.Choice(["natural", "2", "10"]), default="natural", show_default=True)
@click.option("--classifier", default="builtin", show_default=True, metavar="builtin|plugin:<cmd>")
@click.option("--jobs", type=int, default=None, metavar="N", help="Parallel trainings (default: cores).")
@click.pass_context
def cli(ctx, server, out_dir, seed, log_base, classifier, jobs):
    """Lyricist-singer entropy and lyric-lyricist classification toolkit."""
    ctx.obj = {
        "server": server,
        "out_dir": out_dir,
        "seed": seed,
        "log_base": log_base,
        "classifier": classifier,
        "jobs": jobs,
    }


def _out_dir(ctx, default: str) -> str:
    return ctx.obj["out_dir"] or default


@cli.command()
@click.argument("in_path")
@click.argument("out_path")
@click.option("--format", "format_", default=None, type=click.Choice(["jsonl", "csv"]))
@click.option("--out-format", default=None, type=click.Choice(["jsonl", "csv"]))
@click.option("--remap", default=None, metavar="CSV", help="Two-column lyricist-id merge map.")
@click.option("--min-songs", default=1, show_default=True, help="Drop lyricists with fewer songs.")
@click.option("--names-out", default=None, metavar="CSV", help="Write near-duplicate name pairs here.")
@click.option("--max-name-dist", default=1, show_default=True)
@click.pass_context
def ingest(ctx, in_path, out_path, format_, out_format, remap, min_songs, names_out, max_name_dist):
    """Normalize a raw corpus file into the canonical JSONL form."""
    result = _call(
        ctx,
        "POST",
        "/ingest",
        {
            "in_path": in_path,
            "out_path": out_path,
            "format": format_,
            "out_format": out_format,
            "remap": remap,
            "min_songs": min_songs,
            "names_out": names_out,
            "max_name_dist": max_name_dist,
        },
    )
    click.echo(
        f"wrote {result['out_path']}: {result['n_songs']} songs, "
        f"{result['n_lyricists']} lyricists, {result['n_singers']} singers"
    )
    if result.get("name_variant_pairs") is not None:
        click.echo(f"name variant pairs for review: {result['name_variant_pairs']} -> {names_out}")


@cli.command()
@click.argument("corpus")
@click.option("--min-songs", default=10, show_default=True)
@click.option("--csv", "csv_out", default=None, metavar="FILE", help="Write per-lyricist stats CSV.")
@click.option("--histogram-bin", type=float, default=None, metavar="W", help="Print an entropy histogram.")
@click.pass_context
def entropy(ctx, corpus, min_songs, csv_out, histogram_bin):
    """Per-lyricist singer distributions and entropies."""
    result = _call(
        ctx,
        "POST",
        "/entropy",
        {
            "corpus": corpus,
            "base": ctx.obj["log_base"],
            "min_songs": min_songs,
            "histogram_bin": histogram_bin,
        },
    )
    stats = result["stats"]
    if csv_out:
        with open(csv_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lyricist_id", "song_count", "n_singers", "entropy"])
            for row in stats:
                writer.writerow(
                    [row["lyricist_id"], row["song_count"], row["n_singers"], f"{row['entropy']:.6f}"]
                )
        click.echo(f"wrote {csv_out} ({len(stats)} lyricists)")
    else:
        zero = sum(1 for row in stats if row["entropy"] == 0.0)
        top = max(stats, key=lambda r: r["entropy"], default=None)
        click.echo(f"{len(stats)} lyricists, {zero} with zero entropy (base={result['base']})")
        if top:
            click.echo(f"max entropy {top['entropy']:.3f} ({top['lyricist_id']})")
    if result.get("histogram"):
        for left, count in result["histogram"]:
            click.echo(f"  [{left:6.3f}, +{histogram_bin:g}) {count}")


@cli.command()
@click.argument("corpus")
@click.option("--method", default="both", type=click.Choice(["quantile", "kmeans", "both"]), show_default=True)
@click.option("--min-songs", default=10, show_default=True)
@click.option("--json", "json_out", default=None, metavar="FILE", help="Write full groupings JSON.")
@click.pass_context
def group(ctx, corpus, method, min_songs, json_out):
    """Split lyricists into the five entropy groups."""
    result = _call(
        ctx,
        "POST",
        "/group",
        {"corpus": corpus, "method": method, "base": ctx.obj["log_base"], "min_songs": min_songs},
    )
    for grouping in result["groupings"]:
        label = "A" if grouping["method"] == "quantile" else "B"
        click.echo(f"{grouping['method']} grouping:")
        click.echo("  group  count  avg_songs  avg_entropy  min      max")
        for row in grouping["stats"]:
            click.echo(
                f"  {label}{row['group']}     {row['count']:>5}  {row['avg_songs']:>9.2f}"
                f"  {row['avg_entropy']:>11.3f}  {row['min_entropy']:>7.3f}  {row['max_entropy']:>7.3f}"
            )
    if json_out:
        with open(json_out, "w", encoding="utf-8") as fh:
            json.dump(result["groupings"], fh, indent=2, sort_keys=True)
            fh.write("\n")
        click.echo(f"wrote {json_out}")


@cli.command()
@click.argument("corpus")
@click.option("--mode", required=True, type=click.Choice(["homogenous", "heterogenous"]))
@click.option("--method", default="quantile", type=click.Choice(["quantile", "kmeans"]), show_default=True)
@click.option("--reps", type=int, default=None, help="Repetitions (default: 10 homogenous / 50 heterogenous).")
@click.option("--min-songs", default=10, show_default=True)
@click.pass_context
def sample(ctx, corpus, mode, method, reps, min_songs):
    """Draw experiment datasets (10 lyricists x 10 songs, split 6/2/2)."""
    out_dir = _out_dir(ctx, "datasets")
    result = _call(
        ctx,
        "POST",
        "/sample",
        {
            "corpus": corpus,
            "method": method,
            "mode": mode,
            "repetitions": reps,
            "base_seed": ctx.obj["seed"],
            "base": ctx.obj["log_base"],
            "min_songs": min_songs,
            "out_dir": out_dir,
        },
    )
    click.echo(f"wrote {len(result['datasets'])} datasets to {out_dir}/")


@cli.command()
@click.argument("corpus")
@click.argument("dataset")
@click.option("--config", "config_path", default=None, metavar="JSON", help="Classifier config file.")
@click.option("--model-out", default=None, metavar="FILE")
@click.pass_context
def train(ctx, corpus, dataset, config_path, model_out):
    """Train the built-in classifier on one dataset."""
    if ctx.obj["classifier"] != "builtin":
        # protocol v1 has no model save/load, so a plugin model cannot
        # outlive its process; only `experiment` can drive plugins
        raise click.UsageError("train supports the built-in classifier only; use 'experiment' for plugins")
    config = None
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            config = json.load(fh)
    if model_out is None:
        stem = Path(dataset).stem
        model_out = str(Path(_out_dir(ctx, "models")) / f"{stem}.npz")
    result = _call(
        ctx,
        "POST",
        "/train",
        {"corpus": corpus, "dataset": dataset, "config": config, "model_out": model_out},
    )
    click.echo(
        f"trained {result['dataset_id']}: {result['epochs_run']} epochs, "
        f"best epoch {result['best_epoch']} (val loss {result['final_val_loss']:.4f}); "
        f"saved {result['model_path']}"
    )


@cli.command()
@click.argument("corpus")
@click.argument("dataset")
@click.argument("model")
@click.option("--score-out", default=None, metavar="FILE")
@click.pass_context
def evaluate(ctx, corpus, dataset, model, score_out):
    """Score a trained model on its dataset's test songs."""
    if ctx.obj["classifier"] != "builtin":
        raise click.UsageError("evaluate supports the built-in classifier only; use 'experiment' for plugins")
    result = _call(
        ctx,
        "POST",
        "/evaluate",
        {"corpus": corpus, "dataset": dataset, "model": model, "score_out": score_out},
    )
    click.echo(f"{result['dataset_id']}: accuracy {result['accuracy']:.3f}")
    click.echo("  lyricist         tp fp fn  precision  recall  f1")
    for row in result["per_lyricist"]:
        click.echo(
            f"  {row['lyricist_id']:<15} {row['tp']:>3}{row['fp']:>3}{row['fn']:>3}"
            f"  {row['precision']:>9.3f}  {row['recall']:>6.3f}  {row['f1']:>6.3f}"
        )
    if result.get("score_path"):
        click.echo(f"wrote {result['score_path']}")


@cli.command()
@click.argument("corpus")
@click.option("--config", "config_path", default=None, metavar="JSON", help="Experiment config file.")
@click.option("--retry-failed", is_flag=True, help="Retry datasets that failed in a previous run.")
@click.option("--no-wait", is_flag=True, help="Detach; poll with the printed run id.")
@click.pass_context
def experiment(ctx, corpus, config_path, retry_failed, no_wait):
    """Run the full pipeline: group, sample, train, score, report."""
    if no_wait and not ctx.obj["server"]:
        raise click.UsageError("--no-wait needs --server; an in-process run dies with the CLI")
    config = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            click.echo("error: config file must hold a JSON object", err=True)
            sys.exit(EXIT_DATA)
    root = ctx.parent or ctx
    if _explicit(root, "seed") or "base_seed" not in config:
        config["base_seed"] = ctx.obj["seed"]
    if _explicit(root, "log_base") or "log_base" not in config:
        config["log_base"] = ctx.obj["log_base"]
    if _explicit(root, "classifier") or "classifier" not in config:
        config["classifier"] = ctx.obj["classifier"]
    out_dir = _out_dir(ctx, "experiment-out")
    result = _call(
        ctx,
        "POST",
        "/experiments",
        {
            "corpus": corpus,
            "out_dir": out_dir,
            "config": config,
            "jobs": ctx.obj["jobs"],
            "retry_failed": retry_failed,
            "wait": not no_wait,
        },
    )
    click.echo(f"run {result['run_id']}: {result['state']}")
    if result["state"] == "failed":
        click.echo(f"error: {result['error']}", err=True)
        sys.exit(EXIT_DATA)
    if result["state"] == "done":
        manifest = result["manifest"]
        entries = list(manifest["datasets"].values())
        statuses = [e["status"] for e in entries]
        n_failed = statuses.count("failed")
        click.echo(f"datasets: {statuses.count('scored')} scored, {n_failed} failed")
        if n_failed:
            for entry in entries:
                if entry["status"] == "failed":
                    click.echo(f"  failed {entry['dataset']}: {entry['reason']}", err=True)
        summary_path = Path(out_dir) / "reports" / "summary.json"
        if summary_path.exists():
            with open(summary_path, encoding="utf-8") as fh:
                summary = json.load(fh)
            for stem, values in sorted(summary.items()):
                r = values["pearson_r"]
                rho = values["spearman_rho"]
                r_txt = "n/a" if r is None else f"{r:+.3f}"
                rho_txt = "n/a" if rho is None else f"{rho:+.3f}"
                click.echo(f"  {stem}: pearson {r_txt}, spearman {rho_txt}")
        click.echo(f"reports in {out_dir}/reports/")
        if n_failed:
            kinds = {e.get("kind") for e in entries if e["status"] == "failed"}
            sys.exit(EXIT_PLUGIN if "plugin" in kinds else EXIT_DATA)


@cli.command()
@click.argument("out_path")
@click.option("--params", "params_path", default=None, metavar="JSON", help="Generator params file.")
@click.option("--preset", default=None, type=click.Choice(["hypothesis"]))
@click.option("--alpha", type=float, default=None, help="Override preset lyricist-style weight.")
@click.option("--beta", type=float, default=None, help="Override preset singer-style weight.")
@click.pass_context
def synth(ctx, out_path, params_path, preset, alpha, beta):
    """Generate a synthetic corpus with controllable singer influence."""
    result = _call(
        ctx,
        "POST",
        "/synth",
        {
            "out_path": out_path,
            "params_path": params_path,
            "preset": preset,
            "seed": ctx.obj["seed"],
            "alpha": alpha,
            "beta": beta,
        },
    )
    click.echo(
        f"wrote {result['out_path']}: {result['n_songs']} songs, "
        f"{result['n_lyricists']} lyricists, {result['n_singers']} singers"
    )


@cli.command()
@click.argument("run_dir")
@click.option("--pooled/--macro", "pooled", default=None, help="Aggregation mode override.")
@click.pass_context
def report(ctx, run_dir, pooled):
    """Regenerate tables, correlation summaries, and charts for a run."""
    result = _call(ctx, "POST", "/report", {"run_dir": run_dir, "pooled": pooled})
    for rel in result["reports"]:
        click.echo(f"{result['run_dir']}/{rel}")


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except LyristicsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
