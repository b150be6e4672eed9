"""Command-line interface.

Every flag can also come from a `--config` file of `key = value` lines
(keys are the long flag names with '-' or '_' interchangeable); explicit
flags win over config values. Exit codes: 0 success, 2 configuration
error, 3 data or file-format error, 4 solver or training failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import click
from click.core import ParameterSource

from .diffusion import DEFAULT_ALPHA, DEFAULT_MAX_ITER, DEFAULT_TOL
from .errors import ConfigError, RelabError
from .graph import DEFAULT_GAMMA
from .pipeline import (
    METHODS,
    STRATEGIES,
    PipelineConfig,
    evaluate_step,
    graph_step,
    load_config_file,
    propagate_step,
    run_pipeline,
    select_step,
    synth_step,
    whiten_step,
)
from .selection import ProbeConfig

_PROBE_DEFAULTS = ProbeConfig()


@dataclass
class CliState:
    config: dict = field(default_factory=dict)
    quiet: bool = False
    as_json: bool = False


def _config_key(param):
    for opt in param.opts:
        if opt.startswith("--"):
            return opt[2:].replace("-", "_")
    return None


class ConfigCommand(click.Command):
    """Command whose unset flags are filled from the --config file."""

    def invoke(self, ctx):
        state = ctx.obj
        if isinstance(state, CliState) and state.config:
            for param in self.params:
                if not isinstance(param, click.Option):
                    continue
                key = _config_key(param)
                if key is None or key not in state.config:
                    continue
                if ctx.get_parameter_source(param.name) == ParameterSource.COMMANDLINE:
                    continue
                value = state.config[key]
                if param.is_flag:
                    ctx.params[param.name] = bool(value)
                else:
                    ctx.params[param.name] = param.type_cast_value(ctx, value)
        return super().invoke(ctx)


class ConfigGroup(click.Group):
    command_class = ConfigCommand
    group_class = type


def _require(**named):
    missing = [name for name, value in named.items() if value is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def _format_value(value):
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _emit(ctx, summary):
    """Print one step summary dict, honoring --quiet and --json."""
    state = ctx.obj
    if state.as_json:
        click.echo(json.dumps(summary, sort_keys=True))
        return
    if state.quiet:
        return
    name = summary.get("step", "")
    parts = [f"{k}={_format_value(v)}" for k, v in summary.items() if k != "step"]
    click.echo(f"{name}: " + " ".join(parts))


def _emit_steps(ctx, steps):
    state = ctx.obj
    if state.as_json:
        click.echo(json.dumps(steps, sort_keys=True))
        return
    for summary in steps:
        if not state.quiet:
            name = summary.get("step", "")
            parts = [f"{k}={_format_value(v)}" for k, v in summary.items() if k != "step"]
            click.echo(f"{name}: " + " ".join(parts))


@click.group(cls=ConfigGroup, name="relab")
@click.option("--config", "config_path", default=None, metavar="PATH",
              help="key = value file supplying defaults for any flag below")
@click.option("--quiet", is_flag=True, help="suppress summary output")
@click.option("--json", "as_json", is_flag=True, help="print summaries as JSON")
@click.pass_context
def cli(ctx, config_path, quiet, as_json):
    """Bootstrap labels: diffuse seed labels over a feature graph, then
    select a class-balanced reliable subset by the small-loss criterion."""
    config = load_config_file(config_path) if config_path else {}
    ctx.obj = CliState(config=config, quiet=quiet, as_json=as_json)


@cli.group(cls=ConfigGroup)
def features():
    """Feature-matrix operations."""


@features.command("whiten")
@click.option("--in", "in_path", metavar="PATH", help="input features (RELF)")
@click.option("--out", "out_path", metavar="PATH", help="whitened features (RELF)")
@click.option("--eps", type=float, default=1e-10, show_default=True,
              help="relative eigenvalue cutoff for null directions")
@click.pass_context
def features_whiten(ctx, in_path, out_path, eps):
    """PCA-whiten a feature file."""
    _require(**{"in": in_path, "out": out_path})
    _emit(ctx, whiten_step(in_path, out_path, eps=eps))


@cli.group(cls=ConfigGroup)
def graph():
    """Affinity-graph operations."""


@graph.command("build")
@click.option("--features", "features_path", metavar="PATH")
@click.option("--gamma", type=float, default=DEFAULT_GAMMA, show_default=True,
              help="cosine-affinity exponent")
@click.option("--k", type=int, default=None,
              help="keep top-k neighbors per node; all pairs when omitted")
@click.option("--out", "out_path", metavar="PATH", help="graph file (RELG)")
@click.pass_context
def graph_build(ctx, features_path, gamma, k, out_path):
    """Build the cosine-affinity graph over feature rows."""
    _require(features=features_path, out=out_path)
    _emit(ctx, graph_step(features_path, out_path, gamma=gamma, k=k))


@cli.command()
@click.option("--graph", "graph_path", metavar="PATH",
              help="affinity graph (RELG), needed by --method diffusion")
@click.option("--features", "features_path", metavar="PATH",
              help="feature file (RELF), needed by --method nn")
@click.option("--seeds", "seeds_path", metavar="PATH", help="seed labels (JSON)")
@click.option("--alpha", type=float, default=DEFAULT_ALPHA, show_default=True,
              help="diffusion strength, 0 <= alpha < 1")
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True)
@click.option("--max-iter", type=int, default=DEFAULT_MAX_ITER, show_default=True)
@click.option("--method", type=click.Choice(METHODS), default="diffusion",
              show_default=True)
@click.option("--out", "out_path", metavar="PATH", help="propagated labels (JSONL)")
@click.pass_context
def propagate(ctx, graph_path, features_path, seeds_path, alpha, tol, max_iter,
              method, out_path):
    """Spread seed labels to every sample."""
    _require(seeds=seeds_path, out=out_path)
    if method == "diffusion":
        _require(graph=graph_path)
    else:
        _require(features=features_path)
    _emit(ctx, propagate_step(
        seeds_path, out_path, graph_path=graph_path, features_path=features_path,
        alpha=alpha, tol=tol, max_iter=max_iter, method=method,
    ))


@cli.command()
@click.option("--features", "features_path", metavar="PATH",
              help="whitened features (RELF)")
@click.option("--propagated", "propagated_path", metavar="PATH")
@click.option("--seeds", "seeds_path", metavar="PATH")
@click.option("--nr", "n_r", type=int, default=None,
              help="reliable-set size; default 500 for 10 classes, 4000 for 100")
@click.option("--epochs", type=int, default=_PROBE_DEFAULTS.epochs, show_default=True)
@click.option("--lr", type=float, default=_PROBE_DEFAULTS.learning_rate,
              show_default=True)
@click.option("--momentum", type=float, default=_PROBE_DEFAULTS.momentum,
              show_default=True)
@click.option("--batch-size", type=int, default=_PROBE_DEFAULTS.batch_size,
              show_default=True)
@click.option("--window", type=int, default=_PROBE_DEFAULTS.average_window,
              show_default=True, help="epochs averaged for the small-loss score")
@click.option("--rng-seed", type=int, default=_PROBE_DEFAULTS.rng_seed,
              show_default=True)
@click.option("--strategy", type=click.Choice(STRATEGIES), default="small-loss",
              show_default=True)
@click.option("--out", "out_path", metavar="PATH", help="reliable set (JSONL)")
@click.pass_context
def select(ctx, features_path, propagated_path, seeds_path, n_r, epochs, lr,
           momentum, batch_size, window, rng_seed, strategy, out_path):
    """Select the class-balanced reliable subset."""
    _require(features=features_path, propagated=propagated_path,
             seeds=seeds_path, out=out_path)
    probe = ProbeConfig(epochs=epochs, learning_rate=lr, momentum=momentum,
                        batch_size=batch_size, average_window=window,
                        rng_seed=rng_seed)
    _emit(ctx, select_step(
        features_path, propagated_path, seeds_path, out_path,
        n_r=n_r, strategy=strategy, probe=probe,
    ))


@cli.command()
@click.option("--predicted", "predicted_path", metavar="PATH",
              help="propagated labels (JSONL)")
@click.option("--truth", "truth_path", metavar="PATH", help="true labels (JSON)")
@click.option("--reliable", "reliable_path", metavar="PATH", default=None,
              help="also score this reliable set")
@click.option("--out", "out_path", metavar="PATH", help="report (JSON)")
@click.pass_context
def evaluate(ctx, predicted_path, truth_path, reliable_path, out_path):
    """Write a per-class noise and balance report."""
    _require(predicted=predicted_path, truth=truth_path, out=out_path)
    _emit(ctx, evaluate_step(predicted_path, truth_path, out_path,
                             reliable_path=reliable_path))


@cli.command()
@click.option("--classes", "n_classes", type=int, default=10, show_default=True)
@click.option("--per-class", type=int, default=100, show_default=True)
@click.option("--dims", type=int, default=32, show_default=True)
@click.option("--separation", type=float, default=3.0, show_default=True,
              help="minimum center distance in within-cluster std units")
@click.option("--rng-seed", type=int, default=0, show_default=True)
@click.option("--imbalance", type=int, multiple=True,
              help="per-class counts (repeat C times); overrides --per-class")
@click.option("--out-features", metavar="PATH")
@click.option("--out-truth", metavar="PATH")
@click.option("--out-seeds", metavar="PATH", default=None,
              help="also write a seed file (needs --seeds-per-class)")
@click.option("--seeds-per-class", type=int, default=None)
@click.pass_context
def synth(ctx, n_classes, per_class, dims, separation, rng_seed, imbalance,
          out_features, out_truth, out_seeds, seeds_per_class):
    """Generate a labeled Gaussian-mixture fixture."""
    _require(out_features=out_features, out_truth=out_truth)
    _emit(ctx, synth_step(
        out_features, out_truth, n_classes=n_classes, per_class=per_class,
        dims=dims, separation=separation, rng_seed=rng_seed,
        imbalance=list(imbalance) if imbalance else None,
        out_seeds=out_seeds, seeds_per_class=seeds_per_class,
    ))


@cli.command()
@click.option("--features", "features_path", metavar="PATH", help="raw features (RELF)")
@click.option("--seeds", "seeds_path", metavar="PATH")
@click.option("--truth", "truth_path", metavar="PATH", default=None,
              help="when given, a report.json is written too")
@click.option("--out-dir", metavar="DIR")
@click.option("--eps", type=float, default=1e-10, show_default=True)
@click.option("--gamma", type=float, default=DEFAULT_GAMMA, show_default=True)
@click.option("--k", type=int, default=None)
@click.option("--alpha", type=float, default=DEFAULT_ALPHA, show_default=True)
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True)
@click.option("--max-iter", type=int, default=DEFAULT_MAX_ITER, show_default=True)
@click.option("--method", type=click.Choice(METHODS), default="diffusion",
              show_default=True)
@click.option("--nr", "n_r", type=int, default=None)
@click.option("--strategy", type=click.Choice(STRATEGIES), default="small-loss",
              show_default=True)
@click.option("--epochs", type=int, default=_PROBE_DEFAULTS.epochs, show_default=True)
@click.option("--lr", type=float, default=_PROBE_DEFAULTS.learning_rate,
              show_default=True)
@click.option("--momentum", type=float, default=_PROBE_DEFAULTS.momentum,
              show_default=True)
@click.option("--batch-size", type=int, default=_PROBE_DEFAULTS.batch_size,
              show_default=True)
@click.option("--window", type=int, default=_PROBE_DEFAULTS.average_window,
              show_default=True)
@click.option("--rng-seed", type=int, default=_PROBE_DEFAULTS.rng_seed,
              show_default=True)
@click.pass_context
def pipeline(ctx, features_path, seeds_path, truth_path, out_dir, eps, gamma, k,
             alpha, tol, max_iter, method, n_r, strategy, epochs, lr, momentum,
             batch_size, window, rng_seed):
    """Run whiten, graph, propagate, select, and evaluate in one go."""
    _require(features=features_path, seeds=seeds_path, out_dir=out_dir)
    probe = ProbeConfig(epochs=epochs, learning_rate=lr, momentum=momentum,
                        batch_size=batch_size, average_window=window,
                        rng_seed=rng_seed)
    cfg = PipelineConfig(
        features=features_path, seeds=seeds_path, out_dir=out_dir,
        truth=truth_path, eps=eps, gamma=gamma, k=k, alpha=alpha, tol=tol,
        max_iter=max_iter, method=method, n_r=n_r, strategy=strategy, probe=probe,
    )
    _emit_steps(ctx, run_pipeline(cfg))


def main(argv=None):
    """Console entry point mapping failures to documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 130
    except RelabError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except IndexError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
