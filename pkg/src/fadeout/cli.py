"""Command-line front end.

One subcommand per figure plus ``run --figure``, free-form ``eval``, and
``serve`` for the HTTP service.  Exit codes: 0 success, 2 invalid spec,
3 numerical failure (the failing method is named on standard error).
"""

from __future__ import annotations

import functools
import sys

import click

from . import figures
from .errors import NotApplicableError, NumericalFailureError, OutOfDomainError
from .fem2d import DEFAULT_DENSITIES
from .model import ModelParams

EXIT_INVALID_SPEC = 2
EXIT_NUMERICAL_FAILURE = 3


def _parse_grid(text):
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise OutOfDomainError(f"bad grid {text!r}: {exc}") from exc


def _guarded(fn):
    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (OutOfDomainError, NotApplicableError, ValueError) as exc:
            click.echo(f"error: invalid spec: {exc}", err=True)
            sys.exit(EXIT_INVALID_SPEC)
        except NumericalFailureError as exc:
            method = getattr(exc, "method", None)
            where = f" in method {method}" if method else ""
            click.echo(f"error: numerical failure{where}: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL_FAILURE)
    return wrapped


def _figure_options(fn):
    options = [
        click.option("--beta", type=float, default=None,
                     help="Infection rate (default: the figure's)."),
        click.option("--gamma", type=float, default=1.0, show_default=True,
                     help="Recovery rate."),
        click.option("--k", type=int, default=None,
                     help="Number of infectious stages."),
        click.option("--n-grid", type=str, default=None,
                     help="Comma-separated population sizes."),
        click.option("--i-grid", type=str, default=None,
                     help="Comma-separated initial counts (fig1 only)."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--out", type=click.Path(), default=".",
                     show_default=True,
                     help="Output CSV file or directory."),
        click.option("--methods", type=str, default=None,
                     help="Comma-separated method filter, e.g. Exact,OU."),
        click.option("--fem-density", type=str, default=None,
                     help="Five comma-separated mesh densities."),
        click.option("--mc-paths", type=int, default=100_000,
                     show_default=True),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _run_figure(figure, beta, gamma, k, n_grid, i_grid, seed, out, methods,
                fem_density, mc_paths):
    spec = figures.RunSpec(
        figure=figure,
        beta=beta,
        gamma=gamma,
        k=k,
        n_grid=_parse_grid(n_grid),
        i_grid=_parse_grid(i_grid),
        seed=seed,
        methods=(tuple(m.strip() for m in methods.split(","))
                 if methods else None),
        fem_density=_parse_grid(fem_density) or DEFAULT_DENSITIES,
        mc_paths=mc_paths,
    )
    path = figures.run(spec, out)
    click.echo(str(path))


@click.group()
def main():
    """Extinction-time estimators for stochastic SIS epidemic models."""


@main.command(name="run")
@click.option("--figure", required=True,
              type=click.Choice(figures.FIGURE_TAGS))
@_figure_options
@_guarded
def run_cmd(figure, **kwargs):
    """Write the CSV data set behind one figure."""
    _run_figure(figure, **kwargs)


def _register_figure_command(tag):
    @main.command(name=tag)
    @_figure_options
    @_guarded
    def _cmd(**kwargs):
        _run_figure(tag, **kwargs)
    _cmd.__doc__ = f"Write the {tag} data set (shorthand for run --figure)."
    return _cmd


for _tag in figures.FIGURE_TAGS:
    _register_figure_command(_tag)


@main.command(name="eval")
@click.option("--method", required=True,
              help="Exact, Det, Lin, DSS, KL, AD, OU, FPE, BBN, Diff, MC.")
@click.option("--beta", type=float, required=True)
@click.option("--gamma", type=float, default=1.0, show_default=True)
@click.option("--n", "n_pop", type=int, required=True)
@click.option("--k", type=int, default=1, show_default=True)
@click.option("--i", "i0", type=int, default=None,
              help="Initial infective count (QSD-based methods ignore it).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mc-paths", type=int, default=100_000, show_default=True)
@_guarded
def eval_cmd(method, beta, gamma, n_pop, k, i0, seed, mc_paths):
    """Evaluate a single method and print its estimate."""
    params = ModelParams(beta=beta, gamma=gamma, n_pop=n_pop, k_stages=k)
    est = figures.evaluate_method(method, params, i=i0, seed=seed,
                                  mc_paths=mc_paths)
    click.echo(f"method={est.method.value}")
    click.echo(f"value={est.value:.11e}")
    if est.log_value is not None:
        click.echo(f"log_value={est.log_value:.11e}")
    if est.std_error is not None:
        click.echo(f"std_error={est.std_error:.11e}")
    for key, val in est.meta.items():
        click.echo(f"{key}={val}")


@main.command(name="serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("fadeout.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
