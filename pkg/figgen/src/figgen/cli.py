"""figgen CLI: render one figure kind from a results directory."""

from __future__ import annotations

import sys

import click

from .render import KINDS, FigureSpec, RenderError, render


@click.command()
@click.option("--results", required=True, type=click.Path(),
              help="benchmark/denoise artifact directory (or file)")
@click.option("--kind", required=True, type=click.Choice(KINDS))
@click.option("--out", required=True, type=click.Path(), help="output file path")
@click.option("--vmin", default=None, type=float, help="color scale lower bound")
@click.option("--vmax", default=None, type=float, help="color scale upper bound")
def main(results, kind, out, vmin, vmax):
    """Render benchmark artifacts; never recomputes estimates."""
    try:
        spec = FigureSpec(results=results, kind=kind, out=out,
                          vmin=vmin, vmax=vmax)
        written = render(spec)
    except RenderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(4)
    for path in written:
        click.echo(str(path))


if __name__ == "__main__":
    main()
