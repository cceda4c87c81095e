import logging
import sys

import click
from pydantic import ValidationError

from config import Config
from .commands import (
    capacity_command,
    constant_command,
    feasible_command,
    polytope_group,
    scale_command,
)
from .commands.common import ExitCode
from .models.run_config import RunConfig


def create_cli() -> click.Group:
    @click.group("blscale")
    @click.option("--eps", type=float, default=None, help="Target relative accuracy, 0 < eps < 1.")
    @click.option("--max-steps", type=int, default=None, help="Step cap for every scaling loop.")
    @click.option("--g-target", type=float, default=None, help="Stop BL scaling once g drops below this.")
    @click.option("--ds-target", type=float, default=None, help="Stop operator scaling once ds drops below this.")
    @click.option(
        "--format",
        "output_format",
        type=click.Choice(["json", "csv", "human"]),
        default="json",
        show_default=True,
    )
    @click.option("--trace", is_flag=True, help="Include iteration histories and final factors.")
    @click.option("--oracle", is_flag=True, help="Also answer polytope queries with the vertex-hull oracle.")
    @click.option("--threads", type=int, default=None, help="Worker threads for Kraus sums.")
    @click.option(
        "--precision",
        type=int,
        default=None,
        metavar="BITS",
        help="Run operator scaling in mpmath at this many bits (at least 53).",
    )
    @click.option("--seed", type=int, default=None, help="Seed recorded with the run.")
    @click.pass_context
    def cli(ctx: click.Context, **options) -> None:
        """Brascamp-Lieb constants, feasibility and operator scaling."""

        try:
            ctx.obj = RunConfig.from_options(**options)
        except ValidationError as exc:
            first = exc.errors()[0]
            click.echo(f"input error: {first['loc'][0]}: {first['msg']}", err=True)
            raise click.exceptions.Exit(int(ExitCode.INPUT_ERROR))

    cli.add_command(feasible_command)
    cli.add_command(constant_command)
    cli.add_command(scale_command)
    cli.add_command(capacity_command)
    cli.add_command(polytope_group)

    logging.basicConfig(level=Config.LOG_LEVEL.upper(), stream=sys.stderr)

    return cli


cli = create_cli()

if __name__ == '__main__':
    cli()
