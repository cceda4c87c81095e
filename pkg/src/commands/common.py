"""Shared plumbing for the command-line subcommands."""

from __future__ import annotations

import functools
import logging
from enum import IntEnum
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
from pydantic import ValidationError

from ..errors import BLScaleError, InputError
from ..models.run_config import RunConfig
from ..services.brascamp_lieb_service import BrascampLiebService
from ..services.file_formats import dump_csv, dump_json, to_jsonable
from ..services.operator_scaling_service import OperatorScalingService
from ..services.polytope_service import PolytopeService

LOGGER = logging.getLogger(__name__)


class ExitCode(IntEnum):
    """Process exit status; scripts branch on these values."""

    OK = 0
    INPUT_ERROR = 1
    NEGATIVE = 3
    INCONCLUSIVE = 4


VERDICT_EXIT = {
    "feasible": ExitCode.OK,
    "finite": ExitCode.OK,
    "inside": ExitCode.OK,
    "yes": ExitCode.OK,
    "infeasible": ExitCode.NEGATIVE,
    "infinite": ExitCode.NEGATIVE,
    "outside": ExitCode.NEGATIVE,
    "no": ExitCode.NEGATIVE,
    "inconclusive": ExitCode.INCONCLUSIVE,
}


class Services:
    """Service instances configured from one ``RunConfig``."""

    def __init__(self, config: RunConfig) -> None:
        LOGGER.info("run seed %d, precision %s", config.seed, config.precision or "float64")
        self.config = config
        self.operators = OperatorScalingService(
            max_steps=config.max_steps,
            ds_target=config.ds_target,
            checkpoint_every=config.checkpoint_every,
            stagnation_window=config.stagnation_window,
            threads=config.threads,
            precision=config.precision,
        )
        self.brascamp_lieb = BrascampLiebService(
            operator_service=self.operators,
            eps=config.eps,
            g_target=config.g_target,
            max_steps=config.max_steps,
            feasibility_steps=config.feasibility_steps,
            checkpoint_every=config.checkpoint_every,
            witness_max_denominator=config.witness_max_denominator,
            lattice_limit=config.lattice_limit,
        )
        self.polytopes = PolytopeService(bl_service=self.brascamp_lieb)


def services_from_context(ctx: click.Context) -> Services:
    return Services(ctx.obj)


def handle_errors(command: Callable) -> Callable:
    """Map input and library errors to exit status 1 with a message on stderr."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except (InputError, ValidationError) as exc:
            click.echo(f"input error: {exc}", err=True)
        except BLScaleError as exc:
            LOGGER.warning("command failed: %s", exc)
            click.echo(f"error: {exc}", err=True)
        except ValueError as exc:
            click.echo(f"input error: {exc}", err=True)
        raise click.exceptions.Exit(int(ExitCode.INPUT_ERROR))

    return wrapper


def _human(payload: Dict[str, Any], indent: int = 0) -> List[str]:
    lines: List[str] = []
    pad = "  " * indent
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_human(value, indent + 1))
        else:
            lines.append(f"{pad}{key}: {value}")
    return lines


def emit(payload: Dict[str, Any], config: RunConfig, rows: Optional[Sequence[Dict[str, Any]]] = None) -> None:
    """Print ``payload`` in the configured format.

    ``rows`` are per-step records; CSV output prints only them, JSON output
    prints the payload (rows included under ``"rows"`` when given). JSON and
    human output also record the run seed and precision under ``"run"``.
    """

    if config.output_format == "csv":
        click.echo(dump_csv(rows if rows is not None else [to_jsonable(payload)]), nl=False)
        return
    payload = {**payload, "run": {"seed": config.seed, "precision": config.precision}}
    if config.output_format == "human":
        click.echo("\n".join(_human(to_jsonable(payload))))
        return
    if rows is not None:
        payload = {**payload, "rows": list(rows)}
    click.echo(dump_json(payload))


def finish(verdict: str) -> None:
    code = VERDICT_EXIT[verdict]
    if code != ExitCode.OK:
        raise click.exceptions.Exit(int(code))


__all__ = [
    "ExitCode",
    "Services",
    "VERDICT_EXIT",
    "emit",
    "finish",
    "handle_errors",
    "services_from_context",
]
