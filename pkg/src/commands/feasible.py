"""``feasible``: decide whether a datum has a finite BL constant."""

from __future__ import annotations

import logging

import click

from ..services.file_formats import load_datum
from .common import emit, finish, handle_errors, services_from_context

LOGGER = logging.getLogger(__name__)


@click.command("feasible")
@click.argument("datum_path", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def feasible_command(ctx: click.Context, datum_path: str) -> None:
    """Report feasible, infeasible (with a witness subspace) or inconclusive."""

    services = services_from_context(ctx)
    datum = load_datum(datum_path)
    LOGGER.info("checking feasibility of %s (n=%d, m=%d)", datum_path, datum.n, datum.m)

    report = services.brascamp_lieb.feasibility(datum)
    emit(report.to_dict(), services.config)
    finish(report.verdict)


__all__ = ["feasible_command"]
