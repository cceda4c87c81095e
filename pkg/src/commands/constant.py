"""``constant``: BL constant, its reverse and the closed-form upper bound."""

from __future__ import annotations

import logging

import click

from ..services.file_formats import load_datum
from .common import emit, finish, handle_errors, services_from_context

LOGGER = logging.getLogger(__name__)


@click.command("constant")
@click.argument("datum_path", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def constant_command(ctx: click.Context, datum_path: str) -> None:
    """Estimate BL(B, p) within a factor 1 +/- eps; prints inf when infeasible."""

    services = services_from_context(ctx)
    config = services.config
    datum = load_datum(datum_path)

    result = services.brascamp_lieb.bl_constant(datum, config.eps)
    payload = result.to_dict()
    if config.trace and result.trace is not None:
        payload["trace"] = result.trace.to_dict()
    LOGGER.info("constant of %s: %s (%s)", datum_path, result.value, result.status)
    emit(payload, config)
    finish(result.status)


__all__ = ["constant_command"]
