"""``capacity``: capacity of a completely positive operator and its rank verdict."""

from __future__ import annotations

import logging

import click

from ..errors import NonConvergence
from ..services.file_formats import load_operator
from .common import emit, finish, handle_errors, services_from_context

LOGGER = logging.getLogger(__name__)


@click.command("capacity")
@click.argument("operator_path", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def capacity_command(ctx: click.Context, operator_path: str) -> None:
    """Print cap(T) with a ds summary; a rank-decreasing operator prints 0 and verdict "no"."""

    services = services_from_context(ctx)
    config = services.config
    operator = load_operator(operator_path)

    rank = services.operators.is_rank_nondecreasing(operator, budget=config.feasibility_steps)
    payload = {"n1": operator.n1, "n2": operator.n2, "rank_verdict": rank.to_dict()}
    if rank.verdict == "no":
        payload.update({"capacity": 0.0, "verdict": "no"})
        emit(payload, config)
        finish("no")
        return

    try:
        estimate = services.operators.capacity_estimate(operator, config.eps, max_steps=config.max_steps)
    except NonConvergence as exc:
        LOGGER.warning("capacity of %s inconclusive: %s", operator_path, exc)
        payload.update({"capacity": None, "verdict": "inconclusive", "diagnostics": {"reason": str(exc)}})
        emit(payload, config)
        finish("inconclusive")
        return

    verdict = "no" if estimate.is_zero else "yes"
    payload.update({"verdict": verdict, **estimate.to_dict()})
    if config.trace and estimate.trace is not None:
        payload["trace"] = estimate.trace.to_dict()
    emit(payload, config)
    finish(verdict)


__all__ = ["capacity_command"]
