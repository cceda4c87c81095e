"""``polytope rank1|matroid``: membership in BL polytopes of vector families."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Any, Dict, Optional

import click

from ..models.polytope import PolytopeMembership
from ..services.file_formats import load_family, parse_exponents
from .common import emit, finish, handle_errors, services_from_context

LOGGER = logging.getLogger(__name__)


def membership_payload(
    membership: PolytopeMembership, oracle: Optional[PolytopeMembership]
) -> Dict[str, Any]:
    payload = membership.to_dict()
    if oracle is not None:
        payload["oracle"] = oracle.to_dict()
        payload["agree"] = membership.verdict == "inconclusive" or membership.verdict == oracle.verdict
        if not payload["agree"]:
            LOGGER.error("feasibility verdict %s disagrees with hull oracle %s", membership.verdict, oracle.verdict)
    return payload


@click.group("polytope")
def polytope_group() -> None:
    """Membership queries for rank-one and matroid-intersection polytopes."""


@polytope_group.command("rank1")
@click.argument("family_path", type=click.Path(dir_okay=False))
@click.option("--p", "p_text", required=True, help="Comma-separated exponents, e.g. 2/3,2/3,2/3.")
@click.pass_context
@handle_errors
def rank1_command(ctx: click.Context, family_path: str, p_text: str) -> None:
    """Is p in the BL polytope of the maps x -> <v_j, x>?"""

    services = services_from_context(ctx)
    config = services.config
    family = load_family(family_path)
    p = parse_exponents(p_text)

    membership = services.polytopes.rank1_membership(family, p)
    oracle = services.polytopes.rank1_hull_membership(family, p) if config.oracle else None
    emit(membership_payload(membership, oracle), config)
    finish(membership.verdict)


@polytope_group.command("matroid")
@click.argument("v_path", type=click.Path(dir_okay=False))
@click.argument("w_path", type=click.Path(dir_okay=False))
@click.option("--p", "p_text", default=None, help="Comma-separated exponents; defaults to n/m each.")
@click.pass_context
@handle_errors
def matroid_command(ctx: click.Context, v_path: str, w_path: str, p_text: Optional[str]) -> None:
    """Is p in the common-basis polytope of the vector matroids of v and w?"""

    services = services_from_context(ctx)
    config = services.config
    v, w = load_family(v_path), load_family(w_path)
    p = parse_exponents(p_text) if p_text else [Fraction(v.dim, v.m)] * v.m

    membership = services.polytopes.matroid_membership(v, w, p)
    oracle = services.polytopes.matroid_hull_membership(v, w, p) if config.oracle else None
    emit(membership_payload(membership, oracle), config)
    finish(membership.verdict)


__all__ = ["matroid_command", "membership_payload", "polytope_group", "rank1_command"]
