"""Candidate subspaces for infeasibility witnesses.

Nothing here decides a verdict: every candidate is an exact basis that the
caller still has to verify against the dimension inequality.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterator, List, Tuple

from ..models.datum import BLDatum, BLScalingTrace
from ..models.matrices import RationalMat
from .matrixkit import (
    exact_column_basis,
    exact_kernel_basis,
    exact_rank,
    rationalize_subspace,
    subspace_intersection,
    subspace_sum,
    sym_eig,
)

LOGGER = logging.getLogger(__name__)

SubspaceKey = Tuple[Tuple, ...]


def _key(basis: RationalMat) -> SubspaceKey:
    return basis.entries


def structural_candidates(datum: BLDatum) -> Iterator[RationalMat]:
    """Common kernel of all maps, the whole space, and each map's kernel."""

    exact = _require_exact(datum)
    n = datum.n
    common = exact_kernel_basis(RationalMat.vstack(exact))
    if common.cols:
        yield exact_column_basis(common)
    if any(exact_rank(matrix) < matrix.rows for matrix in exact):
        yield RationalMat.identity(n)
    for matrix in exact:
        kernel = exact_kernel_basis(matrix)
        if 0 < kernel.cols < n:
            yield exact_column_basis(kernel)


def spectral_candidates(trace: BLScalingTrace, max_denominator: int) -> Iterator[RationalMat]:
    """Spans of the low eigenvectors of the isotropy matrix at the final scaling state.

    Eigenvectors are taken in ascending eigenvalue order as prefixes of size
    ``1..n-1``, pulled back to the input coordinates through the accumulated
    right factor and rounded to small denominators.
    """

    final = trace.final_datum
    n = final.n
    isotropy = sum(
        weight * matrix.T @ matrix for weight, matrix in zip(final.weights, final.maps)
    )
    eig = sym_eig(isotropy)
    for size in range(1, n):
        pulled_back = trace.right_factor @ eig.eigenvectors[:, :size]
        candidate = rationalize_subspace(pulled_back, max_denominator)
        if candidate is not None:
            LOGGER.debug("spectral candidate of dimension %d", size)
            yield exact_column_basis(candidate)


def lattice_candidates(datum: BLDatum, limit: int) -> Iterator[RationalMat]:
    """Subspaces generated by map kernels and row kernels under intersection and sum.

    Generation stops after ``limit`` distinct subspaces; the zero space and the
    whole space are never produced.
    """

    exact = _require_exact(datum)
    n = datum.n
    generators: List[RationalMat] = []
    for matrix in exact:
        generators.append(exact_kernel_basis(matrix))
        for row in matrix.entries:
            generators.append(exact_kernel_basis(RationalMat.from_rows([row], cols=n)))

    seen: Dict[SubspaceKey, RationalMat] = {}
    queue: List[RationalMat] = []
    for basis in generators:
        if 0 < basis.cols < n:
            canonical = exact_column_basis(basis)
            if _key(canonical) not in seen:
                seen[_key(canonical)] = canonical
                queue.append(canonical)

    position = 0
    while position < len(queue):
        current = queue[position]
        position += 1
        yield current
        if len(seen) >= limit:
            continue
        for other in list(seen.values()):
            for combined in (subspace_intersection(current, other), subspace_sum(current, other)):
                if 0 < combined.cols < n and _key(combined) not in seen:
                    seen[_key(combined)] = combined
                    queue.append(combined)
                    if len(seen) >= limit:
                        break
            if len(seen) >= limit:
                break
    if len(seen) >= limit:
        LOGGER.info("subspace lattice truncated at %d elements", limit)


def _require_exact(datum: BLDatum) -> Tuple[RationalMat, ...]:
    if datum.exact is None:
        raise ValueError("witness search needs a datum with exact maps")
    return datum.exact


__all__ = ["lattice_candidates", "spectral_candidates", "structural_candidates"]
