"""
Projection of a representation-space vector onto one isotypic component.

The quadratic Casimir separates most components; when two components share a
Casimir value the projector falls back to the span generated by lowering
operators from the highest-weight vectors of the target. Every representation
built in this package has f_a = e_a^T, so that span has an invariant
orthogonal complement and its orthogonal projector is the isotypic one.
"""

import logging
from typing import List, Sequence

import numpy as np
from scipy.linalg import null_space, orth

from qflag.errors import ProjectionError
from qflag.lie_core import weyl_dimension
from qflag.rep_clifford import MatrixRep, casimir, casimir_value

logger = logging.getLogger(__name__)


def _distinct(values: np.ndarray, tol: float = 1e-8) -> List[float]:
    out: List[float] = []
    for v in np.sort(values):
        if not out or v - out[-1] > tol:
            out.append(float(v))
    return out


def highest_weight_vectors(rep: MatrixRep, target: Sequence[int]) -> np.ndarray:
    """Columns spanning the vectors of weight target killed by every e_a."""
    space = np.flatnonzero((rep.weights == np.asarray(target)).all(axis=1))
    if len(space) == 0:
        return np.zeros((rep.dim, 0))
    stacked = np.vstack([e[:, space].astype(float) for e in rep.e])
    kernel = null_space(stacked)
    out = np.zeros((rep.dim, kernel.shape[1]))
    out[space, :] = kernel
    return out


def _lowering_span(rep: MatrixRep, seeds: np.ndarray) -> np.ndarray:
    basis = orth(seeds)
    frontier = basis
    while frontier.shape[1]:
        images = np.hstack([f.astype(float) @ frontier for f in rep.f])
        combined = orth(np.hstack([basis, images]))
        if combined.shape[1] == basis.shape[1]:
            break
        frontier = images
        basis = combined
    return basis


def isotypic_projector(rep: MatrixRep, target: Sequence[int]) -> np.ndarray:
    cartan = rep.cartan
    seeds = highest_weight_vectors(rep, target)
    if seeds.shape[1] == 0:
        raise ProjectionError(f"{tuple(target)} does not occur in {rep.name}")
    if seeds.shape[1] > 1:
        raise ProjectionError(f"{tuple(target)} occurs {seeds.shape[1]} times in {rep.name}")
    c2 = casimir(rep)
    wanted = casimir_value(cartan, target)
    projector = np.eye(rep.dim)
    for value in _distinct(np.linalg.eigvalsh((c2 + c2.T) / 2)):
        if abs(value - wanted) > 1e-8:
            projector = projector @ (c2 - value * np.eye(rep.dim)) / (wanted - value)
    rank = int(round(np.trace(projector).real))
    if rank == weyl_dimension(cartan, target):
        return projector
    logger.debug("%s: Casimir value %.3f is shared; using the lowering span", rep.name, wanted)
    span = _lowering_span(rep, seeds)
    return span @ span.T


def irrep_project(rep: MatrixRep, vector: np.ndarray, target: Sequence[int]) -> np.ndarray:
    """Component of vector (leading axes broadcast) in the target isotypic component."""
    return np.asarray(vector) @ isotypic_projector(rep, target).T
