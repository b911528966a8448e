"""
Weyl-orbit bookkeeping and the orbit extension of the highest Q-functions.

Every fundamental node carries an orbit-normalized representation: the basis
vector at an orbit weight sigma(omega_a) equals s_sigma applied to the
highest-weight vector, with s_sigma = exp(e) exp(-f) exp(e) products along
the lexicographically minimal word. For any other reduced word the product
differs by a sign, tracked letter by letter.

The extension walks the Weyl group breadth first by left multiplication. An
element tau with a descent a (tau = sigma s_a, sigma shorter) yields the
relation

    W(Q_{a, sigma omega_a}, Q_{a, tau omega_a})
        = eps * J_a * prod_{b ~ a} Q_{b, tau omega_b}

whose only new unknown is the lower function, found by a first-order solve.
For the A series the last node also carries the determinant Q_{r+1}, whose
orbit component is W(Q_1, ..., Q_{r+1}) times the product of the base signs.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from qflag.errors import (
    GenericityFailure,
    InvalidAlgebraError,
    NoPolynomialSolution,
    OrbitReconstructionError,
    SingularLinearSystem,
)
from qflag.lie_core import CartanData, Series, Weight, fundamental_weight, orthogonal_convert
from qflag.rep_clifford import (
    MatrixRep,
    apply_simple_reflection,
    defining_rep_A,
    exterior_power,
    normalize_orbit_basis,
    spinor_reps_D,
    vector_rep_D,
    wedge_subsets,
)
from qflag.spectral import QQSolveOptions, TwistedPoly, solve_first_order_qq

logger = logging.getLogger(__name__)


# --- Node orbits ---
@dataclass(frozen=True, eq=False)
class NodeOrbit:
    """
    Orbit data of one fundamental node.

    Components of a wedge node are Wronskians of the base functions at the
    listed positions; spinor nodes read the base functions directly. In both
    cases orbit component = signs * standard component.
    """

    node: int
    rep: MatrixRep = field(repr=False)
    base: str
    subsets: Optional[List[Tuple[int, ...]]] = field(default=None, repr=False)
    signs: np.ndarray = field(default=None, repr=False)
    letter_signs: Dict[Tuple[int, Weight], int] = field(default_factory=dict, repr=False)
    twist: Dict[Weight, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def top(self) -> Weight:
        return self.rep.highest_weight

    @property
    def weights(self) -> List[Weight]:
        return list(self.twist)

    def index(self, weight: Weight) -> int:
        return self.rep.index_of(weight)


def twist_weights(cartan: CartanData, weight: Weight, level: int = 0) -> np.ndarray:
    """
    Twist weights of a component: epsilon coordinates of its weight.

    For the A series the epsilon lift is fixed by requiring the coordinates
    to sum to the level (the number of boxes of the fundamental node).
    """
    if cartan.spec.series is Series.D:
        return np.array([float(x) for x in orthogonal_convert(cartan, weight)])
    if cartan.spec.series is not Series.A:
        raise InvalidAlgebraError("twist weights are tabulated for the A and D series")
    r = cartan.rank
    coords = [sum(weight[i:]) for i in range(r)] + [0]
    shift = Fraction(level - sum(coords), r + 1)
    return np.array([float(c + shift) for c in coords])


def _letter_signs(rep: MatrixRep, orbit: List[Weight]) -> Dict[Tuple[int, Weight], int]:
    out = {}
    cartan = rep.cartan
    for mu in orbit:
        i = rep.index_of(mu)
        unit = np.zeros(rep.dim, dtype=np.int64)
        unit[i] = 1
        for c in range(1, cartan.rank + 1):
            image = apply_simple_reflection(rep, c, unit)
            j = rep.index_of(cartan.reflect(mu, c - 1))
            nz = np.flatnonzero(image)
            if len(nz) != 1 or nz[0] != j or abs(image[j]) != 1:
                raise OrbitReconstructionError(f"{rep.name}: s_{c} does not permute orbit vectors at {mu}")
            out[(c, mu)] = int(image[j])
    return out


def _wedge_node(cartan: CartanData, node: int, base_rep: MatrixRep, base: str, k: int, level: int) -> NodeOrbit:
    raw = exterior_power(base_rep, k)
    rep = normalize_orbit_basis(raw)
    subsets = wedge_subsets(base_rep.dim, k)
    base_signs = base_rep.orbit_signs
    signs = np.array(
        [rep.orbit_signs[n] * int(np.prod(base_signs[list(s)])) for n, s in enumerate(subsets)],
        dtype=np.int64,
    )
    orbit = cartan.orbit(fundamental_weight(cartan, node))
    return NodeOrbit(
        node=node,
        rep=rep,
        base=base,
        subsets=subsets,
        signs=signs,
        letter_signs=_letter_signs(rep, orbit),
        twist={mu: twist_weights(cartan, mu, level) for mu in orbit},
    )


def node_orbits(cartan: CartanData) -> Dict[int, NodeOrbit]:
    """Orbit data for every node of an A or D series algebra."""
    series, r = cartan.spec.series, cartan.rank
    out: Dict[int, NodeOrbit] = {}
    if series is Series.A:
        base = normalize_orbit_basis(defining_rep_A(cartan))
        for a in range(1, r + 1):
            out[a] = _wedge_node(cartan, a, base, "singles", a, a)
        return out
    if series is not Series.D:
        raise InvalidAlgebraError(f"{cartan.spec.label}: matrix-level orbits are built for A and D only")
    base = normalize_orbit_basis(vector_rep_D(cartan))
    for a in range(1, r - 1):
        out[a] = _wedge_node(cartan, a, base, "vector", a, 0)
    for node, raw in zip((r - 1, r), spinor_reps_D(cartan)):
        rep = normalize_orbit_basis(raw)
        orbit = cartan.orbit(fundamental_weight(cartan, node))
        out[node] = NodeOrbit(
            node=node,
            rep=rep,
            base=raw.name,
            signs=rep.orbit_signs.copy(),
            letter_signs=_letter_signs(rep, orbit),
            twist={mu: twist_weights(cartan, mu) for mu in orbit},
        )
    return out


# --- Relation walk ---
@dataclass(frozen=True)
class OrbitRelation:
    """W(Q_{node, upper}, Q_{node, lower}) = sign * J_node * prod Q_{b, w} (* top)."""

    node: int
    upper: Weight
    lower: Weight
    neighbours: Tuple[Tuple[int, Weight], ...]
    sign: int
    with_top: bool = False

    @property
    def key(self) -> Tuple:
        return (self.node, self.upper, self.lower, self.neighbours)


@dataclass(frozen=True)
class _Element:
    rho: Weight
    omegas: Tuple[Weight, ...]
    signs: Tuple[int, ...]


def determinant_sign(orbits: Dict[int, NodeOrbit]) -> int:
    """
    Orbit component of the A-series determinant relative to W(Q_1, ..., Q_{r+1}).

    The wedge of all orbit-normalized basis vectors is the product of the base
    signs times the standard wedge, and no Weyl reflection changes it.
    """
    return int(np.prod(orbits[1].signs))


def _height_weights(cartan: CartanData) -> np.ndarray:
    """(omega_b, rho) for every node, so a root's height is labels @ this."""
    return np.array([float(sum(row)) for row in cartan.cartan_inverse])


def walk_relations(
    cartan: CartanData, orbits: Dict[int, NodeOrbit], reverse: bool = False
) -> Iterator[OrbitRelation]:
    """
    Yield every distinct orbit QQ-relation, in breadth-first order of the
    Weyl element that produces it. reverse flips the letter order.
    """
    r = cartan.rank
    letters = list(range(r, 0, -1)) if reverse else list(range(1, r + 1))
    heights = _height_weights(cartan)
    top_node = r if cartan.spec.series is Series.A else None
    top_sign = determinant_sign(orbits) if top_node else 1
    start = _Element(
        rho=cartan.weyl_vector,
        omegas=tuple(fundamental_weight(cartan, a) for a in range(1, r + 1)),
        signs=(1,) * r,
    )
    visited: Dict[Weight, _Element] = {start.rho: start}
    layer = [start]
    seen = set()
    while layer:
        nxt: List[_Element] = []
        for elem in layer:
            for c in letters:
                if elem.rho[c - 1] <= 0:
                    continue
                rho = cartan.reflect(elem.rho, c - 1)
                if rho in visited:
                    continue
                child = _Element(
                    rho=rho,
                    omegas=tuple(cartan.reflect(w, c - 1) for w in elem.omegas),
                    signs=tuple(
                        s * orbits[b + 1].letter_signs[(c, elem.omegas[b])] for b, s in enumerate(elem.signs)
                    ),
                )
                visited[rho] = child
                nxt.append(child)
        for tau in nxt:
            for a in letters:
                labels = np.array([sum(cartan.cartan[a - 1, b] * tau.omegas[b][k] for b in range(r)) for k in range(r)])
                if labels @ heights > 0:
                    continue
                sigma = visited[tuple(int(x) for x in np.asarray(tau.rho) - labels)]
                neighbours = tuple((b + 1, tau.omegas[b]) for b in cartan.neighbours[a - 1])
                sign = sigma.signs[a - 1] * tau.signs[a - 1]
                for b, _ in neighbours:
                    sign *= tau.signs[b - 1]
                if a == top_node:
                    sign *= top_sign
                relation = OrbitRelation(
                    node=a,
                    upper=sigma.omegas[a - 1],
                    lower=tau.omegas[a - 1],
                    neighbours=neighbours,
                    sign=sign,
                    with_top=a == top_node,
                )
                if relation.key in seen:
                    continue
                seen.add(relation.key)
                yield relation
        layer = nxt


# --- Extension ---
OrbitFunctions = Dict[int, Dict[Weight, TwistedPoly]]


def weyl_orbit_extend(
    cartan: CartanData,
    seeds: Dict[int, TwistedPoly],
    sources: Optional[Dict[int, TwistedPoly]] = None,
    top: Optional[TwistedPoly] = None,
    reverse: bool = False,
    opts: Optional[QQSolveOptions] = None,
    orbits: Optional[Dict[int, NodeOrbit]] = None,
) -> OrbitFunctions:
    """
    Reconstruct every orbit Q-function from the highest one of each node.

    sources default to 1; top is the A-series product over all r+1 boxes,
    which appears on the right-hand side at node r (default 1).
    """
    orbits = orbits or node_orbits(cartan)
    sources = sources or {}
    known: OrbitFunctions = {}
    for a, nodal in orbits.items():
        if a not in seeds:
            raise GenericityFailure(f"missing seed Q-function for node {a}")
        seed = seeds[a]
        if not np.allclose(seed.weights, nodal.twist[nodal.top]):
            raise GenericityFailure(f"seed of node {a} carries twist weights {seed.weights}, expected {nodal.twist[nodal.top]}")
        known[a] = {nodal.top: seed}
    total = sum(len(o.twist) for o in orbits.values())
    count = len(orbits)
    params = next(iter(seeds.values())).params
    if top is None and cartan.spec.series is Series.A:
        top = TwistedPoly.constant(1.0, params, weights=np.ones(cartan.rank + 1))
    for relation in walk_relations(cartan, orbits, reverse=reverse):
        if count == total:
            break
        a = relation.node
        if relation.lower in known[a]:
            continue
        rhs = _right_hand_side(relation, known, sources, top)
        try:
            solved = solve_first_order_qq(
                known[a][relation.upper], rhs, opts, x_weights=orbits[a].twist[relation.lower]
            )
        except SingularLinearSystem as e:
            raise GenericityFailure(f"node {a} at weight {relation.lower}: {e}") from e
        except NoPolynomialSolution:
            logger.debug("node %d: no polynomial solution at weight %s", a, relation.lower)
            raise
        known[a][relation.lower] = solved
        count += 1
    if count != total:
        raise OrbitReconstructionError(f"orbit walk ended with {count} of {total} functions")
    logger.info("%s: orbit extension produced %d Q-functions", cartan.spec.label, total)
    return known


def _right_hand_side(relation: OrbitRelation, known: OrbitFunctions, sources, top) -> TwistedPoly:
    factors = [known[b][w] for b, w in relation.neighbours]
    if relation.with_top:
        factors.append(top)
    source = sources.get(relation.node)
    if source is not None:
        factors.append(source)
    if not factors:
        raise GenericityFailure(f"node {relation.node} has an empty right-hand side")
    out = factors[0]
    for f in factors[1:]:
        out = out * f
    return out.scale(relation.sign)


def path_difference(first: OrbitFunctions, second: OrbitFunctions) -> float:
    """Largest relative coefficient difference between two extensions of the same seeds."""
    worst = 0.0
    for a, functions in first.items():
        for mu, f in functions.items():
            g = second[a][mu]
            n = max(len(f.coeffs), len(g.coeffs))
            cf = np.pad(f.coeffs, (0, n - len(f.coeffs)))
            cg = np.pad(g.coeffs, (0, n - len(g.coeffs)))
            worst = max(worst, float(np.abs(cf - cg).max() / (1 + np.abs(cf).max())))
    return worst


def character_seeds(cartan: CartanData, params, orbits: Optional[Dict[int, NodeOrbit]] = None) -> Dict[int, TwistedPoly]:
    """Constant highest Q-functions: the zero-magnon seeds."""
    orbits = orbits or node_orbits(cartan)
    return {a: TwistedPoly.constant(1.0, params, weights=o.twist[o.top]) for a, o in orbits.items()}


