"""
Extended Q-systems for the A and D series: Q-vectors, assembly from single-box
functions or from orbit extensions, Hodge duals, the so(6) dictionary and the
normalization of relation constants.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from qflag.errors import (
    InconsistentConstants,
    InvalidAlgebraError,
    NormalizationError,
    OrbitReconstructionError,
    SchemaError,
)
from qflag.lie_core import AlgebraSpec, CartanData, Series, Weight, build_cartan, parse_algebra
from qflag.qsystem.evaluator import Evaluator, identity_relation
from qflag.qsystem.orbit import NodeOrbit, OrbitFunctions, node_orbits, weyl_orbit_extend
from qflag.rep_clifford import GammaSet, _permutation_sign, gamma_set, intertwiner
from qflag.schemas import SystemModel, complex_pair, from_pair
from qflag.spectral import QQSolveOptions, TwistedPoly, TwistParams, wronskian

logger = logging.getLogger(__name__)


# --- Q-vectors ---
@dataclass(frozen=True, eq=False)
class QVector:
    """Orbit-normalized components of one fundamental node, keyed by basis index."""

    node: int
    orbit: NodeOrbit = field(repr=False)
    components: Dict[int, TwistedPoly] = field(repr=False)

    @property
    def rep(self):
        return self.orbit.rep

    def at(self, weight: Weight) -> TwistedPoly:
        return self.components[self.orbit.index(weight)]


# --- Systems ---
@dataclass(eq=False)
class ExtendedQSystem:
    """
    A Q-system stored through its standard base functions.

    A series: base["singles"] = Q_1..Q_{r+1}; every Q_A is a Wronskian.
    D series: base["vector"] = V_i in the order 1..r, -r..-1, base["psi"] and
    base["eta"] = chiral spinor components by ket index; V_I are Wronskians.
    """

    cartan: CartanData
    params: TwistParams
    base: Dict[str, List[TwistedPoly]]
    orbits: Dict[int, NodeOrbit] = field(repr=False)
    sources: Dict[int, TwistedPoly] = field(default_factory=dict)
    top: Optional[TwistedPoly] = None
    constants: Dict[str, complex] = field(default_factory=dict)
    _cache: Dict[Tuple[int, int], TwistedPoly] = field(default_factory=dict, repr=False)

    @property
    def spec(self) -> AlgebraSpec:
        return self.cartan.spec

    @property
    def series(self) -> Series:
        return self.cartan.spec.series

    @property
    def rank(self) -> int:
        return self.cartan.rank

    @property
    def gammas(self) -> GammaSet:
        if self.series is not Series.D:
            raise InvalidAlgebraError("gamma matrices belong to D-series systems")
        if "gammas" not in self.__dict__:
            self.__dict__["gammas"] = gamma_set(self.rank)
        return self.__dict__["gammas"]

    def standard_component(self, node: int, index: int) -> TwistedPoly:
        orbit = self.orbits[node]
        key = (node, index)
        if key not in self._cache:
            functions = self.base[orbit.base]
            if orbit.subsets is None:
                value = functions[index]
            else:
                subset = orbit.subsets[index]
                value = wronskian([functions[p] for p in subset])
                divisor = self.wedge_divisor(len(subset))
                if divisor is not None:
                    value = value.divide(divisor)
            self._cache[key] = value
        return self._cache[key]

    def divisor_factors(self, k: int) -> List[Tuple[int, int]]:
        """
        (node, shift) pairs whose sources divide a k-fold Wronskian:
        G_k = prod_{a<k} prod_{j<k-a} J_a^{[k-a-1-2j]}, from G_{k+1} G_{k-1} = J_k G_k^+ G_k^-.
        """
        last = self.rank if self.series is Series.A else self.rank - 2
        return [
            (a, k - a - 1 - 2 * j)
            for a in range(1, min(k, last + 1))
            if a in self.sources
            for j in range(k - a)
        ]

    def wedge_divisor(self, k: int) -> Optional[TwistedPoly]:
        factors = self.divisor_factors(k)
        if not factors:
            return None
        out = self.sources[factors[0][0]].shift(factors[0][1])
        for a, n in factors[1:]:
            out = out * self.sources[a].shift(n)
        return out

    def orbit_function(self, node: int, weight: Weight) -> TwistedPoly:
        orbit = self.orbits[node]
        index = orbit.index(weight)
        return self.standard_component(node, index).scale(int(orbit.signs[index]))

    def qvector(self, node: int) -> QVector:
        orbit = self.orbits[node]
        return QVector(
            node=node,
            orbit=orbit,
            components={orbit.index(mu): self.orbit_function(node, mu) for mu in orbit.weights},
        )

    @property
    def nodes(self) -> Dict[int, QVector]:
        return {a: self.qvector(a) for a in self.orbits}

    def seeds(self) -> Dict[int, TwistedPoly]:
        return {a: self.orbit_function(a, o.top) for a, o in self.orbits.items()}

    def orbit_functions(self) -> OrbitFunctions:
        return {a: {mu: self.orbit_function(a, mu) for mu in o.weights} for a, o in self.orbits.items()}

    @property
    def sourced(self) -> bool:
        """True when a source or the A-series top is a non-constant polynomial."""
        polys = list(self.sources.values()) + ([self.top] if self.top is not None else [])
        return any(p.degree > 0 for p in polys)

    def rescaled(self, factors: Dict[str, complex]) -> "ExtendedQSystem":
        base = {name: [f.scale(factors.get(name, 1.0)) for f in fs] for name, fs in self.base.items()}
        return replace(self, base=base, constants=dict(self.constants), _cache={})

    # --- Serialization ---
    def to_model(self) -> SystemModel:
        return SystemModel(
            series=self.series.value,
            rank=self.rank,
            twist=[complex_pair(x) for x in self.params.values],
            twist_logs=[complex_pair(x) for x in self.params.logs],
            hbar=complex_pair(self.params.hbar),
            seeds=[self.seeds()[a].to_model() for a in sorted(self.orbits)],
            sources=[self.source(a).to_model() for a in sorted(self.orbits)] if self.sources else None,
            top=self.top.to_model() if self.top is not None else None,
            base={name: [f.to_model() for f in fs] for name, fs in self.base.items()},
        )

    def source(self, node: int) -> TwistedPoly:
        if node in self.sources:
            return self.sources[node]
        return TwistedPoly.constant(1.0, self.params)


def params_from_model(model: SystemModel) -> TwistParams:
    hbar = from_pair(model.hbar)
    if model.twist_logs is not None:
        return TwistParams(logs=np.array([from_pair(p) for p in model.twist_logs]), hbar=hbar)
    return TwistParams.from_values([from_pair(p) for p in model.twist], hbar)


def system_from_model(model: SystemModel, opts: Optional[QQSolveOptions] = None) -> ExtendedQSystem:
    """Rebuild a system from its JSON form, extending from the seeds when no base is stored."""
    cartan = build_cartan(parse_algebra(model.series, model.rank))
    params = params_from_model(model)
    orbits = node_orbits(cartan)
    if len(model.seeds) != cartan.rank:
        raise SchemaError(f"expected {cartan.rank} seeds, found {len(model.seeds)}")
    sources = {}
    if model.sources:
        sources = {a + 1: TwistedPoly.from_model(s, params) for a, s in enumerate(model.sources)}
    top = TwistedPoly.from_model(model.top, params) if model.top else None
    if model.base:
        base = {name: [TwistedPoly.from_model(f, params) for f in fs] for name, fs in model.base.items()}
        return ExtendedQSystem(cartan, params, base, orbits, sources=sources, top=top)
    seeds = {a + 1: TwistedPoly.from_model(s, params) for a, s in enumerate(model.seeds)}
    return extend_system(cartan, seeds, params, sources=sources, top=top, opts=opts, orbits=orbits)


# --- A series ---
def _default_top(params: TwistParams, r: int) -> TwistedPoly:
    return TwistedPoly.constant(1.0, params, weights=np.ones(r + 1))


def assemble_extended_A(
    cartan: CartanData, singles: Sequence[TwistedPoly], orbits: Optional[Dict[int, NodeOrbit]] = None
) -> ExtendedQSystem:
    """
    All Q_A as Wronskians of the single-box functions, normalized so that
    W(Q_1, ..., Q_{r+1}) = 1. A non-constant Wronskian is kept as the top
    function of a sourced system.
    """
    if cartan.spec.series is not Series.A:
        raise InvalidAlgebraError("assemble_extended_A needs an A-series algebra")
    r = cartan.rank
    singles = list(singles)
    if len(singles) != r + 1:
        raise SchemaError(f"A_{r} needs {r + 1} single-box functions, got {len(singles)}")
    params = singles[0].params
    full = wronskian(singles)
    if full.is_zero:
        raise NormalizationError("the Wronskian of the single-box functions vanishes identically")
    top = None
    if full.degree == 0:
        singles[-1] = singles[-1].scale(1 / full.coeffs[0])
        top = _default_top(params, r)
    else:
        logger.warning("A_%d: Wronskian has degree %d; keeping it as the top function", r, full.degree)
        top = full
    orbits = orbits or node_orbits(cartan)
    return ExtendedQSystem(cartan, params, {"singles": singles}, orbits, top=top)


def q_function(system: ExtendedQSystem, subset: Sequence[int]) -> TwistedPoly:
    """Q_A for a multi-index of 1-based labels, antisymmetric in its entries."""
    subset = list(subset)
    if not subset:
        return TwistedPoly.constant(1.0, system.params)
    if len(set(subset)) != len(subset):
        weights = np.eye(system.rank + 1)[[a - 1 for a in subset]].sum(axis=0)
        return TwistedPoly(weights, np.zeros(1), system.params)
    order = sorted(range(len(subset)), key=lambda t: subset[t])
    sign = _permutation_sign(order)
    singles = system.base["singles"]
    return wronskian([singles[subset[t] - 1] for t in order]).scale(sign)


def hodge_dual_A(system: ExtendedQSystem, subset: Sequence[int]) -> TwistedPoly:
    """Q^A = sign(A, complement) Q_{complement}, complement in increasing order."""
    if system.series is not Series.A:
        raise InvalidAlgebraError("Hodge duals are defined for A-series systems")
    subset = list(subset)
    labels = range(1, system.rank + 2)
    rest = [a for a in labels if a not in subset]
    sign = _permutation_sign([a - 1 for a in subset + rest])
    return q_function(system, rest).scale(sign)


# --- Orbit assembly ---
_BASE_NODE = {"singles": 1, "vector": 1}


def _base_owner(cartan: CartanData, name: str) -> int:
    if name in _BASE_NODE:
        return _BASE_NODE[name]
    return cartan.rank - 1 if name == "psi" else cartan.rank


def assemble_from_orbits(
    cartan: CartanData,
    functions: OrbitFunctions,
    params: TwistParams,
    sources: Optional[Dict[int, TwistedPoly]] = None,
    top: Optional[TwistedPoly] = None,
    orbits: Optional[Dict[int, NodeOrbit]] = None,
    tol: float = 1e-8,
) -> ExtendedQSystem:
    """
    Read the base functions off the nodes whose orbit is the whole representation,
    then check every Wronskian node against its orbit functions.
    """
    orbits = orbits or node_orbits(cartan)
    names = sorted({o.base for o in orbits.values()})
    base: Dict[str, List[TwistedPoly]] = {}
    for name in names:
        owner = orbits[_base_owner(cartan, name)]
        dim = owner.rep.dim
        values: List[Optional[TwistedPoly]] = [None] * dim
        for mu, f in functions[owner.node].items():
            index = owner.index(mu)
            position = owner.subsets[index][0] if owner.subsets is not None else index
            values[position] = f.scale(int(owner.signs[index]))
        if any(v is None for v in values):
            raise OrbitReconstructionError(f"node {owner.node} orbit does not cover the {name} basis")
        base[name] = values
    system = ExtendedQSystem(cartan, params, base, orbits, sources=dict(sources or {}), top=top)
    for a, orbit in orbits.items():
        if orbit.subsets is None or len(orbit.subsets[0]) == 1:
            continue
        worst = 0.0
        for mu, f in functions[a].items():
            g = system.orbit_function(a, mu)
            n = max(len(f.coeffs), len(g.coeffs))
            cf, cg = np.pad(f.coeffs, (0, n - len(f.coeffs))), np.pad(g.coeffs, (0, n - len(g.coeffs)))
            worst = max(worst, float(np.abs(cf - cg).max() / (1 + np.abs(cf).max())))
        system.constants[f"wronskian.node{a}"] = worst
        if worst > tol:
            raise OrbitReconstructionError(f"node {a}: orbit functions differ from Wronskians by {worst:.2e}")
    return system


def assemble_extended_D(
    cartan: CartanData,
    functions: OrbitFunctions,
    params: TwistParams,
    sources: Optional[Dict[int, TwistedPoly]] = None,
    orbits: Optional[Dict[int, NodeOrbit]] = None,
) -> ExtendedQSystem:
    if cartan.spec.series is not Series.D:
        raise InvalidAlgebraError("assemble_extended_D needs a D-series algebra")
    return assemble_from_orbits(cartan, functions, params, sources=sources, orbits=orbits)


def extend_system(
    cartan: CartanData,
    seeds: Dict[int, TwistedPoly],
    params: TwistParams,
    sources: Optional[Dict[int, TwistedPoly]] = None,
    top: Optional[TwistedPoly] = None,
    opts: Optional[QQSolveOptions] = None,
    orbits: Optional[Dict[int, NodeOrbit]] = None,
) -> ExtendedQSystem:
    """Orbit extension followed by assembly, for either series."""
    orbits = orbits or node_orbits(cartan)
    if cartan.spec.series is Series.A and top is None:
        top = _default_top(params, cartan.rank)
    functions = weyl_orbit_extend(cartan, seeds, sources=sources, top=top, opts=opts, orbits=orbits)
    return assemble_from_orbits(cartan, functions, params, sources=sources, top=top, orbits=orbits)


# --- so(6) dictionary ---
# A_3 node -> D_3 node: defining -> psi, second wedge -> vector, third wedge -> eta
_SO6_NODES = {1: 2, 2: 1, 3: 3}


def _so6_maps(a_orbits: Dict[int, NodeOrbit], d_orbits: Dict[int, NodeOrbit]) -> Dict[int, np.ndarray]:
    """Signed permutation matrices taking A_3 orbit bases to D_3 orbit bases, node by node."""
    return {a: intertwiner(a_orbits[a].rep, d_orbits[b].rep, _SO6_NODES) for a, b in _SO6_NODES.items()}


def _image(m: np.ndarray, index: int) -> Tuple[int, int]:
    j = int(np.flatnonzero(m[:, index])[0])
    return j, int(m[j, index])


def so6_dictionary(system: ExtendedQSystem) -> ExtendedQSystem:
    """
    D_3 system from an A_3 system. The A_3 nodes 1, 2, 3 become psi, the
    vector and eta; orbit functions are carried by the intertwiners of the
    corresponding representations, so V_i are the two-box Q_ab up to sign.
    Sources follow their nodes, and a non-constant A_3 top joins the eta source.
    """
    if system.series is not Series.A or system.rank != 3:
        raise InvalidAlgebraError("the so(6) dictionary takes an A_3 system")
    if abs(np.sum(system.params.logs)) > 1e-12:
        raise SchemaError("the A_3 twist must have unit determinant for the so(6) dictionary")
    cartan = build_cartan(parse_algebra("D", 3))
    d_orbits = node_orbits(cartan)
    maps = _so6_maps(system.orbits, d_orbits)
    singles, psi = system.orbits[1], d_orbits[2]
    rows, targets = [], []
    for mu in singles.weights:
        j, _ = _image(maps[1], singles.index(mu))
        rows.append(psi.twist[psi.rep.weight(j)])
        targets.append(singles.twist[mu] @ system.params.logs)
    logs = np.linalg.lstsq(np.array(rows), np.array(targets), rcond=None)[0]
    params = TwistParams(logs=logs, hbar=system.params.hbar)
    functions: OrbitFunctions = {}
    for a, b in _SO6_NODES.items():
        source, target = system.orbits[a], d_orbits[b]
        functions[b] = {}
        for mu in source.weights:
            j, sign = _image(maps[a], source.index(mu))
            nu = target.rep.weight(j)
            if abs(target.twist[nu] @ logs - source.twist[mu] @ system.params.logs) > 1e-9:
                raise OrbitReconstructionError(f"node {a}: twist of weight {mu} does not match D_3 weight {nu}")
            f = system.orbit_function(a, mu)
            functions[b][nu] = TwistedPoly(target.twist[nu], f.coeffs, params).scale(sign)
    sources = {}
    for a, b in _SO6_NODES.items():
        j = system.sources.get(a)
        if a == 3 and system.top is not None and system.top.degree > 0:
            j = system.top if j is None else j * system.top
        if j is not None:
            sources[b] = TwistedPoly(np.zeros(3), j.coeffs, params)
    return assemble_from_orbits(cartan, functions, params, sources=sources, orbits=d_orbits)


def inverse_so6_dictionary(system: ExtendedQSystem) -> ExtendedQSystem:
    """Recover the A_3 single-box functions from psi."""
    if system.series is not Series.D or system.rank != 3:
        raise InvalidAlgebraError("the inverse so(6) dictionary takes a D_3 system")
    cartan = build_cartan(parse_algebra("A", 3))
    a_orbits = node_orbits(cartan)
    singles = a_orbits[1]
    m = _so6_maps(a_orbits, system.orbits)[1]
    psi = system.orbits[2]
    logs = np.zeros(4, dtype=complex)
    picks: List[Tuple[int, int, Weight]] = []
    for mu in singles.weights:
        i = singles.index(mu)
        j, sign = _image(m, i)
        nu = psi.rep.weight(j)
        position = singles.subsets[i][0]
        logs[position] = psi.twist[nu] @ system.params.logs
        # standard = signs * orbit, and the inverse of a signed permutation is its transpose
        picks.append((position, sign * int(singles.signs[i]), nu))
    params = TwistParams(logs=logs, hbar=system.params.hbar)
    base: List[Optional[TwistedPoly]] = [None] * 4
    for position, sign, nu in picks:
        f = system.orbit_function(2, nu)
        base[position] = TwistedPoly(np.eye(4)[position], f.coeffs, params).scale(sign)
    return assemble_extended_A(cartan, base, orbits=a_orbits)


# --- Normalization ---
def _scaling_exponents(system: ExtendedQSystem) -> Tuple[List[str], np.ndarray]:
    """Exponent of each free base rescaling in each node's orbit functions."""
    r = system.rank
    if system.series is Series.A:
        return [], np.zeros((r, 0))
    names = ["vector", "psi", "eta"]
    exponents = np.zeros((r, 3))
    for a in range(1, r - 1):
        exponents[a - 1, 0] = a
    exponents[r - 2, 1] = 1
    exponents[r - 1, 2] = 1
    return names, exponents


def relation_constants(system: ExtendedQSystem, points: np.ndarray) -> np.ndarray:
    """Fitted K_a in W(Q_top, Q_second) = K_a J_a prod Q_b at the highest components."""
    ev = Evaluator(system, points)
    out = []
    for a in sorted(system.orbits):
        lhs, rhs = identity_relation(ev, a)
        denom = np.vdot(rhs, rhs)
        if abs(denom) < 1e-300:
            raise NormalizationError(f"node {a}: right-hand side vanishes at the sample points")
        out.append(np.vdot(rhs, lhs) / denom)
    return np.array(out)


def normalize_system(system: ExtendedQSystem, points: np.ndarray, tol: float = 1e-8) -> ExtendedQSystem:
    """
    Absorb QQ constants into rescalings of the base functions by solving the
    log-linear system C E log c = -log K.
    """
    constants = relation_constants(system, points)
    names, exponents = _scaling_exponents(system)
    logs_k = np.log(constants.astype(complex))
    if not names:
        if np.max(np.abs(constants - 1)) > tol:
            raise InconsistentConstants(f"A-series QQ constants {np.round(constants, 6)} are not 1")
        return system
    matrix = system.cartan.cartan @ exponents
    solution, *_ = np.linalg.lstsq(matrix.astype(complex), -logs_k, rcond=None)
    leftover = np.exp(matrix @ solution + logs_k)
    if np.max(np.abs(leftover - 1)) > tol:
        raise InconsistentConstants(f"QQ constants {np.round(constants, 6)} cannot be absorbed")
    factors = dict(zip(names, np.exp(solution)))
    logger.info("normalized %s with factors %s", system.spec.label, {k: complex(np.round(v, 6)) for k, v in factors.items()})
    out = system.rescaled(factors)
    out.constants.update({f"qq.node{a}": complex(c) for a, c in zip(sorted(system.orbits), constants)})
    out.constants.update({f"scale.{k}": complex(v) for k, v in factors.items()})
    return out
