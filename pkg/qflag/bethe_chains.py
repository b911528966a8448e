"""
Rational spin chains: source polynomials, Bethe equations, solution census
and the transfer-matrix oracle for so(2r) vector chains.

A chain solution is a set of Bethe roots per node whose highest Q-functions
extend to a full polynomial Q-system with the chain's sources. Counting
such solutions per magnon sector is compared with weight multiplicities of
the tensor product of site representations.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares, linear_sum_assignment

from qflag.aseries import BETHE_TOL
from qflag.characters import t_from_q
from qflag.config import Settings
from qflag.errors import NoPolynomialSolution, QFlagError, SchemaError
from qflag.lie_core import CartanData, Series, Weight, build_cartan, multiset_distance, parse_algebra, weight_system_of
from qflag.qsystem import Evaluator, ExtendedQSystem, extend_system, node_orbits
from qflag.rep_clifford import vector_metric
from qflag.schemas import ChainSpecModel, RelationReport, complex_pair, from_pair, stopwatch
from qflag.spectral import QQSolveOptions, TwistedPoly, TwistParams, qq_obstruction, sample_points

logger = logging.getLogger(__name__)

MAX_MAGNONS = 4
MAX_SITES = 3
YBE_TOL = 1e-10


# --- Chain specification ---
@dataclass
class ChainSpec:
    """A rational chain: algebra, per-site Dynkin labels, inhomogeneities and twist."""

    cartan: CartanData
    sites: List[Weight]
    thetas: np.ndarray
    params: TwistParams
    seed: int = 0

    @property
    def L(self) -> int:
        return len(self.sites)

    @property
    def rank(self) -> int:
        return self.cartan.rank

    @property
    def total_labels(self) -> np.ndarray:
        return np.sum(np.array(self.sites, dtype=int), axis=0)

    @classmethod
    def from_model(cls, model: ChainSpecModel) -> "ChainSpec":
        cartan = build_cartan(parse_algebra(model.series, model.rank))
        if cartan.spec.series not in (Series.A, Series.D):
            raise SchemaError(f"{cartan.spec.label}: chains are assembled for the A and D series")
        expected = model.rank + 1 if cartan.spec.series is Series.A else model.rank
        if len(model.twist) != expected:
            raise SchemaError(f"{cartan.spec.label} chain needs {expected} twist values, got {len(model.twist)}")
        params = TwistParams.from_values([from_pair(x) for x in model.twist], from_pair(model.hbar))
        return cls(
            cartan=cartan,
            sites=[tuple(labels) for labels in model.site_labels],
            thetas=np.array([from_pair(t) for t in model.thetas]),
            params=params,
            seed=model.seed,
        )

    def to_model(self) -> ChainSpecModel:
        return ChainSpecModel(
            series=self.cartan.spec.series.value,
            rank=self.rank,
            L=self.L,
            site_labels=[list(s) for s in self.sites],
            thetas=[complex_pair(t) for t in self.thetas],
            twist=[complex_pair(x) for x in self.params.values],
            hbar=complex_pair(self.params.hbar),
            seed=self.seed,
        )


@dataclass
class BetheState:
    """Magnon numbers and Bethe roots per node (1-based)."""

    magnons: Tuple[int, ...]
    roots: Dict[int, np.ndarray] = field(default_factory=dict)

    def q(self, node: int) -> np.ndarray:
        return self.roots.get(node, np.array([], dtype=complex))

    def distance(self, other: "BetheState") -> float:
        if self.magnons != other.magnons:
            return float("inf")
        return max((multiset_distance(self.q(a), other.q(a)) for a in self.roots), default=0.0)


@dataclass
class ChainSolution:
    state: BetheState
    system: ExtendedQSystem = field(repr=False)


# --- Sources ---
def source_polynomials(chain: ChainSpec) -> Dict[int, TwistedPoly]:
    """J_a = prod_l prod_{k=-(m-1)/2}^{(m-1)/2} (u - theta_l + k hbar), m = m_a^l; J_a = 1 for unlabeled nodes."""
    hbar = chain.params.hbar
    out = {}
    for a in range(1, chain.rank + 1):
        zeros = []
        for labels, theta in zip(chain.sites, chain.thetas):
            m = labels[a - 1]
            zeros.extend(theta - k * hbar for k in np.arange(-(m - 1) / 2, (m - 1) / 2 + 0.5))
        out[a] = TwistedPoly.from_roots(zeros, chain.params)
    return out


def _active_sources(chain: ChainSpec) -> Dict[int, TwistedPoly]:
    return {a: j for a, j in source_polynomials(chain).items() if j.degree > 0}


# --- Bethe equations ---
def _root_twist(chain: ChainSpec, orbits, a: int) -> complex:
    """exp of (2 w_a - sum_{b~a} w_b) . logs, w_b the twist weights of the highest Q-functions."""
    cartan = chain.cartan
    weights = 2 * orbits[a].twist[orbits[a].top]
    for b in cartan.neighbours[a - 1]:
        weights = weights - orbits[b + 1].twist[orbits[b + 1].top]
    if cartan.spec.series is Series.A and a == cartan.rank:
        weights = weights - np.ones(cartan.rank + 1)
    return complex(np.exp(weights @ chain.params.logs))


def _poly_at(zeros: np.ndarray, u: complex) -> complex:
    return complex(np.prod(u - zeros)) if len(zeros) else 1.0 + 0j


def _bethe_sides(chain: ChainSpec, state: BetheState, orbits, sources) -> List[Tuple[int, complex, complex, complex]]:
    """(node, root, plus side, minus side) with plus + minus = 0 at a solution."""
    hbar = chain.params.hbar
    out = []
    for a in range(1, chain.rank + 1):
        twist = _root_twist(chain, orbits, a)
        own = state.q(a)
        source = sources.get(a)
        for u in own:
            up, down = u + hbar / 2, u - hbar / 2
            first = twist * _poly_at(own, u + hbar)
            second = _poly_at(own, u - hbar)
            if source is not None:
                first *= source(down)
                second *= source(up)
            for b in chain.cartan.neighbours[a - 1]:
                first *= _poly_at(state.q(b + 1), down)
                second *= _poly_at(state.q(b + 1), up)
            out.append((a, u, first, second))
    return out


def _nearest(zeros: np.ndarray, u: complex) -> float:
    return float(np.min(np.abs(u - np.asarray(zeros)))) if len(zeros) else float("inf")


def _stacked(chain: ChainSpec, state: BetheState, sources, a: int, u: complex, tol: float) -> bool:
    """True when both sides of the Bethe equation at u vanish through an exact string or stack."""
    hbar = chain.params.hbar
    source = sources.get(a)
    source_zeros = source.polynomial_roots() if source is not None else np.zeros(0)
    neighbours = [state.q(b + 1) for b in chain.cartan.neighbours[a - 1]]

    def vanishes(sign: int) -> bool:
        gaps = [_nearest(state.q(a), u + sign * hbar), _nearest(source_zeros, u - sign * hbar / 2)]
        gaps += [_nearest(q, u - sign * hbar / 2) for q in neighbours]
        return min(gaps) < tol * (1 + abs(u))

    return vanishes(1) and vanishes(-1)


def bethe_residual(chain: ChainSpec, state: BetheState, settings: Optional[Settings] = None) -> RelationReport:
    """
    |ratio + 1| at every root; roots at which both sides vanish are recorded
    as stacked and left to the polynomial extension. Colliding roots are
    flagged in the details.
    """
    settings = settings or Settings()
    orbits = node_orbits(chain.cartan)
    sources = _active_sources(chain)
    collisions, stacked = [], []
    with stopwatch() as elapsed:
        residuals = []
        for a, u, first, second in _bethe_sides(chain, state, orbits, sources):
            if _stacked(chain, state, sources, a, u, 1e-6):
                stacked.append([a, complex_pair(u)])
                continue
            scale = max(abs(first), abs(second))
            residuals.append(abs(first + second) / scale if scale > 0 else float("inf"))
        for a, zeros in state.roots.items():
            for i in range(len(zeros)):
                for j in range(i + 1, len(zeros)):
                    if abs(zeros[i] - zeros[j]) < settings.dedup_tol:
                        collisions.append([a, i, j])
    return RelationReport.from_residuals(
        "bethe",
        "e^{alpha_a . log x} q_a^{[2]} J_a^- prod q_b^- / (q_a^{[-2]} J_a^+ prod q_b^+) = -1 at every root",
        residuals,
        max(settings.tol_relation, BETHE_TOL),
        elapsed[0],
        {"magnons": list(state.magnons), "collisions": collisions, "stacked": stacked},
    )


# --- Solving ---
def _system_from_state(chain: ChainSpec, state: BetheState, orbits, sources, opts: QQSolveOptions) -> ExtendedQSystem:
    seeds = {
        a: TwistedPoly.from_roots(list(state.q(a)), chain.params, weights=orbits[a].twist[orbits[a].top])
        for a in orbits
    }
    return extend_system(chain.cartan, seeds, chain.params, sources=sources, opts=opts, orbits=orbits)


def _split(x: np.ndarray, magnons: Sequence[int]) -> Dict[int, np.ndarray]:
    z = x[: len(x) // 2] + 1j * x[len(x) // 2 :]
    out, start = {}, 0
    for a, m in enumerate(magnons, start=1):
        out[a] = z[start : start + m]
        start += m
    return out


def _pack(roots: Dict[int, np.ndarray], magnons: Sequence[int]) -> np.ndarray:
    z = np.concatenate([np.asarray(roots.get(a, []), dtype=complex)[:m] for a, m in enumerate(magnons, start=1)])
    return np.concatenate([z.real, z.imag])


def _highest_obstruction(chain: ChainSpec, roots: Dict[int, np.ndarray], orbits, sources) -> np.ndarray:
    """
    Obstructions to W(Q_{a,top}, X) = J_a prod_b Q_{b,top} over polynomial X,
    stacked over nodes; zero exactly at solutions, including stacked roots
    where the ratio form of the Bethe equations is 0/0.
    """
    cartan, params = chain.cartan, chain.params
    out = []
    for a in range(1, chain.rank + 1):
        own = roots.get(a, ())
        if len(own) == 0:
            continue
        top = orbits[a].top
        upper = TwistedPoly.from_roots(list(own), params, weights=orbits[a].twist[top])
        rhs = sources.get(a, TwistedPoly.constant(1.0, params))
        for b in cartan.neighbours[a - 1]:
            rhs = rhs * TwistedPoly.from_roots(list(roots.get(b + 1, ())), params)
        lower = orbits[a].twist[cartan.reflect(top, a - 1)]
        out.append(qq_obstruction(upper, rhs, lower))
    z = np.concatenate(out) if out else np.zeros(0, dtype=complex)
    return np.concatenate([z.real, z.imag])


def _starts(
    chain: ChainSpec,
    magnons: Tuple[int, ...],
    rng: np.random.Generator,
    restarts: int,
    anchors: Sequence[BetheState],
) -> Iterator[np.ndarray]:
    """
    Starting points: Gaussian clouds of several widths around the mean
    inhomogeneity, alternating with lower-sector solutions completed by
    fresh roots.
    """
    center = complex(np.mean(chain.thetas))
    base = (1 + chain.L) * abs(chain.params.hbar)
    widths = (1.0, 0.5, 2.0, 4.0)
    for k in range(restarts):
        spread = base * widths[k % len(widths)]
        if anchors and k % 2:
            anchor = anchors[(k // 2) % len(anchors)]
            roots = {}
            for a, m in enumerate(magnons, start=1):
                kept = anchor.q(a)[:m]
                extra = m - len(kept)
                fresh = center + spread * (rng.standard_normal(extra) + 1j * rng.standard_normal(extra))
                jitter = 0.05 * abs(chain.params.hbar) * (rng.standard_normal(len(kept)) + 1j * rng.standard_normal(len(kept)))
                roots[a] = np.concatenate([kept + jitter, fresh])
            yield _pack(roots, magnons)
            continue
        n = sum(magnons)
        start = center + spread * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        yield np.concatenate([start.real, start.imag])


def solve_small_chain(
    chain: ChainSpec,
    magnons: Sequence[int],
    settings: Optional[Settings] = None,
    opts: Optional[QQSolveOptions] = None,
    stream: int = 0,
    anchors: Sequence[BetheState] = (),
    restarts: Optional[int] = None,
) -> List[ChainSolution]:
    """
    Least-squares restarts on the highest QQ-relations, kept when the roots
    extend to a polynomial Q-system; solutions are deduplicated by root
    multisets. anchors are solutions of lower sectors used as partial starts.
    """
    settings = settings or Settings()
    magnons = tuple(int(m) for m in magnons)
    if len(magnons) != chain.rank or any(m < 0 for m in magnons):
        raise SchemaError(f"magnon numbers {magnons} do not match rank {chain.rank}")
    if sum(magnons) > MAX_MAGNONS or chain.L > MAX_SITES:
        raise SchemaError(f"desk-scale solving needs sum M <= {MAX_MAGNONS} and L <= {MAX_SITES}")
    opts = opts or QQSolveOptions(tol=1e-7)
    orbits = node_orbits(chain.cartan)
    sources = _active_sources(chain)
    found: List[ChainSolution] = []

    def accept(state: BetheState) -> None:
        if any(state.distance(s.state) < settings.dedup_tol for s in found):
            return
        try:
            system = _system_from_state(chain, state, orbits, sources, opts)
        except QFlagError as e:
            logger.debug("sector %s: candidate rejected (%s)", magnons, e)
            return
        found.append(ChainSolution(state=state, system=system))

    if sum(magnons) == 0:
        accept(BetheState(magnons=magnons, roots={a: np.array([], dtype=complex) for a in orbits}))
        return found
    rng = settings.rng(1000 + 31 * stream + sum(m * 7**a for a, m in enumerate(magnons)))

    def equations(x: np.ndarray) -> np.ndarray:
        return _highest_obstruction(chain, _split(x, magnons), orbits, sources)

    for x0 in _starts(chain, magnons, rng, restarts or settings.census_restarts, anchors):
        try:
            result = least_squares(equations, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(result.x)) or np.abs(result.fun).max() > 1e-9:
            continue
        state = BetheState(magnons=magnons, roots=_split(result.x, magnons))
        report = bethe_residual(chain, state, settings)
        if not report.passed or report.details["collisions"]:
            continue
        accept(state)
    logger.info("%s sector %s: %d solutions", chain.cartan.spec.label, magnons, len(found))
    return found


def random_system_D(rank: int, rng: np.random.Generator, hbar: complex = 1.0, magnons: Optional[Sequence[int]] = None) -> ExtendedQSystem:
    """
    D_r system of a solved two-site vector chain with random inhomogeneities
    and twist; by default one magnon on the vector node.
    """
    cartan = build_cartan(parse_algebra("D", rank))
    logs = 0.3 * rng.normal(size=rank) + 1j * rng.uniform(-np.pi, np.pi, size=rank)
    vector = tuple(int(a == 0) for a in range(rank))
    chain = ChainSpec(
        cartan=cartan,
        sites=[vector, vector],
        thetas=0.5 * rng.normal(size=2) + 0.1j * rng.normal(size=2),
        params=TwistParams(logs=logs, hbar=complex(hbar)),
    )
    magnons = tuple(magnons) if magnons is not None else (1,) + (0,) * (rank - 1)
    settings = Settings(seed=int(rng.integers(2**31)), census_restarts=40)
    found = solve_small_chain(chain, magnons, settings)
    if not found:
        raise NoPolynomialSolution(f"{cartan.spec.label}: no chain solution in sector {magnons}")
    return found[0].system


# --- Weight spaces ---
def tensor_weights(chain: ChainSpec) -> Counter:
    """Dynkin-label weights of the tensor product of site representations, with multiplicity."""
    total: Counter = Counter({(0,) * chain.rank: 1})
    for labels in chain.sites:
        site = weight_system_of(chain.cartan, labels).all_weights()
        nxt: Counter = Counter()
        for w, m in total.items():
            for v, k in site:
                nxt[tuple(x + y for x, y in zip(w, v))] += m * k
        total = nxt
    return total


def sector_weight(chain: ChainSpec, magnons: Sequence[int]) -> Weight:
    """d_a = sum_l m_a^l - sum_b C_ab M_b."""
    return tuple(int(x) for x in chain.total_labels - chain.cartan.cartan @ np.asarray(magnons, dtype=int))


def weight_space_dimension(chain: ChainSpec, magnons: Sequence[int]) -> int:
    return int(tensor_weights(chain).get(sector_weight(chain, magnons), 0))


def highest_weight_count(chain: ChainSpec, magnons: Sequence[int]) -> int:
    """Multiplicity of the irrep d in the tensor product; 0 when d is not dominant."""
    d = sector_weight(chain, magnons)
    if any(x < 0 for x in d):
        return 0
    cartan = chain.cartan
    weights = tensor_weights(chain)
    rho = cartan.weyl_vector
    count = 0
    for image in cartan.orbit(rho):
        flips = sum(1 for k in cartan.positive_roots if sum(c * x for c, x in zip(k, image)) < 0)
        target = tuple(d[a] + rho[a] - image[a] for a in range(cartan.rank))
        count += (-1) ** flips * weights.get(target, 0)
    return int(count)


def sectors(chain: ChainSpec, max_magnons: int = MAX_MAGNONS) -> List[Tuple[int, ...]]:
    """Magnon numbers of every weight in the tensor product with sum M <= max_magnons."""
    inverse = chain.cartan.cartan_inverse
    top = chain.total_labels
    out = []
    for w in tensor_weights(chain):
        diff = [int(top[b] - w[b]) for b in range(chain.rank)]
        m = [sum((inverse[a][b] * diff[b] for b in range(chain.rank)), Fraction(0)) for a in range(chain.rank)]
        if any(x.denominator != 1 or x < 0 for x in m):
            continue
        magnons = tuple(int(x) for x in m)
        if sum(magnons) <= max_magnons:
            out.append(magnons)
    return sorted(out, key=lambda m: (sum(m), m))


def _merge(found: List[ChainSolution], extra: List[ChainSolution], tol: float) -> List[ChainSolution]:
    out = list(found)
    for solution in extra:
        if all(solution.state.distance(s.state) >= tol for s in out):
            out.append(solution)
    return out


def census_report(
    chain: ChainSpec, settings: Optional[Settings] = None, max_magnons: int = MAX_MAGNONS, rounds: int = 3
) -> Tuple[RelationReport, Dict[Tuple[int, ...], List[ChainSolution]]]:
    """
    Solution counts per sector against weight multiplicities, solved with two
    independent restart streams. Lower-sector solutions seed the starts; when
    the streams disagree the restart budget doubles, up to `rounds` times,
    and sectors still unstable are marked incomplete.
    """
    settings = settings or Settings()
    table, mismatches, solutions = {}, [], {}
    with stopwatch() as elapsed:
        for magnons in sectors(chain, max_magnons):
            anchors = [
                s.state
                for a in range(chain.rank)
                if magnons[a] > 0
                for s in solutions.get(tuple(m - (b == a) for b, m in enumerate(magnons)), [])
            ]
            streams: List[List[ChainSolution]] = [[], []]
            budget = settings.census_restarts
            for attempt in range(rounds):
                for k in range(2):
                    extra = solve_small_chain(
                        chain, magnons, settings, stream=k + 2 * attempt, anchors=anchors, restarts=budget
                    )
                    streams[k] = _merge(streams[k], extra, settings.dedup_tol)
                if len(streams[0]) == len(streams[1]):
                    break
                logger.info("sector %s: streams found %d and %d, retrying", magnons, len(streams[0]), len(streams[1]))
                budget *= 2
            first, second = streams
            expected = weight_space_dimension(chain, magnons)
            stable = len(first) == len(second)
            table[",".join(map(str, magnons))] = {
                "found": len(first),
                "expected": expected,
                "stable": stable,
            }
            if not stable:
                logger.warning("sector %s: restart streams disagree (%d vs %d), census incomplete", magnons, len(first), len(second))
            mismatches.append(abs(len(first) - expected) + (0 if stable else 1))
            solutions[magnons] = first if len(first) >= len(second) else second
    report = RelationReport.from_residuals(
        "census",
        "number of extended Q-systems per sector = weight multiplicity of the tensor product",
        mismatches,
        0.5,
        elapsed[0],
        {"sectors": table, "max_magnons": max_magnons},
    )
    return report, solutions


# --- R-matrix oracle ---
@dataclass
class RMatrix:
    """R(u) = u(u+kappa) I + (u+kappa) P - u K on the so(2r) vector representation squared."""

    rank: int
    kappa: float = field(init=False)
    identity: np.ndarray = field(init=False, repr=False)
    permutation: np.ndarray = field(init=False, repr=False)
    trace: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.rank < 3:
            raise SchemaError("so(2r) R-matrices are built for r >= 3")
        n = 2 * self.rank
        self.kappa = float(self.rank - 1)
        g = vector_metric(self.rank).astype(float)
        self.identity = np.eye(n * n)
        self.permutation = np.einsum("ad,bc->abcd", np.eye(n), np.eye(n)).reshape(n * n, n * n)
        self.trace = np.einsum("ab,cd->abcd", g, np.linalg.inv(g)).reshape(n * n, n * n)

    @property
    def dim(self) -> int:
        return 2 * self.rank

    def __call__(self, u: complex) -> np.ndarray:
        k = self.kappa
        return u * (u + k) * self.identity + (u + k) * self.permutation - u * self.trace

    def tensor(self, u: complex) -> np.ndarray:
        n = self.dim
        return self(u).reshape(n, n, n, n)


def yang_baxter_residual(rmat: RMatrix, rng: np.random.Generator, count: int = 5) -> float:
    """Relative residual of R12(u-v) R13(u) R23(v) = R23(v) R13(u) R12(u-v) at random complex u, v."""
    n = rmat.dim
    one = np.eye(n)
    swap23 = np.kron(one, rmat.permutation)
    worst = 0.0
    for _ in range(count):
        u, v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        r12 = np.kron(rmat(u - v), one)
        r13 = swap23 @ np.kron(rmat(u), one) @ swap23
        r23 = np.kron(one, rmat(v))
        lhs, rhs = r12 @ r13 @ r23, r23 @ r13 @ r12
        worst = max(worst, float(np.abs(lhs - rhs).max() / (1 + np.abs(lhs).max())))
    return worst


def r_matrix_D(r: int, rng: Optional[np.random.Generator] = None) -> RMatrix:
    """Build the so(2r) R-matrix and check the Yang-Baxter equation."""
    rmat = RMatrix(rank=r)
    residual = yang_baxter_residual(rmat, rng or np.random.default_rng(r))
    if residual > YBE_TOL:
        raise QFlagError(f"R-matrix for r={r} fails Yang-Baxter (residual {residual:.2e})")
    logger.debug("so(%d) R-matrix: Yang-Baxter residual %.1e", 2 * r, residual)
    return rmat


def _vector_epsilon(r: int) -> np.ndarray:
    """epsilon coordinates of the vector basis 1..r, -r..-1."""
    return np.vstack([np.eye(r), -np.eye(r)[::-1]])


def _check_vector_chain(chain: ChainSpec) -> None:
    if chain.cartan.spec.series is not Series.D:
        raise SchemaError("the transfer-matrix oracle covers D-series chains")
    vector = tuple(int(a == 0) for a in range(chain.rank))
    if any(tuple(s) != vector for s in chain.sites):
        raise SchemaError("the transfer-matrix oracle needs vector representations at every site")
    if chain.L > MAX_SITES or chain.rank > 5:
        raise SchemaError(f"transfer matrices are built for L <= {MAX_SITES} and r <= 5")


def transfer_matrix(
    chain: ChainSpec, u: complex, rmat: Optional[RMatrix] = None, inverse_twist: bool = False
) -> np.ndarray:
    """t(u) = tr_0 G_0 R_01(u - theta_1) ... R_0L(u - theta_L), spectral parameters in units of hbar."""
    _check_vector_chain(chain)
    rmat = rmat or r_matrix_D(chain.rank)
    n, L = rmat.dim, chain.L
    sign = -1 if inverse_twist else 1
    g = np.exp(sign * _vector_epsilon(chain.rank) @ chain.params.logs)
    hbar = chain.params.hbar
    # sum_{a, b..} g_a R[a, q1, b1, p1] R[b1, q2, b2, p2] ... R[b_{L-1}, qL, a, pL]
    operands: List = [g, [0]]
    for site, theta in enumerate(chain.thetas):
        aux_out = site + 1 if site + 1 < L else 0
        operands.extend([rmat.tensor((u - theta) / hbar), [site, 10 + site, aux_out, 20 + site]])
    out = [10 + s for s in range(L)] + [20 + s for s in range(L)]
    value = np.einsum(*operands, out, optimize="greedy")
    return value.reshape(n**L, n**L)


def commutator_residual(chain: ChainSpec, u1: complex, u2: complex, rmat: Optional[RMatrix] = None) -> float:
    """||[t(u1), t(u2)]|| relative to ||t(u1)|| ||t(u2)||."""
    rmat = rmat or r_matrix_D(chain.rank)
    t1, t2 = transfer_matrix(chain, u1, rmat), transfer_matrix(chain, u2, rmat)
    scale = np.linalg.norm(t1) * np.linalg.norm(t2)
    return float(np.linalg.norm(t1 @ t2 - t2 @ t1) / scale) if scale else 0.0


def _sector_of_state(chain: ChainSpec, eps: np.ndarray) -> Tuple[int, ...]:
    r = chain.rank
    labels = [eps[a] - eps[a + 1] for a in range(r - 1)] + [eps[r - 2] + eps[r - 1]]
    diff = [int(round(chain.total_labels[b] - labels[b])) for b in range(r)]
    inverse = chain.cartan.cartan_inverse
    return tuple(int(sum((inverse[a][b] * diff[b] for b in range(r)), Fraction(0))) for a in range(r))


def t_spectrum(
    chain: ChainSpec, points: Sequence[complex], inverse_twist: bool = False, rmat: Optional[RMatrix] = None
) -> Dict[Tuple[int, ...], np.ndarray]:
    """
    Transfer-matrix eigenvalues at each point, grouped by magnon sector:
    sector -> (states, points). Eigenvectors come from a generic reference
    point and are shared by all points.
    """
    _check_vector_chain(chain)
    rmat = rmat or r_matrix_D(chain.rank)
    n, L = rmat.dim, chain.L
    eps = _vector_epsilon(chain.rank)
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for index, positions in enumerate(product(range(n), repeat=L)):
        total = sum(eps[p] for p in positions)
        groups.setdefault(_sector_of_state(chain, total), []).append(index)
    reference = 0.37 + 0.21j + complex(np.mean(chain.thetas))
    matrices = [transfer_matrix(chain, u, rmat, inverse_twist) for u in points]
    t_ref = transfer_matrix(chain, reference, rmat, inverse_twist)
    out = {}
    for sector, indices in groups.items():
        block = np.ix_(indices, indices)
        _, vectors = np.linalg.eig(t_ref[block])
        inverse = np.linalg.inv(vectors)
        out[sector] = np.stack([np.diag(inverse @ t[block] @ vectors) for t in matrices], axis=1)
    return out


@dataclass
class VacuumCalibration:
    shift: float
    inverse_twist: bool
    prefactor: np.ndarray = field(repr=False)
    spread: float = 0.0


def calibrate_vacuum(
    chain: ChainSpec, vacuum: ExtendedQSystem, points: np.ndarray, rmat: Optional[RMatrix] = None
) -> VacuumCalibration:
    """
    Fit the spectral shift (a multiple of hbar/2) and twist orientation under
    which the pseudo-vacuum eigenvalue is closest to a constant multiple of
    T_{1,1}; the prefactor is kept pointwise.
    """
    rmat = rmat or r_matrix_D(chain.rank)
    ev = Evaluator(vacuum, points)
    t_vac = t_from_q(vacuum, 1, 1, ev)
    vacuum_sector = (0,) * chain.rank
    hbar = chain.params.hbar
    best: Optional[VacuumCalibration] = None
    for inverse_twist in (False, True):
        for k in range(-4 * chain.rank, 4 * chain.rank + 1):
            shift = k / 2
            spectrum = t_spectrum(chain, points + shift * hbar, inverse_twist, rmat)
            ratio = spectrum[vacuum_sector][0] / t_vac
            mean = np.mean(ratio)
            spread = float(np.max(np.abs(ratio - mean)) / (abs(mean) + 1e-300))
            if best is None or spread < best.spread:
                best = VacuumCalibration(shift=shift, inverse_twist=inverse_twist, prefactor=ratio, spread=spread)
    logger.info("vacuum calibration: shift %.1f hbar, inverse twist %s, spread %.1e", best.shift, best.inverse_twist, best.spread)
    return best


def _assign_sector(eigenvalues: Optional[np.ndarray], values: List[np.ndarray]) -> Tuple[List[float], int]:
    """Bijective match of solution T-values to one sector's eigenvalue rows; returns residuals and uncovered count."""
    count = 0 if eigenvalues is None else eigenvalues.shape[0]
    if not values:
        return [], count
    if count == 0:
        return [float("inf")] * len(values), 0
    cost = np.array(
        [np.abs(eigenvalues - value[None, :]).max(axis=1) / (1 + np.abs(value).max()) for value in values]
    )
    rows, cols = linear_sum_assignment(cost)
    residuals = [float(cost[i, j]) for i, j in zip(rows, cols)]
    residuals += [float("inf")] * (len(values) - len(rows))
    return residuals, count - len(cols)


def oracle_report(
    chain: ChainSpec,
    solutions: Dict[Tuple[int, ...], List[ChainSolution]],
    settings: Optional[Settings] = None,
) -> List[RelationReport]:
    """
    Transfer-matrix commutativity, then T_{1,1} of every solution against the
    calibrated spectrum. Solutions and eigenvalues are assigned one to one in
    each weight sector; every eigenvalue of a solved sector must be covered.
    """
    settings = settings or Settings()
    rmat = r_matrix_D(chain.rank, settings.rng(21))
    points = sample_points(settings.rng(22), 5) + complex(np.mean(chain.thetas))
    with stopwatch() as elapsed:
        commute = commutator_residual(chain, points[0], points[1], rmat)
    reports = [
        RelationReport.from_residuals(
            "oracle.commute", "[t(u1), t(u2)] = 0", [commute], settings.tol_relation, elapsed[0]
        )
    ]
    vacuum_sector = (0,) * chain.rank
    if not solutions.get(vacuum_sector):
        logger.warning("no pseudo-vacuum solution; skipping the eigenvalue match")
        return reports
    with stopwatch() as elapsed:
        calibration = calibrate_vacuum(chain, solutions[vacuum_sector][0].system, points, rmat)
        spectrum = t_spectrum(chain, points + calibration.shift * chain.params.hbar, calibration.inverse_twist, rmat)
        residuals, coverage = [], {}
        for sector, found in solutions.items():
            values = [
                calibration.prefactor * t_from_q(s.system, 1, 1, Evaluator(s.system, points)) for s in found
            ]
            matched, uncovered = _assign_sector(spectrum.get(sector), values)
            residuals.extend(matched)
            if found and uncovered:
                residuals.append(float("inf"))
            coverage[",".join(map(str, sector))] = {
                "solutions": len(found),
                "eigenvalues": 0 if spectrum.get(sector) is None else int(spectrum[sector].shape[0]),
                "uncovered": uncovered,
            }
    reports.append(
        RelationReport.from_residuals(
            "oracle.spectrum",
            "prefactor * T_{1,1}(u) matches the transfer-matrix eigenvalues at u + shift one to one per sector",
            residuals,
            1e-8,
            elapsed[0],
            {
                "shift": calibration.shift,
                "inverse_twist": calibration.inverse_twist,
                "vacuum_spread": calibration.spread,
                "solutions": sum(len(found) for found in solutions.values()),
                "sectors": coverage,
            },
        )
    )
    return reports


__all__ = [
    "BetheState",
    "ChainSolution",
    "ChainSpec",
    "RMatrix",
    "VacuumCalibration",
    "bethe_residual",
    "calibrate_vacuum",
    "census_report",
    "commutator_residual",
    "highest_weight_count",
    "oracle_report",
    "r_matrix_D",
    "random_system_D",
    "sector_weight",
    "sectors",
    "solve_small_chain",
    "source_polynomials",
    "t_spectrum",
    "tensor_weights",
    "transfer_matrix",
    "weight_space_dimension",
    "yang_baxter_residual",
]
