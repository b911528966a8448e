"""
Static data for simply-laced Lie algebras: Cartan matrices, roots, weights,
Coxeter height functions, the Perron-Frobenius vector and Lambda-spectra.

Weights are handled in Dynkin labels lambda(h_a); roots in simple-root
coordinates. All inner products are exact (Fraction) and come from the
inverse Cartan matrix.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from pydantic import BaseModel, Field, model_validator
from scipy.linalg import null_space
from scipy.optimize import linear_sum_assignment

from qflag.errors import InvalidAlgebraError, QFlagError
from qflag.fusion_tables import fusion_rules
from qflag.schemas import RelationReport, stopwatch

logger = logging.getLogger(__name__)

Weight = Tuple[int, ...]


# --- Algebra specification ---
class Series(str, Enum):
    A = "A"
    D = "D"
    E = "E"


class AlgebraSpec(BaseModel):
    """
    A simply-laced simple Lie algebra, named by series and rank.
    """

    series: Series
    rank: int = Field(gt=0, description="Number of Dynkin nodes.")

    @model_validator(mode="after")
    def _check_rank(self) -> "AlgebraSpec":
        if self.series is Series.D and self.rank < 3:
            raise InvalidAlgebraError(f"D series needs rank >= 3, got {self.rank}")
        if self.series is Series.E and self.rank not in (6, 7, 8):
            raise InvalidAlgebraError(f"E series exists for rank 6, 7, 8 only, got {self.rank}")
        return self

    @property
    def label(self) -> str:
        return f"{self.series.value}{self.rank}"

    def __hash__(self) -> int:
        return hash((self.series, self.rank))


def parse_algebra(series: str, rank: int) -> AlgebraSpec:
    """Validate a series/rank pair, raising InvalidAlgebraError on bad input."""
    try:
        return AlgebraSpec(series=Series(series.upper()), rank=rank)
    except InvalidAlgebraError:
        raise
    except ValueError as e:
        raise InvalidAlgebraError(str(e)) from e


# --- Simple roots in orthogonal coordinates ---
def _e(n: int, *entries: Tuple[int, Fraction]) -> Tuple[Fraction, ...]:
    v = [Fraction(0)] * n
    for i, c in entries:
        v[i] = Fraction(c)
    return tuple(v)


def _simple_roots(spec: AlgebraSpec) -> List[Tuple[Fraction, ...]]:
    r = spec.rank
    if spec.series is Series.A:
        return [_e(r + 1, (a, 1), (a + 1, -1)) for a in range(r)]
    if spec.series is Series.D:
        roots = [_e(r, (a, 1), (a + 1, -1)) for a in range(r - 1)]
        roots.append(_e(r, (r - 2, 1), (r - 1, 1)))
        return roots
    # E8 lattice roots, Bourbaki labelling b1..b8; node order b1, b3, ..., b_r, b2
    half = Fraction(1, 2)
    b = {1: (half, -half, -half, -half, -half, -half, -half, half), 2: _e(8, (0, 1), (1, 1))}
    for k in range(3, 9):
        b[k] = _e(8, (k - 2, 1), (k - 3, -1))
    order = [1] + list(range(3, r + 1)) + [2]
    return [b[k] for k in order]


def _dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


# --- Weyl group orders of connected simply-laced diagrams ---
def _component_order(nodes: List[int], adjacency: Dict[int, List[int]]) -> int:
    n = len(nodes)
    if n == 0:
        return 1
    inside = set(nodes)
    degree = {a: sum(1 for b in adjacency[a] if b in inside) for a in nodes}
    branches = [a for a in nodes if degree[a] == 3]
    if not branches:
        return factorial(n + 1)
    center = branches[0]
    legs = []
    for start in adjacency[center]:
        if start not in inside:
            continue
        length, prev, cur = 0, center, start
        while True:
            length += 1
            nxt = [b for b in adjacency[cur] if b in inside and b != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
        legs.append(length)
    legs = tuple(sorted(legs))
    if legs[:2] == (1, 1):
        return 2 ** (n - 1) * factorial(n)
    known = {(1, 2, 2): 51840, (1, 2, 3): 2903040, (1, 2, 4): 696729600}
    if legs not in known:
        raise QFlagError(f"unexpected Dynkin subdiagram with legs {legs}")
    return known[legs]


# --- Cartan data ---
@dataclass(frozen=True, eq=False)
class CartanData:
    """
    Root and weight data of one simply-laced algebra.

    Node numbering: A chain 1..r; D chain 1..r-2 with spinor legs r-1, r
    attached to r-2; E chain 1..r-1 with node r attached to node 3.
    """

    spec: AlgebraSpec
    cartan: np.ndarray
    simple_roots: Tuple[Tuple[Fraction, ...], ...]
    positive_roots: Tuple[Tuple[int, ...], ...]
    cartan_inverse: Tuple[Tuple[Fraction, ...], ...] = field(repr=False)

    @property
    def rank(self) -> int:
        return self.spec.rank

    @property
    def incidence(self) -> np.ndarray:
        return 2 * np.eye(self.rank, dtype=int) - self.cartan

    @property
    def coxeter_number(self) -> int:
        return 2 * len(self.positive_roots) // self.rank

    @cached_property
    def neighbours(self) -> Dict[int, List[int]]:
        """0-based adjacency lists."""
        return {
            a: [b for b in range(self.rank) if self.cartan[a, b] == -1] for a in range(self.rank)
        }

    @cached_property
    def node_parity(self) -> Tuple[int, ...]:
        """0 for even nodes, 1 for odd nodes; node 1 is even."""
        parity = [-1] * self.rank
        parity[0] = 0
        queue = deque([0])
        while queue:
            a = queue.popleft()
            for b in self.neighbours[a]:
                if parity[b] < 0:
                    parity[b] = 1 - parity[a]
                    queue.append(b)
        return tuple(parity)

    @cached_property
    def fundamental_weights(self) -> Tuple[Tuple[Fraction, ...], ...]:
        """omega_a in the orthogonal coordinates of the simple roots."""
        dim = len(self.simple_roots[0])
        out = []
        for a in range(self.rank):
            vec = [Fraction(0)] * dim
            for b in range(self.rank):
                c = self.cartan_inverse[a][b]
                for i in range(dim):
                    vec[i] += c * self.simple_roots[b][i]
            out.append(tuple(vec))
        return tuple(out)

    @property
    def weyl_vector(self) -> Weight:
        return (1,) * self.rank

    def root_labels(self, root: Sequence[int]) -> Weight:
        """Dynkin labels of a root given in simple-root coordinates."""
        return tuple(int(x) for x in self.cartan @ np.asarray(root, dtype=int))

    def weight_dot(self, u: Sequence[int], v: Sequence[int]) -> Fraction:
        """Exact inner product of two weights given in Dynkin labels."""
        total = Fraction(0)
        for a in range(self.rank):
            if u[a] == 0:
                continue
            row = self.cartan_inverse[a]
            total += u[a] * sum((row[b] * v[b] for b in range(self.rank)), Fraction(0))
        return total

    @cached_property
    def highest_root(self) -> Tuple[int, ...]:
        return max(self.positive_roots, key=sum)

    @cached_property
    def weyl_order(self) -> int:
        return _component_order(list(range(self.rank)), self.neighbours)

    # --- Weyl group action on Dynkin labels ---
    def reflect(self, weight: Sequence[int], a: int) -> Weight:
        """Simple reflection s_a (0-based) on a weight in Dynkin labels."""
        w = list(weight)
        c = w[a]
        if c:
            for b in range(self.rank):
                w[b] -= c * int(self.cartan[a, b])
        return tuple(w)

    def act(self, word: Sequence[int], weight: Sequence[int]) -> Weight:
        """Apply s_{word[0]} ... s_{word[-1]} (1-based letters), rightmost first."""
        w = tuple(weight)
        for letter in reversed(word):
            w = self.reflect(w, letter - 1)
        return w

    def dominant_representative(self, weight: Sequence[int]) -> Weight:
        w = tuple(weight)
        while True:
            neg = next((a for a in range(self.rank) if w[a] < 0), None)
            if neg is None:
                return w
            w = self.reflect(w, neg)

    def orbit(self, weight: Sequence[int]) -> List[Weight]:
        """Weyl orbit by breadth-first reflection, starting at the given weight."""
        start = tuple(weight)
        seen = {start}
        order = [start]
        queue = deque([start])
        while queue:
            w = queue.popleft()
            for a in range(self.rank):
                if w[a] == 0:
                    continue
                v = self.reflect(w, a)
                if v not in seen:
                    seen.add(v)
                    order.append(v)
                    queue.append(v)
        return order

    def stabilizer_order(self, weight: Sequence[int]) -> int:
        zero = [a for a in range(self.rank) if weight[a] == 0]
        inside = set(zero)
        order, seen = 1, set()
        for a in zero:
            if a in seen:
                continue
            comp, queue = [], deque([a])
            seen.add(a)
            while queue:
                x = queue.popleft()
                comp.append(x)
                for y in self.neighbours[x]:
                    if y in inside and y not in seen:
                        seen.add(y)
                        queue.append(y)
            order *= _component_order(comp, self.neighbours)
        return order

    def orbit_size(self, weight: Sequence[int]) -> int:
        return self.weyl_order // self.stabilizer_order(self.dominant_representative(weight))


def build_cartan(spec: AlgebraSpec) -> CartanData:
    """Build root and weight data with the node numbering documented on CartanData."""
    roots = _simple_roots(spec)
    r = spec.rank
    cartan = np.array([[int(_dot(roots[a], roots[b])) for b in range(r)] for a in range(r)])
    inverse = sympy.Matrix(cartan.tolist()).inv()
    cartan_inverse = tuple(
        tuple(Fraction(int(sympy.fraction(inverse[a, b])[0]), int(sympy.fraction(inverse[a, b])[1])) for b in range(r))
        for a in range(r)
    )

    # beta + alpha_a is a root iff (beta, alpha_a) = -1 in the simply-laced case
    simple = [tuple(int(a == b) for b in range(r)) for a in range(r)]
    found = set(simple)
    queue = deque(simple)
    while queue:
        beta = queue.popleft()
        labels = cartan @ np.asarray(beta)
        for a in range(r):
            if labels[a] == -1:
                nxt = tuple(beta[b] + (a == b) for b in range(r))
                if nxt not in found:
                    found.add(nxt)
                    queue.append(nxt)
    positive = tuple(sorted(found, key=lambda k: (sum(k), tuple(-x for x in k))))
    data = CartanData(
        spec=spec,
        cartan=cartan,
        simple_roots=tuple(roots),
        positive_roots=positive,
        cartan_inverse=cartan_inverse,
    )
    logger.debug("%s: %d positive roots, h=%d", spec.label, len(positive), data.coxeter_number)
    return data


# --- Deformed numbers and the Perron-Frobenius vector ---
def deformed_number(n: int, q: complex) -> complex:
    """[n]_q = q^{n-1} + q^{n-3} + ... + q^{1-n}, with [0] = 0 and [-n] = -[n]."""
    if n == 0:
        return 0j if isinstance(q, complex) else 0
    if n < 0:
        return -deformed_number(-n, q)
    return sum(q ** (n - 1 - 2 * k) for k in range(n))


@dataclass(frozen=True, eq=False)
class PFData:
    mu: np.ndarray
    coxeter_number: int

    @property
    def gamma(self) -> complex:
        return np.exp(2j * np.pi / self.coxeter_number)

    def gamma_power(self, m: float) -> complex:
        """gamma^{m/2}."""
        return np.exp(1j * np.pi * m / self.coxeter_number)


def _normalizing_node(spec: AlgebraSpec) -> int:
    if spec.series is Series.E:
        return {6: 0, 7: 5, 8: 6}[spec.rank]
    return 0


def pf_vector(cartan: CartanData, tol: float = 1e-12) -> PFData:
    """Perron-Frobenius eigenvector of the incidence matrix, eigenvalue 2cos(pi/h)."""
    r = cartan.rank
    incidence = cartan.incidence.astype(float)
    h = cartan.coxeter_number
    shifted = incidence + np.eye(r)
    v = np.ones(r)
    for _ in range(500):
        v_next = shifted @ v
        v_next /= np.linalg.norm(v_next)
        if np.linalg.norm(v_next - v) < 1e-15:
            v = v_next
            break
        v = v_next
    eigenvalue = 2 * np.cos(np.pi / h)
    if r == 1:
        return PFData(mu=np.ones(1), coxeter_number=h)
    kernel = null_space(incidence - eigenvalue * np.eye(r), rcond=1e-10)
    if kernel.shape[1] != 1:
        raise QFlagError(f"Perron-Frobenius eigenspace has dimension {kernel.shape[1]}")
    mu = kernel[:, 0] * np.sign(kernel[:, 0] @ v)
    mu = mu / mu[_normalizing_node(cartan.spec)]
    residual = np.max(np.abs(incidence @ mu - eigenvalue * mu))
    if residual > tol or np.any(mu <= 0):
        raise QFlagError(f"Perron-Frobenius refinement failed, residual {residual:.2e}")
    return PFData(mu=mu, coxeter_number=h)


def pf_closed_form(cartan: CartanData) -> Optional[np.ndarray]:
    """Closed-form mu for A and D series, None for E."""
    spec = cartan.spec
    q = np.exp(1j * np.pi / cartan.coxeter_number)
    r = spec.rank
    if spec.series is Series.A:
        return np.array([deformed_number(a, q).real for a in range(1, r + 1)])
    if spec.series is Series.D:
        mu = [deformed_number(a, q).real for a in range(1, r - 1)]
        spinor = 0.5 * deformed_number(r - 1, q).real
        return np.array(mu + [spinor, spinor])
    return None


# --- Coxeter height functions ---
@dataclass(frozen=True)
class HeightFunction:
    p: Tuple[int, ...]

    def validate(self, cartan: CartanData) -> "HeightFunction":
        if len(self.p) != cartan.rank:
            raise QFlagError("height function has the wrong number of nodes")
        for a in range(cartan.rank):
            if (self.p[a] - cartan.node_parity[a]) % 2:
                raise QFlagError(f"height of node {a + 1} has the wrong parity")
            for b in cartan.neighbours[a]:
                if abs(self.p[a] - self.p[b]) != 1:
                    raise QFlagError(f"heights of adjacent nodes {a + 1},{b + 1} differ by != 1")
        return self

    def shifted(self, c: int) -> "HeightFunction":
        return HeightFunction(tuple(x + c for x in self.p))


def alternating_height(cartan: CartanData) -> HeightFunction:
    return HeightFunction(tuple(cartan.node_parity))


def local_maxima(cartan: CartanData, p: HeightFunction) -> List[int]:
    return [
        a for a in range(cartan.rank) if all(p.p[b] < p.p[a] for b in cartan.neighbours[a])
    ]


def lower_at(p: HeightFunction, a: int) -> HeightFunction:
    """Decrease a local maximum (0-based node) by 2."""
    q = list(p.p)
    q[a] -= 2
    return HeightFunction(tuple(q))


def random_height(cartan: CartanData, rng: np.random.Generator, moves: int = 8) -> HeightFunction:
    p = alternating_height(cartan)
    for _ in range(moves):
        p = lower_at(p, int(rng.choice(local_maxima(cartan, p))))
    return p


def coxeter_word(cartan: CartanData, p: HeightFunction) -> Tuple[int, ...]:
    """Nodes (1-based) ordered by decreasing height, ties by index."""
    p.validate(cartan)
    return tuple(a + 1 for a in sorted(range(cartan.rank), key=lambda a: (-p.p[a], a)))


# --- Lambda spectrum ---
def lambda_eigenvalue(weight: Sequence[int], p: HeightFunction, pf: PFData) -> complex:
    return complex(
        sum(pf.gamma_power(p.p[a]) * pf.mu[a] * weight[a] for a in range(len(weight)))
    )


@dataclass(frozen=True, eq=False)
class WeightSystem:
    """Dominant weights with multiplicities; the full system is expanded on demand."""

    cartan: CartanData = field(repr=False)
    highest: Weight
    dominant: Tuple[Tuple[Weight, int, int], ...]

    @property
    def total_dim(self) -> int:
        return sum(mult * size for _, mult, size in self.dominant)

    @property
    def entries(self) -> List[Tuple[Weight, int]]:
        return [(w, m) for w, m, _ in self.dominant]

    def multiplicity(self, weight: Sequence[int]) -> int:
        dom = self.cartan.dominant_representative(weight)
        for w, m, _ in self.dominant:
            if w == dom:
                return m
        return 0

    def all_weights(self) -> List[Tuple[Weight, int]]:
        out = []
        for w, m, _ in self.dominant:
            out.extend((v, m) for v in self.cartan.orbit(w))
        return out


def _freudenthal(cartan: CartanData, highest: Weight) -> List[Tuple[Weight, int]]:
    r = cartan.rank
    roots = [(k, cartan.root_labels(k)) for k in cartan.positive_roots]
    # dominant weights below the highest weight, by depth
    depth = {highest: 0}
    queue = deque([highest])
    while queue:
        w = queue.popleft()
        for k, labels in roots:
            v = tuple(w[a] - labels[a] for a in range(r))
            if all(x >= 0 for x in v) and v not in depth:
                depth[v] = depth[w] + sum(k)
                queue.append(v)
    ordered = sorted(depth, key=lambda w: (depth[w], tuple(-x for x in w)))

    rho = cartan.weyl_vector
    shifted_top = tuple(x + 1 for x in highest)
    norm_top = cartan.weight_dot(shifted_top, shifted_top)
    mult: Dict[Weight, int] = {highest: 1}
    for mu in ordered[1:]:
        total = Fraction(0)
        for k, labels in roots:
            step = 1
            while True:
                nu = tuple(mu[a] + step * labels[a] for a in range(r))
                m = mult.get(cartan.dominant_representative(nu), 0)
                if m == 0:
                    break
                total += m * sum(nu[a] * k[a] for a in range(r))
                step += 1
        shifted = tuple(mu[a] + rho[a] for a in range(r))
        denominator = norm_top - cartan.weight_dot(shifted, shifted)
        value = 2 * total / denominator
        if value.denominator != 1:
            raise QFlagError(f"non-integral multiplicity {value} at {mu}")
        mult[mu] = int(value)
    return [(w, mult[w]) for w in ordered if mult[w] > 0]


def weight_system_of(cartan: CartanData, highest: Sequence[int]) -> WeightSystem:
    highest = tuple(int(x) for x in highest)
    if any(x < 0 for x in highest):
        raise QFlagError("highest weight must be dominant")
    entries = _freudenthal(cartan, highest)
    dominant = tuple((w, m, cartan.orbit_size(w)) for w, m in entries)
    return WeightSystem(cartan=cartan, highest=highest, dominant=dominant)


def weight_system(cartan: CartanData, node: int) -> WeightSystem:
    """Weight system of the fundamental representation at a 1-based node."""
    if not 1 <= node <= cartan.rank:
        raise QFlagError(f"node {node} out of range 1..{cartan.rank}")
    return weight_system_of(cartan, tuple(int(a == node - 1) for a in range(cartan.rank)))


def fundamental_weight(cartan: CartanData, node: int) -> Weight:
    return tuple(int(a == node - 1) for a in range(cartan.rank))


def weyl_dimension(cartan: CartanData, highest: Sequence[int]) -> int:
    value = Fraction(1)
    for k in cartan.positive_roots:
        value *= Fraction(sum((highest[a] + 1) * k[a] for a in range(cartan.rank)), sum(k))
    return int(value)


def lambda_spectrum(weights: WeightSystem, p: HeightFunction, pf: PFData) -> np.ndarray:
    values = []
    for w, m in weights.all_weights():
        values.extend([lambda_eigenvalue(w, p, pf)] * m)
    return np.array(values, dtype=complex)


def multiset_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest matched distance between two equal-size complex multisets."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return float("inf")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def is_gamma_closed(values: np.ndarray, pf: PFData, tol: float = 1e-10) -> bool:
    return bool(multiset_distance(values, pf.gamma * np.asarray(values)) < tol)


def match_up_to_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Distance between two multisets after rescaling and rotating b onto a."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return float("inf")
    scale_a, scale_b = np.abs(a).max(), np.abs(b).max()
    if scale_a == 0 or scale_b == 0:
        return float(abs(scale_a - scale_b))
    a, b = a / scale_a, b / scale_b
    anchor = a[np.argmax(np.abs(a))]
    best = float("inf")
    for target in b[np.abs(b) > 1 - 1e-8]:
        best = min(best, multiset_distance(a, b * anchor / target))
    return best


# --- D-series orthogonal basis ---
def orthogonal_convert(cartan: CartanData, weight: Sequence[int]) -> Tuple[Fraction, ...]:
    """Dynkin labels to epsilon coordinates for the D series."""
    if cartan.spec.series is not Series.D:
        raise InvalidAlgebraError("orthogonal_convert applies to the D series only")
    r = cartan.rank
    lam = [Fraction(x) for x in weight]
    spin = (lam[r - 2] + lam[r - 1]) / 2
    coords = [sum(lam[i : r - 2], Fraction(0)) + spin for i in range(r - 1)]
    coords.append((lam[r - 1] - lam[r - 2]) / 2)
    return tuple(coords)


# --- Report form ---
class CartanInfo(BaseModel):
    """
    JSON summary of CartanData and PFData.
    """

    series: str
    rank: int
    cartan: List[List[int]]
    coxeter_number: int
    node_parity: List[int]
    positive_roots: int
    highest_root: List[int]
    pf_vector: List[float]


def cartan_info(cartan: CartanData, pf: PFData) -> CartanInfo:
    return CartanInfo(
        series=cartan.spec.series.value,
        rank=cartan.rank,
        cartan=cartan.cartan.tolist(),
        coxeter_number=cartan.coxeter_number,
        node_parity=list(cartan.node_parity),
        positive_roots=len(cartan.positive_roots),
        highest_root=list(cartan.highest_root),
        pf_vector=[float(x) for x in pf.mu],
    )


# --- Fusion arithmetic on Lambda eigenvalues ---
def verify_fusion_arithmetic(spec: AlgebraSpec, tol: float = 1e-10) -> RelationReport:
    """
    For every tabulated rule, the summed highest eigenvalues gamma^{m/2} mu_a of
    the shifted factors must equal the eigenvalue of the target highest weight
    (zero for quantisation rules).
    """
    cartan = build_cartan(spec)
    pf = pf_vector(cartan)
    trivial_height = HeightFunction((0,) * cartan.rank)
    residuals, failures = [], []
    with stopwatch() as elapsed:
        for rule in fusion_rules(spec.series.value, spec.rank):
            value = sum(pf.gamma_power(m) * pf.mu[node - 1] for node, m in rule.factors)
            expected = lambda_eigenvalue(rule.target_labels(cartan.rank), trivial_height, pf)
            residual = abs(value - expected)
            residuals.append(residual)
            if residual >= tol:
                failures.append(rule.label)
            logger.debug("%s %s: residual %.2e", spec.label, rule.label, residual)
    return RelationReport.from_residuals(
        "fusion-arithmetic",
        f"{spec.label}: fused eigenvalues gamma^(m/2) mu land on the target highest weight",
        residuals,
        tol,
        elapsed=elapsed[0],
        details={"rules": len(residuals), "failing": failures},
    )
