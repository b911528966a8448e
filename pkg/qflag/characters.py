"""
Character solutions and T-functions.

The D-series character solution has every Q-function equal to a constant
times a pure twist exponential. Its coefficients are closed-form rational
functions of the twist values x_a and of their square roots y_a, which are
fixed once per TwistParams. T-functions are built from Q-systems by the
Hodge pairing and checked against the Hirota equation and against Weyl
characters.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from qflag.config import Settings
from qflag.errors import DegenerateTwist, InvalidAlgebraError, SchemaError
from qflag.lie_core import (
    CartanData,
    Series,
    Weight,
    build_cartan,
    fundamental_weight,
    orthogonal_convert,
    parse_algebra,
    weight_system_of,
)
from qflag.qsystem import (
    Evaluator,
    ExtendedQSystem,
    assemble_extended_A,
    extend_system,
    hirota_factors,
    node_orbits,
    spinor_pairing,
    spinor_quantisation_sign,
    tensor_pairing_A,
    tensor_pairing_D,
    twist_weights,
)
from qflag.rep_clifford import cartan_index
from qflag.schemas import RelationReport, TEntryModel, TGridModel, complex_pair, from_pair, stopwatch
from qflag.spectral import TwistedPoly, TwistParams, sample_points

logger = logging.getLogger(__name__)

# contragredient node of each E-series node; A and D follow from the diagram
E_CONJUGATE_NODES = {
    6: {1: 5, 2: 4, 3: 3, 4: 2, 5: 1, 6: 6},
    7: {a: a for a in range(1, 8)},
    8: {a: a for a in range(1, 9)},
}


def contragredient_node(cartan: CartanData, a: int) -> int:
    """Node a* whose fundamental representation is dual to that of node a."""
    r = cartan.rank
    if not 1 <= a <= r:
        raise SchemaError(f"node {a} out of range 1..{r}")
    series = cartan.spec.series
    if series is Series.A:
        return r + 1 - a
    if series is Series.D:
        if r % 2 == 1 and a >= r - 1:
            return 2 * r - 1 - a
        return a
    return E_CONJUGATE_NODES[r][a]


# --- Twists ---
def _check_twist(x: np.ndarray, tol: float = 1e-12) -> None:
    r = len(x)
    for a in range(r):
        if abs(x[a] ** 2 - 1) < tol:
            raise DegenerateTwist(f"x_{a + 1} = {x[a]:.6g} squares to one")
        for b in range(a + 1, r):
            if abs(x[a] - x[b]) < tol:
                raise DegenerateTwist(f"x_{a + 1} and x_{b + 1} coincide")
            if abs(x[a] * x[b] - 1) < tol:
                raise DegenerateTwist(f"x_{a + 1} x_{b + 1} = 1")


def random_twist(r: int, rng: np.random.Generator, separation: float = 0.1, hbar: complex = 1.0) -> TwistParams:
    """
    Unit-modulus twist values whose phases, their negatives, 0 and pi are
    pairwise at least `separation` apart on the circle.
    """
    for _ in range(1000):
        phases = rng.uniform(0, 2 * np.pi, size=r)
        marks = np.concatenate([phases, -phases % (2 * np.pi), [0.0, np.pi]])
        gaps = np.abs(marks[:, None] - marks[None, :])
        gaps = np.minimum(gaps, 2 * np.pi - gaps)
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() > separation:
            return TwistParams(logs=1j * phases, hbar=complex(hbar))
    raise DegenerateTwist(f"no twist with phase separation {separation} found for rank {r}")


# --- Closed forms ---
def _signed_value(values: np.ndarray, i: int) -> complex:
    return values[i - 1] if i > 0 else 1 / values[-i - 1]


def char_vector_coeffs(params: TwistParams) -> Dict[int, complex]:
    """A_{+-a} = prod_{b != a} y_b / (x_b - x_a^{+-1}), keyed by signed index."""
    x, y = params.values, params.roots
    _check_twist(x)
    r = len(x)
    out = {}
    for a in range(1, r + 1):
        for sign in (1, -1):
            xa = x[a - 1] ** sign
            out[sign * a] = complex(np.prod([y[b] / (x[b] - xa) for b in range(r) if b != a - 1]))
    return out


def _index_weight(r: int, indices: Sequence[int]) -> np.ndarray:
    weight = np.zeros(r)
    for i in indices:
        weight[abs(i) - 1] += np.sign(i)
    return weight


def char_tensor(params: TwistParams, indices: Sequence[int]) -> Tuple[complex, np.ndarray]:
    """
    Coefficient and twist weight of V_I for the character solution:
    prod_{i in I} A_i y_i^{1-k} times det(x_{i_a}^{k-b}).
    """
    r = params.nvars
    indices = list(indices)
    if len(set(indices)) != len(indices):
        raise SchemaError(f"repeated index in {indices}")
    if any(i == 0 or abs(i) > r for i in indices):
        raise SchemaError(f"indices {indices} out of range +-1..{r}")
    k = len(indices)
    if k == 0:
        return 1.0 + 0j, np.zeros(r)
    coeffs = char_vector_coeffs(params)
    x, y = params.values, params.roots
    xs = np.array([_signed_value(x, i) for i in indices])
    ys = np.array([_signed_value(y, i) for i in indices])
    vander = np.linalg.det(xs[:, None] ** np.arange(k - 1, -1, -1)[None, :])
    lead = np.prod([coeffs[i] for i in indices]) * np.prod(ys ** (1 - k))
    return complex(lead * vander), _index_weight(r, indices)


def char_spinor(params: TwistParams) -> Dict[FrozenSet[int], complex]:
    """
    B_A for every set A of minus positions, with the global sign fixed to +:
    B_A = (-1)^|A| i^{r(r-1)/2+1} prod_{a in A} y_a^{r-1}
          prod_{a<b in A} (x_a - x_b)/(x_a x_b - 1) / sqrt(Delta).
    """
    x, y = params.values, params.roots
    _check_twist(x)
    r = len(x)
    delta = np.prod([x[a] - x[b] for a, b in combinations(range(r), 2)])
    root_delta = np.sqrt(complex(delta))
    phase = 1j ** ((r * (r - 1) // 2 + 1) % 4)
    out = {}
    for size in range(r + 1):
        for subset in combinations(range(1, r + 1), size):
            b = np.prod([y[a - 1] ** (r - 1) for a in subset]) / root_delta
            for a, c in combinations(subset, 2):
                b *= (x[a - 1] - x[c - 1]) / (x[a - 1] * x[c - 1] - 1)
            out[frozenset(subset)] = complex((-1) ** size * phase * b)
    return out


def spinor_weight(r: int, minus: FrozenSet[int]) -> np.ndarray:
    return np.array([-0.5 if a + 1 in minus else 0.5 for a in range(r)])


@dataclass
class CharSolution:
    """Closed-form coefficients of the D-series character solution at one twist."""

    params: TwistParams
    vector: Dict[int, complex] = field(init=False, repr=False)
    spinor: Dict[FrozenSet[int], complex] = field(init=False, repr=False)

    def __post_init__(self):
        self.vector = char_vector_coeffs(self.params)
        self.spinor = char_spinor(self.params)

    @property
    def rank(self) -> int:
        return self.params.nvars

    def tensor(self, indices: Sequence[int]) -> TwistedPoly:
        coeff, weight = char_tensor(self.params, indices)
        return TwistedPoly.constant(coeff, self.params, weights=weight)

    def zeta(self, minus: FrozenSet[int]) -> TwistedPoly:
        return TwistedPoly.constant(self.spinor[frozenset(minus)], self.params, weights=spinor_weight(self.rank, minus))

    def t_vector(self, s: int) -> complex:
        """T_{1,s} = (-1)^{r+1} sum_a A_a A_{-a} (x_a^m + x_a^{-m}), m = s + r - 1."""
        r = self.rank
        m = s + r - 1
        x = self.params.values
        total = sum(self.vector[a] * self.vector[-a] * (x[a - 1] ** m + x[a - 1] ** (-m)) for a in range(1, r + 1))
        return complex((-1) ** (r + 1) * total)

    def seeds(self, cartan: CartanData) -> Dict[int, TwistedPoly]:
        """Highest orbit Q-function of every node, in the orbit-normalized basis."""
        r = self.rank
        out = {}
        for a, orbit in node_orbits(cartan).items():
            index = orbit.index(orbit.top)
            sign = int(orbit.signs[index])
            if orbit.subsets is not None:
                f = self.tensor(list(range(1, a + 1)))
            else:
                f = self.zeta(cartan_index(r, int(orbit.rep.embedding[index])))
            out[a] = f.scale(sign)
        return out


def character_system(series: str, params: TwistParams) -> ExtendedQSystem:
    """
    A Q-system whose functions are all constants times twist exponentials.

    D: the closed-form highest functions extended over the Weyl orbit.
    A: constant single-box functions; the twist logarithms must sum to zero.
    """
    r = params.nvars if series.upper() == "D" else params.nvars - 1
    cartan = build_cartan(parse_algebra(series, r))
    if cartan.spec.series is Series.D:
        solution = CharSolution(params)
        system = extend_system(cartan, solution.seeds(cartan), params)
        logger.info("%s: character system from closed-form seeds", cartan.spec.label)
        return system
    if cartan.spec.series is Series.A:
        if abs(np.sum(params.logs)) > 1e-12:
            raise DegenerateTwist("A-series character solutions need prod x_j = 1")
        if len(set(np.round(params.values, 12))) != params.nvars:
            raise DegenerateTwist("A-series twist values must be pairwise distinct")
        singles = [TwistedPoly.constant(1.0, params, weights=np.eye(r + 1)[j]) for j in range(r + 1)]
        return assemble_extended_A(cartan, singles)
    raise InvalidAlgebraError(f"{cartan.spec.label}: character systems are built for A and D")


def closed_form_deviation(system: ExtendedQSystem) -> float:
    """Largest relative gap between the system's vector and spinor coefficients and the closed forms."""
    solution = CharSolution(system.params)
    r = system.rank
    worst = 0.0
    for position, f in enumerate(system.base["vector"]):
        i = position + 1 if position < r else position - 2 * r
        expected = solution.vector[i]
        worst = max(worst, abs(f.coeffs[0] - expected) / (1 + abs(expected)))
    for name in ("psi", "eta"):
        node = r - 1 if name == "psi" else r
        embedding = system.orbits[node].rep.embedding
        for index, f in enumerate(system.base[name]):
            expected = solution.spinor[cartan_index(r, int(embedding[index]))]
            worst = max(worst, abs(f.coeffs[0] - expected) / (1 + abs(expected)))
    return float(worst)


# --- Weyl characters ---
def _epsilon(cartan: CartanData, weight: Sequence[int]) -> np.ndarray:
    series = cartan.spec.series
    if series is Series.D:
        return np.array([float(c) for c in orthogonal_convert(cartan, weight)])
    if series is Series.A:
        r = cartan.rank
        return np.array([float(sum(weight[i:])) for i in range(r)] + [0.0])
    raise InvalidAlgebraError(f"{cartan.spec.label}: Weyl characters are evaluated for A and D")


def _alternant(cartan: CartanData, mu: np.ndarray, logs: np.ndarray) -> complex:
    powers = np.exp(logs[:, None] * mu[None, :])
    if cartan.spec.series is Series.A:
        return complex(np.linalg.det(powers))
    inverse = np.exp(-logs[:, None] * mu[None, :])
    return complex((np.linalg.det(powers + inverse) + np.linalg.det(powers - inverse)) / 2)


def weyl_char_oracle(cartan: CartanData, weight: Sequence[int], logs: np.ndarray, tol: float = 1e-12) -> complex:
    """
    Weyl character of the irrep with the given highest weight at twist
    logarithms `logs`, as a ratio of Weyl alternants. A-series logs carry
    r+1 entries.
    """
    logs = np.asarray(logs, dtype=complex)
    eps = _epsilon(cartan, weight)
    if len(logs) != len(eps):
        raise SchemaError(f"{cartan.spec.label} needs {len(eps)} twist logarithms, got {len(logs)}")
    n = len(eps)
    rho = np.arange(n - 1, -1, -1, dtype=float)
    denominator = _alternant(cartan, rho, logs)
    if abs(denominator) < tol:
        raise DegenerateTwist(f"Weyl denominator vanishes ({abs(denominator):.2e})")
    return _alternant(cartan, eps + rho, logs) / denominator


def character_by_weights(cartan: CartanData, weight: Sequence[int], logs: np.ndarray) -> complex:
    """Sum of multiplicity * x^mu over the weight system of the irrep."""
    logs = np.asarray(logs, dtype=complex)
    system = weight_system_of(cartan, weight)
    level = int(sum(_epsilon(cartan, weight))) if cartan.spec.series is Series.A else 0
    total = 0j
    for mu, mult in system.all_weights():
        total += mult * np.exp(np.dot(twist_weights(cartan, mu, level), logs))
    return complex(total)


def kr_weights(cartan: CartanData, a: int, s: int) -> List[Weight]:
    """
    Highest weights entering the Kirillov-Reshetikhin decomposition of T_{a,s}.

    D-series nodes a <= r-2 run over sum_j k_j omega_j with j = a, a-2, ...
    down to 1 or 0 and sum_j k_j = s; every other node is the single
    irrep s omega_a.
    """
    r = cartan.rank
    single = tuple(s * x for x in fundamental_weight(cartan, a))
    if cartan.spec.series is not Series.D or a > r - 2:
        return [single]
    nodes = list(range(a % 2, a + 1, 2))
    out = []
    for ks in product(range(s + 1), repeat=len(nodes)):
        if sum(ks) != s:
            continue
        weight = [0] * r
        for j, k in zip(nodes, ks):
            if j > 0:
                weight[j - 1] += k
        out.append(tuple(weight))
    return out


def kr_character(cartan: CartanData, a: int, s: int, logs: np.ndarray) -> complex:
    if s < 0:
        raise SchemaError("KR characters are defined for s >= 0")
    return sum((weyl_char_oracle(cartan, w, logs) for w in kr_weights(cartan, a, s)), 0j)


# --- T-functions from Q-systems ---
def t_from_q(system: ExtendedQSystem, a: int, s: int, ev: Evaluator, shift: float = 0) -> np.ndarray:
    """
    T_{a,s} = <Q_a^{[s+h/2]}, Q_{a*}^{[-s-h/2]}> at the evaluator's sample points.
    D-series spinor nodes pair psi with psi (even r) or psi with eta (odd r).
    """
    r = system.rank
    if not 1 <= a <= r:
        raise SchemaError(f"node {a} out of range 1..{r}")
    if system.series is Series.A:
        return tensor_pairing_A(ev, a, s, shift)[0]
    if system.series is not Series.D:
        raise InvalidAlgebraError(f"{system.spec.label}: T-functions need an assembled A or D system")
    if a <= r - 2:
        return tensor_pairing_D(ev, a, s, shift)[0]
    name = {r - 1: "psi", r: "eta"}
    dual = contragredient_node(system.cartan, a)
    return spinor_pairing(ev, name[dual], name[a], (), s + r - 1, shift)[0]


@dataclass
class TGrid:
    """
    T_{a,s}(u + shift hbar/2) for a in nodes and s = -1..smax at fixed
    sample points. s = -1 is the zero boundary row. factors, when set, gives
    the per-cell source factors of a sourced grid (see hirota_factors).
    """

    cartan: CartanData
    smax: int
    samples: int
    value: Callable[[int, int, float], np.ndarray] = field(repr=False)
    nodes: Optional[List[int]] = None
    factors: Optional[Callable[[int, int], Tuple[np.ndarray, np.ndarray]]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.nodes is None:
            self.nodes = list(range(1, self.cartan.rank + 1))

    def __call__(self, a: int, s: int, shift: float = 0) -> np.ndarray:
        if s < 0:
            return np.zeros(self.samples, dtype=complex)
        return self.value(a, s, shift)

    @classmethod
    def from_model(cls, model: TGridModel, points: np.ndarray) -> "TGrid":
        cartan = build_cartan(parse_algebra(model.series, model.rank))
        hbar = from_pair(model.hbar)
        polys: Dict[Tuple[int, int], np.polynomial.Polynomial] = {}
        for entry in model.entries:
            polys[(entry.a, entry.s)] = np.polynomial.Polynomial([from_pair(c) for c in entry.coeffs])
        nodes = sorted({a for a, _ in polys})
        for a in nodes:
            for s in range(model.smax + 1):
                if (a, s) not in polys:
                    raise SchemaError(f"grid is missing T_{{{a},{s}}}")
        points = np.asarray(points, dtype=complex)

        def value(a: int, s: int, shift: float) -> np.ndarray:
            return polys[(a, s)](points + shift * hbar / 2)

        return cls(cartan=cartan, smax=model.smax, samples=len(points), value=value, nodes=nodes)

    def to_model(self, points: np.ndarray, hbar: complex = 1.0, degree: Optional[int] = None) -> TGridModel:
        """Fit each T_{a,s} by a polynomial through the sample points."""
        points = np.asarray(points, dtype=complex)
        degree = len(points) - 1 if degree is None else degree
        vander = np.polynomial.polynomial.polyvander(points, degree)
        entries = []
        for a in self.nodes:
            for s in range(self.smax + 1):
                coeffs, *_ = np.linalg.lstsq(vander, self(a, s), rcond=None)
                scale = max(1.0, float(np.abs(coeffs).max()))
                coeffs[np.abs(coeffs) < 1e-12 * scale] = 0
                n = len(coeffs)
                while n > 1 and coeffs[n - 1] == 0:
                    n -= 1
                entries.append(TEntryModel(a=a, s=s, coeffs=[complex_pair(c) for c in coeffs[:n]]))
        return TGridModel(
            series=self.cartan.spec.series.value,
            rank=self.cartan.rank,
            smax=self.smax,
            hbar=complex_pair(hbar),
            entries=entries,
        )


def t_grid(system: ExtendedQSystem, smax: int, settings: Optional[Settings] = None) -> TGrid:
    """
    T-functions of a system on s = 0..smax. Spinor rows are divided by the
    sign of their quantisation constant; sourced systems carry their Hirota
    source factors.
    """
    settings = settings or Settings()
    ev = Evaluator(system, sample_points(settings.rng(11), settings.samples))
    cache: Dict[Tuple[int, int, float], np.ndarray] = {}
    norms: Dict[int, int] = {}
    r = system.rank
    if system.series is Series.D:
        norms = {a: spinor_quantisation_sign(r, a) for a in (r - 1, r)}

    def value(a: int, s: int, shift: float) -> np.ndarray:
        key = (a, s, float(shift))
        if key not in cache:
            cache[key] = norms.get(a, 1) * t_from_q(system, a, s, ev, shift)
        return cache[key]

    factors = hirota_factors(ev) if system.sourced or system.sources else None
    return TGrid(cartan=system.cartan, smax=smax, samples=len(ev.points), value=value, factors=factors)


# --- Hirota ---
def hirota_residual(grid: TGrid, settings: Optional[Settings] = None) -> RelationReport:
    """
    T^+ T^- - T_{s+1} T_{s-1} = prod_{b~a} T_{b,s} on every cell with s < smax,
    the last two terms scaled by the grid's source factors when it has them.
    """
    settings = settings or Settings()
    cartan = grid.cartan
    cells: Dict[str, float] = {}
    with stopwatch() as elapsed:
        for a in grid.nodes:
            neighbours = [b + 1 for b in cartan.neighbours[a - 1] if b + 1 in grid.nodes]
            for s in range(grid.smax):
                first = grid(a, s, 1) * grid(a, s, -1)
                second = grid(a, s + 1) * grid(a, s - 1)
                rhs = np.ones(grid.samples, dtype=complex)
                for b in neighbours:
                    rhs = rhs * grid(b, s)
                if grid.factors is not None:
                    f, g = grid.factors(a, s)
                    second, rhs = f * second, g * rhs
                scale = np.abs(first) + np.abs(second) + np.abs(rhs)
                cells[f"{a},{s}"] = float(np.max(np.abs(first - second - rhs) / (1 + scale)))
    report = RelationReport.from_residuals(
        "hirota",
        "T_{a,s}^+ T_{a,s}^- - T_{a,s+1} T_{a,s-1} = prod_{b~a} T_{b,s}",
        cells.values(),
        settings.tol_relation,
        elapsed[0],
        {"cells": cells, "smax": grid.smax, "sourced": grid.factors is not None},
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, "hirota on %s: max residual %.2e over %d cells", cartan.spec.label, report.max_residual, len(cells))
    return report


# --- Character checks ---
def character_reports(system: ExtendedQSystem, smax: int, settings: Optional[Settings] = None) -> List[RelationReport]:
    """
    For a character system: T constant in u, equal to the KR characters, and
    Hirota on the grid.
    """
    settings = settings or Settings()
    grid = t_grid(system, smax, settings)
    logs = system.params.logs
    cartan = system.cartan
    constancy, matches = [], []
    values: Dict[str, List[float]] = {}
    with stopwatch() as elapsed:
        for a in grid.nodes:
            for s in range(smax + 1):
                t = grid(a, s)
                mean = complex(np.mean(t))
                constancy.append(float(np.max(np.abs(t - mean)) / (1 + abs(mean))))
                expected = kr_character(cartan, a, s, logs)
                matches.append(abs(mean - expected) / (1 + abs(expected)))
                values[f"{a},{s}"] = list(complex_pair(mean))
    details = {"values": values}
    if cartan.spec.series is Series.D:
        details["closed_form_deviation"] = closed_form_deviation(system)
    reports = [
        RelationReport.from_residuals(
            "character.constant", "T_{a,s} independent of u", constancy, settings.tol_relation, elapsed[0], details
        ),
        RelationReport.from_residuals(
            "character.kr",
            "T_{a,s} = sum of Weyl characters over the KR decomposition",
            matches,
            settings.tol_relation,
            elapsed[0],
        ),
        hirota_residual(grid, settings),
    ]
    return reports


def class_function_residual(cartan: CartanData, weight: Sequence[int], logs: np.ndarray) -> float:
    """Largest change of a Weyl character under the simple reflections acting on the twist."""
    logs = np.asarray(logs, dtype=complex)
    base = weyl_char_oracle(cartan, weight, logs)
    n = len(logs)
    moves = []
    for a in range(n - 1):
        perm = list(range(n))
        perm[a], perm[a + 1] = perm[a + 1], perm[a]
        moves.append(logs[perm])
    if cartan.spec.series is Series.D:
        flipped = logs.copy()
        flipped[n - 2 :] = -logs[[n - 1, n - 2]]
        moves.append(flipped)
    worst = 0.0
    for moved in moves:
        worst = max(worst, abs(weyl_char_oracle(cartan, weight, moved) - base) / (1 + abs(base)))
    return worst


__all__ = [
    "CharSolution",
    "E_CONJUGATE_NODES",
    "TGrid",
    "char_spinor",
    "char_tensor",
    "char_vector_coeffs",
    "character_by_weights",
    "character_reports",
    "character_system",
    "class_function_residual",
    "closed_form_deviation",
    "contragredient_node",
    "hirota_residual",
    "kr_character",
    "kr_weights",
    "random_twist",
    "spinor_weight",
    "t_from_q",
    "t_grid",
    "weyl_char_oracle",
]
