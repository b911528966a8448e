"""
A-series specifics: quantum eigenvalues along the nesting path Q_{12...a},
tableau, Wronskian and bilinear transfer matrices, the Baxter equation and its
conjugate, the Miura factorization, the companion-matrix oper and the nested
Bethe equations.

Transfer matrices are evaluated numerically at the sample points of an
Evaluator; every function takes a `shift` in units of hbar/2.
"""

import logging
from typing import Iterator, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from qflag.characters import TGrid, hirota_residual
from qflag.config import Settings
from qflag.errors import BruhatFactorizationError, InvalidAlgebraError, SchemaError
from qflag.lie_core import Series, build_cartan, parse_algebra
from qflag.qsystem import (
    Dressing,
    Evaluator,
    ExtendedQSystem,
    assemble_extended_A,
    hirota_factors,
    q_function,
    t_monomial,
    tensor_pairing_A,
)
from qflag.qsystem.dressing import combine, monomial
from qflag.rep_clifford import _permutation_sign
from qflag.schemas import RelationReport, stopwatch
from qflag.spectral import TwistedPoly, TwistParams, relative_residual, sample_points

logger = logging.getLogger(__name__)

MAX_OPER_RANK = 4
BETHE_TOL = 1e-7


# --- Young diagrams ---
class YoungDiagram(BaseModel):
    """A partition, rows listed from the top."""

    parts: List[int] = Field(default_factory=list, description="Weakly decreasing positive row lengths.")

    @field_validator("parts")
    @classmethod
    def _partition(cls, v: List[int]) -> List[int]:
        if any(p <= 0 for p in v):
            raise ValueError("row lengths must be positive")
        if any(a < b for a, b in zip(v, v[1:])):
            raise ValueError("row lengths must be weakly decreasing")
        return v

    @classmethod
    def rectangle(cls, a: int, s: int) -> "YoungDiagram":
        return cls(parts=[s] * a if s > 0 else [])

    @property
    def rows(self) -> int:
        return len(self.parts)

    @property
    def first_row(self) -> int:
        return self.parts[0] if self.parts else 0

    def padded(self, n: int) -> List[int]:
        if self.rows > n:
            raise SchemaError(f"diagram {self.parts} has more than {n} rows")
        return self.parts + [0] * (n - self.rows)

    def boxes(self) -> List[Tuple[int, int]]:
        """(row, column) pairs, 1-based, row by row."""
        return [(a + 1, s + 1) for a, length in enumerate(self.parts) for s in range(length)]

    def offset(self) -> int:
        """lambda_1 - lambda'_1, the shift separating the tableau and Wronskian conventions."""
        return self.first_row - self.rows


def semistandard_tableaux(diagram: YoungDiagram, n: int) -> Iterator[Tuple[int, ...]]:
    """Fillings with entries 1..n, rows weakly increasing and columns strictly increasing."""
    boxes = diagram.boxes()
    position = {box: k for k, box in enumerate(boxes)}
    filling = [0] * len(boxes)

    def fill(k: int) -> Iterator[Tuple[int, ...]]:
        if k == len(boxes):
            yield tuple(filling)
            return
        a, s = boxes[k]
        low = 1
        if s > 1:
            low = max(low, filling[position[(a, s - 1)]])
        if a > 1:
            low = max(low, filling[position[(a - 1, s)]] + 1)
        for entry in range(low, n + 1):
            filling[k] = entry
            yield from fill(k + 1)

    yield from fill(0)


# --- Systems ---
def _check_A(system: ExtendedQSystem) -> None:
    if system.series is not Series.A:
        raise InvalidAlgebraError(f"{system.spec.label} is not an A-series system")


def random_system_A(rank: int, rng: np.random.Generator, twisted: bool = False, hbar: complex = 1.0) -> ExtendedQSystem:
    """
    Random extended A_r system. Untwisted single-box functions of degrees
    r, r-1, ..., 0 have a constant Wronskian, so the system is normalized. A
    twisted draw has sum(logs) = 0 and keeps its polynomial Wronskian as top.
    """
    cartan = build_cartan(parse_algebra("A", rank))
    n = rank + 1
    logs = np.zeros(n, dtype=complex)
    if twisted:
        logs = rng.normal(size=n) + 1j * rng.uniform(-0.5, 0.5, size=n)
        logs -= logs.mean()
    params = TwistParams(logs=logs, hbar=complex(hbar))
    singles = []
    for i in range(n):
        degree = int(rng.integers(0, 3)) if twisted else n - 1 - i
        coeffs = np.append(rng.normal(size=degree) + 1j * rng.normal(size=degree), 1.0)
        singles.append(TwistedPoly(np.eye(n)[i], coeffs, params))
    return assemble_extended_A(cartan, singles)


def nesting(ev: Evaluator, a: int, shift: float = 0) -> np.ndarray:
    """Q_{12...a} at the sample points; Q_{empty} = 1 and Q_{1...r+1} is the full Wronskian."""
    return ev.wedge("singles", list(range(a)), shift)


class QuantumEigenvalues:
    """
    Lambda_a = (Q_a^+ Q_{a-1}^{[-2]} / (Q_a^- Q_{a-1}))^{[(r+1)/2 - a]} with Q_a
    the nesting-path functions.
    """

    def __init__(self, ev: Evaluator):
        self.ev = ev
        self.n = ev.system.rank + 1

    def __call__(self, a: int, shift: float = 0) -> np.ndarray:
        if not 1 <= a <= self.n:
            raise SchemaError(f"quantum eigenvalue index {a} outside 1..{self.n}")
        c = shift + self.n / 2 - a
        num = nesting(self.ev, a, c + 1) * nesting(self.ev, a - 1, c - 2)
        den = nesting(self.ev, a, c - 1) * nesting(self.ev, a - 1, c)
        return num / den

    def all(self, shift: float = 0) -> np.ndarray:
        return np.stack([self(a, shift) for a in range(1, self.n + 1)], axis=1)


def quantum_eigenvalues(system: ExtendedQSystem, points: np.ndarray) -> QuantumEigenvalues:
    _check_A(system)
    return QuantumEigenvalues(Evaluator(system, points))


# --- Transfer matrices ---
def tableau_T(diagram: YoungDiagram, lam: QuantumEigenvalues, shift: float = 0) -> np.ndarray:
    """T_lambda^{[shift]} as a sum over semistandard tableaux of shifted quantum eigenvalues."""
    n = lam.n
    diagram.padded(n)
    base = shift - (diagram.offset() - 1)
    boxes = diagram.boxes()
    total = np.zeros(len(lam.ev.points), dtype=complex)
    if not boxes:
        return total + 1
    for filling in semistandard_tableaux(diagram, n):
        term = np.ones(len(lam.ev.points), dtype=complex)
        for (a, s), entry in zip(boxes, filling):
            term = term * lam(n + 1 - entry, base + 2 * (s - a))
        total += term
    return total


def wronskian_T(diagram: YoungDiagram, ev: Evaluator, shift: float = 0) -> np.ndarray:
    """T_lambda^{[shift]} = det Q_a^{[2(lambda_b + 1 - b)]}, moved by the diagram offset."""
    n = ev.system.rank + 1
    parts = diagram.padded(n)
    base = shift - (diagram.offset() + 1 - n / 2)
    rows = [ev.base("singles", base + 2 * (parts[b] - b)) for b in range(n)]
    return np.linalg.det(np.stack(rows, axis=1))


def bilinear_T(ev: Evaluator, a: int, s: float, shift: float = 0) -> np.ndarray:
    """T_{a,s} = sum_{|A|=a} Q_A^{[s+(r+1)/2]} Q^A^{[-s-(r+1)/2]}."""
    value, _ = tensor_pairing_A(ev, a, s, shift)
    return value


def hodge_values(ev: Evaluator, b: int, shift: float = 0) -> np.ndarray:
    """Q^b = sign(b, rest) Q_rest for a 0-based label b."""
    n = ev.system.rank + 1
    rest = [i for i in range(n) if i != b]
    return _permutation_sign([b] + rest) * ev.wedge("singles", rest, shift)


# --- Reports ---
def _report(relation: str, anchor: str, residuals, tolerance: float, elapsed: float, details=None) -> RelationReport:
    report = RelationReport.from_residuals(relation, anchor, residuals, tolerance, elapsed, details)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, "%s: max residual %.2e", relation, report.max_residual)
    return report


def _vanishing(value: np.ndarray, scale: np.ndarray) -> float:
    return float(np.max(np.abs(value) / (1 + scale)))


def _evaluator(system: ExtendedQSystem, settings: Settings, stream: int) -> Evaluator:
    return Evaluator(system, sample_points(settings.rng(stream), settings.samples))


def t_equality(system: ExtendedQSystem, settings: Optional[Settings] = None, smax: int = 2) -> List[RelationReport]:
    """Tableau, Wronskian and bilinear transfer matrices agree on rectangles; tableau = Wronskian on random shapes."""
    settings = settings or Settings()
    _check_A(system)
    ev = _evaluator(system, settings, 20)
    lam = QuantumEigenvalues(ev)
    n = system.rank + 1
    rectangles, shapes = [], []
    with stopwatch() as elapsed:
        for a in range(1, n):
            for s in range(1, smax + 1):
                diagram = YoungDiagram.rectangle(a, s)
                bilinear = bilinear_T(ev, a, s)
                rectangles.append(relative_residual(tableau_T(diagram, lam), bilinear))
                rectangles.append(relative_residual(wronskian_T(diagram, ev), bilinear))
        rng = settings.rng(21)
        for _ in range(3):
            rows = int(rng.integers(1, n + 1))
            parts = sorted(rng.integers(1, 4, size=rows).tolist(), reverse=True)
            diagram = YoungDiagram(parts=parts)
            shapes.append(relative_residual(tableau_T(diagram, lam), wronskian_T(diagram, ev)))
    return [
        _report(
            "aseries.T-rectangle",
            "tableau sum = det Q_a^{[2(lambda_b+1-b)]} = sum_A Q_A Q^A for lambda = (s^a)",
            rectangles,
            settings.tol_relation,
            elapsed[0],
        ),
        _report(
            "aseries.T-shapes",
            "tableau sum = Wronskian determinant for random diagrams",
            shapes,
            settings.tol_relation,
            elapsed[0],
        ),
    ]


def baxter_residual(system: ExtendedQSystem, settings: Optional[Settings] = None) -> List[RelationReport]:
    """
    sum_a (-1)^a T_(a)^{[-a]} Q_b^{[(r+1)/2 - 2a]} = 0 for each single-box Q_b, and the
    conjugate sum_a (-1)^a T_(a)^{[a]} Q^{b[2a - (r+1)/2]} = 0 for each Hodge dual.

    With sources the direct equation holds for undivided Wronskians, so each
    T_(a) is multiplied back by its divisors; conjugate terms are weighted by
    dressing ratios against the a = 0 term.
    """
    settings = settings or Settings()
    _check_A(system)
    ev = _evaluator(system, settings, 22)
    dressing = Dressing(ev)
    n = system.rank + 1
    half = n / 2
    direct, conjugate = [], []
    with stopwatch() as elapsed:
        transfer = {(a, sign): bilinear_T(ev, a, 1, sign * a) for a in range(n + 1) for sign in (1, -1)}
        divisors = [ev.divisor(a, 1 + half - a) * ev.divisor(n - a, -a - 1 - half) for a in range(n + 1)]

        def conjugate_monomial(a):
            mono = t_monomial(system, a, 1, a)
            mono.update(monomial((n - 1, 2 * a - half, 1)))
            return mono

        weights = [dressing(combine(conjugate_monomial(0), conjugate_monomial(a))) for a in range(n + 1)]
        for b in range(n):
            total = np.zeros(len(ev.points), dtype=complex)
            scale = np.zeros(len(ev.points))
            for a in range(n + 1):
                term = (-1) ** a * transfer[(a, -1)] * divisors[a] * ev.base("singles", half - 2 * a)[:, b]
                total += term
                scale += np.abs(term)
            direct.append(_vanishing(total, scale))
            total = np.zeros(len(ev.points), dtype=complex)
            scale = np.zeros(len(ev.points))
            for a in range(n + 1):
                term = (-1) ** a * transfer[(a, 1)] * weights[a] * hodge_values(ev, b, 2 * a - half)
                total += term
                scale += np.abs(term)
            conjugate.append(_vanishing(total, scale))
    return [
        _report(
            "aseries.baxter",
            "sum_a (-1)^a D^-a T_(a) D^-a Q^{[(r+1)/2]} = 0",
            direct,
            settings.tol_relation,
            elapsed[0],
            {"sourced": not dressing.trivial},
        ),
        _report(
            "aseries.baxter-conjugate",
            "Q^{b[-(r+1)/2]} sum_a (-1)^a <-D^-a T_(a) <-D^-a = 0",
            conjugate,
            settings.tol_relation,
            elapsed[0],
            {"sourced": not dressing.trivial},
        ),
    ]


def miura_residual(system: ExtendedQSystem, settings: Optional[Settings] = None) -> RelationReport:
    """(1 - Lambda_{r+1} D^-2) ... (1 - Lambda_1 D^-2) Q_b^{[(r+1)/2]} = 0 for every b."""
    settings = settings or Settings()
    _check_A(system)
    ev = _evaluator(system, settings, 23)
    lam = QuantumEigenvalues(ev)
    n = lam.n
    residuals = []

    def factor(inner, a):
        def apply(shift):
            value, scale = inner(shift)
            lower, lower_scale = inner(shift - 2)
            coefficient = lam(a, shift)
            return value - coefficient * lower, scale + np.abs(coefficient) * lower_scale

        return apply

    with stopwatch() as elapsed:
        for b in range(n):

            def start(shift, b=b):
                value = ev.base("singles", n / 2 + shift)[:, b]
                return value, np.abs(value)

            operator = start
            for a in range(1, n + 1):
                operator = factor(operator, a)
            residuals.append(_vanishing(*operator(0)))
    return _report(
        "aseries.miura",
        "(1 - Lambda_{r+1} D^-2) ... (1 - Lambda_1 D^-2) Q_b^{[(r+1)/2]} = 0",
        residuals,
        settings.tol_relation,
        elapsed[0],
    )


# --- Companion-matrix oper ---
def companion_matrix(ev: Evaluator) -> np.ndarray:
    """
    U with Phi^{++} = U Phi for Phi rows Q^{b[r-2k]}; top row from the conjugate
    Baxter equation, ones on the subdiagonal. Shape (samples, r+1, r+1).

    Top-row entries carry the dressing ratio sigma_r^{[r+2]} / sigma_r^{[r-2k]}
    over the dressing of T_(a), which is one for unsourced systems.
    """
    system = ev.system
    dressing = Dressing(ev)
    n = system.rank + 1
    out = np.zeros((len(ev.points), n, n), dtype=complex)
    for k in range(n):
        a = n - 1 - k
        shift = a + 1 - n / 2
        below = t_monomial(system, a, 1, shift)
        below.update(monomial((n - 1, n - 1 - 2 * k, 1)))
        factor = dressing(combine(monomial((n - 1, n + 1, 1)), below))
        out[:, 0, k] = (-1) ** (n + 1 + a) * bilinear_T(ev, a, 1, shift) * factor
    for k in range(n - 1):
        out[:, k + 1, k] = 1
    return out


def solution_matrix(ev: Evaluator, shift: float = 0) -> np.ndarray:
    n = ev.system.rank + 1
    rows = [np.stack([hodge_values(ev, b, shift + n - 1 - 2 * k) for b in range(n)], axis=1) for k in range(n)]
    return np.stack(rows, axis=1)


def coxeter_permutation(n: int) -> np.ndarray:
    """Cyclic permutation matrix with ones at (k+1, k) and (0, n-1)."""
    out = np.zeros((n, n))
    out[0, n - 1] = 1
    for k in range(n - 1):
        out[k + 1, k] = 1
    return out


def bruhat_decompose(matrix: np.ndarray, tol: float = 1e-10) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    M = n w b with n unipotent upper-triangular, w a permutation matrix and b
    upper-triangular invertible, by Gaussian elimination: the pivot of each
    column is its lowest nonzero entry.
    """
    work = np.array(matrix, dtype=complex)
    size = work.shape[0]
    rows = np.eye(size, dtype=complex)
    columns = np.eye(size, dtype=complex)
    w = np.zeros((size, size))
    threshold = tol * max(float(np.abs(work).max()), 1.0)
    for j in range(size):
        nonzero = np.flatnonzero(np.abs(work[:, j]) > threshold)
        if not len(nonzero):
            raise BruhatFactorizationError(f"column {j} has no pivot; the matrix is degenerate")
        i = int(nonzero.max())
        w[i, j] = 1
        for k in nonzero[nonzero < i]:
            step = np.eye(size, dtype=complex)
            step[k, i] = -work[k, j] / work[i, j]
            work = step @ work
            rows = step @ rows
        for c in range(j + 1, size):
            step = np.eye(size, dtype=complex)
            step[j, c] = -work[i, c] / work[i, j]
            work = work @ step
            columns = columns @ step
        step = np.eye(size, dtype=complex)
        step[j, j] = 1 / work[i, j]
        work = work @ step
        columns = columns @ step
    return np.linalg.inv(rows), w, np.linalg.inv(columns)


def oper_companion_check(system: ExtendedQSystem, settings: Optional[Settings] = None) -> RelationReport:
    """Phi^{++} = U Phi and a Bruhat certificate U = n s b with s the Coxeter permutation."""
    settings = settings or Settings()
    _check_A(system)
    if system.rank > MAX_OPER_RANK:
        raise InvalidAlgebraError(f"companion-matrix checks are limited to rank <= {MAX_OPER_RANK}")
    ev = _evaluator(system, settings, 24)
    n = system.rank + 1
    coxeter = coxeter_permutation(n)
    residuals = []
    with stopwatch() as elapsed:
        u = companion_matrix(ev)
        phi = solution_matrix(ev)
        phi_up = solution_matrix(ev, 2)
        residuals.append(relative_residual(phi_up, u @ phi))
        for sample in u:
            left, w, right = bruhat_decompose(sample)
            if not np.array_equal(w, coxeter):
                raise BruhatFactorizationError("the companion matrix is not in the Coxeter Bruhat cell")
            residuals.append(relative_residual(left @ w @ right, sample))
            residuals.append(float(np.abs(np.tril(left, -1)).max() + np.abs(np.diag(left) - 1).max()))
    return _report(
        "aseries.oper",
        "Phi^{++} = U Phi with U in the Bruhat cell B s B of a Coxeter element",
        residuals,
        settings.tol_relation,
        elapsed[0],
        {"coxeter": coxeter.astype(int).tolist()},
    )


# --- Bethe equations ---
def nested_bethe_residual_A(system: ExtendedQSystem, settings: Optional[Settings] = None) -> RelationReport:
    """
    Q_{a-1}^+ Q_{a+1}^+ Q_a^{[-2]} / (Q_{a-1}^- Q_{a+1}^- Q_a^{[2]}) = -1 at the zeros
    of each nesting-path function Q_a.
    """
    settings = settings or Settings()
    _check_A(system)
    n = system.rank + 1
    hbar = system.params.hbar
    path = [q_function(system, range(1, a + 1)) for a in range(n + 1)]
    residuals, counts = [], {}
    with stopwatch() as elapsed:
        for a in range(1, n):
            roots = path[a].polynomial_roots()
            counts[a] = len(roots)
            if not len(roots):
                continue

            def at(f, k):
                return f(roots + k * hbar / 2)

            num = at(path[a - 1], 1) * at(path[a + 1], 1) * at(path[a], -2)
            den = at(path[a - 1], -1) * at(path[a + 1], -1) * at(path[a], 2)
            residuals.extend(np.abs(num / den + 1).tolist())
    tolerance = max(settings.tol_relation, BETHE_TOL)
    return _report(
        "aseries.bethe",
        "nested Bethe equations at the zeros of Q_{12...a}",
        residuals,
        tolerance,
        elapsed[0],
        {"roots": counts},
    )


# --- Hirota ---
def hirota_grid_A(system: ExtendedQSystem, smax: int, settings: Optional[Settings] = None) -> TGrid:
    """Bilinear T_{a,s} for a = 1..r, s = 0..smax as a grid for hirota_residual."""
    settings = settings or Settings()
    _check_A(system)
    ev = _evaluator(system, settings, 25)
    return TGrid(
        cartan=system.cartan,
        smax=smax,
        samples=len(ev.points),
        value=lambda a, s, shift: bilinear_T(ev, a, s, shift),
        factors=hirota_factors(ev) if system.sourced or system.sources else None,
    )


def tcheck(system: ExtendedQSystem, settings: Optional[Settings] = None) -> List[RelationReport]:
    """Every A-series consistency check on one system."""
    settings = settings or Settings()
    reports = t_equality(system, settings)
    reports += baxter_residual(system, settings)
    reports.append(miura_residual(system, settings))
    if system.rank <= MAX_OPER_RANK:
        reports.append(oper_companion_check(system, settings))
    reports.append(nested_bethe_residual_A(system, settings))
    reports.append(hirota_residual(hirota_grid_A(system, 3, settings), settings))
    return reports


__all__ = [
    "QuantumEigenvalues",
    "YoungDiagram",
    "baxter_residual",
    "bilinear_T",
    "bruhat_decompose",
    "companion_matrix",
    "coxeter_permutation",
    "hirota_grid_A",
    "hodge_values",
    "miura_residual",
    "nested_bethe_residual_A",
    "nesting",
    "oper_companion_check",
    "quantum_eigenvalues",
    "random_system_A",
    "semistandard_tableaux",
    "solution_matrix",
    "t_equality",
    "tableau_T",
    "tcheck",
    "wronskian_T",
]
