"""
Twisted polynomials f(u) = (prod x_j^{w_j})^{u/hbar} P(u), closed under the
shift f^{[n]}(u) = f(u + n hbar/2), plus Wronskians and the first-order
QQ difference-equation solver.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, Field

from qflag.errors import NoPolynomialSolution, SingularLinearSystem, TwistMismatch
from qflag.schemas import TwistedPolyModel, complex_pair, from_pair

logger = logging.getLogger(__name__)


# --- Twist parameters ---
@dataclass(frozen=True, eq=False)
class TwistParams:
    """Logarithms of the twist variables (principal branch) and the shift unit."""

    logs: np.ndarray
    hbar: complex = 1.0

    @classmethod
    def from_values(cls, xs: Sequence[complex], hbar: complex = 1.0) -> "TwistParams":
        xs = np.asarray(xs, dtype=complex)
        if np.any(xs == 0):
            raise ValueError("twist values must be nonzero")
        if hbar == 0:
            raise ValueError("hbar must be nonzero")
        return cls(logs=np.log(xs), hbar=complex(hbar))

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.logs)

    @property
    def roots(self) -> np.ndarray:
        """y_j with y_j^2 = x_j."""
        return np.exp(self.logs / 2)

    @property
    def nvars(self) -> int:
        return len(self.logs)


def _trim(coeffs: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    scale = max(np.abs(coeffs).max(initial=0.0), 1.0)
    n = len(coeffs)
    while n > 1 and abs(coeffs[n - 1]) <= tol * scale:
        n -= 1
    return coeffs[:n].copy()


# --- Twisted polynomials ---
@dataclass(frozen=True, eq=False)
class TwistedPoly:
    weights: np.ndarray
    coeffs: np.ndarray
    params: TwistParams = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    # constructors
    @classmethod
    def constant(cls, c: complex, params: TwistParams, weights: Optional[Sequence[float]] = None):
        w = np.zeros(params.nvars) if weights is None else weights
        return cls(weights=w, coeffs=np.array([c], dtype=complex), params=params)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], params: TwistParams, weights=None, lead: complex = 1.0):
        w = np.zeros(params.nvars) if weights is None else weights
        return cls(weights=w, coeffs=lead * P.polyfromroots(list(roots)) if len(roots) else np.array([lead]), params=params)

    # structure
    @property
    def twist_log(self) -> complex:
        return complex(self.weights @ self.params.logs) if self.params.nvars else 0j

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree < 0

    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    def __call__(self, u):
        u = np.asarray(u, dtype=complex)
        return np.exp(self.twist_log * u / self.params.hbar) * P.polyval(u, self.coeffs)

    # shift operator
    def shift(self, n: float) -> "TwistedPoly":
        if n == 0:
            return self
        c = n * self.params.hbar / 2
        shifted = self.poly()(Polynomial([c, 1.0]))
        prefactor = np.exp(n / 2 * self.twist_log)
        return TwistedPoly(self.weights, prefactor * shifted.coef, self.params)

    # algebra
    def __mul__(self, other):
        if isinstance(other, TwistedPoly):
            return TwistedPoly(self.weights + other.weights, P.polymul(self.coeffs, other.coeffs), self.params)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c: complex) -> "TwistedPoly":
        return TwistedPoly(self.weights, c * self.coeffs, self.params)

    def __neg__(self) -> "TwistedPoly":
        return self.scale(-1)

    def __add__(self, other: "TwistedPoly") -> "TwistedPoly":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if not np.allclose(self.weights, other.weights):
            raise TwistMismatch(f"cannot add twist weights {self.weights} and {other.weights}")
        return TwistedPoly(self.weights, P.polyadd(self.coeffs, other.coeffs), self.params)

    def __sub__(self, other: "TwistedPoly") -> "TwistedPoly":
        return self + (-other)

    def divide(self, other: "TwistedPoly", tol: float = 1e-8) -> "TwistedPoly":
        """Exact quotient; raises NoPolynomialSolution on a non-negligible remainder."""
        if other.is_zero:
            raise SingularLinearSystem("division by the zero function")
        quotient, remainder = P.polydiv(self.coeffs, other.coeffs)
        if np.abs(remainder).max() > tol * (1 + np.abs(self.coeffs).max()):
            raise NoPolynomialSolution(f"remainder {np.abs(remainder).max():.2e} in exact division")
        return TwistedPoly(self.weights - other.weights, quotient, self.params)

    def polynomial_roots(self) -> np.ndarray:
        """Zeros of the polynomial part (companion-matrix eigenvalues)."""
        if self.degree < 1:
            return np.array([], dtype=complex)
        return P.polyroots(self.coeffs)

    # serialization
    def to_model(self) -> TwistedPolyModel:
        return TwistedPolyModel(
            twist_weights=[float(w) for w in self.weights],
            coeffs=[complex_pair(c) for c in self.coeffs],
            hbar=complex_pair(self.params.hbar),
        )

    @classmethod
    def from_model(cls, model: TwistedPolyModel, params: TwistParams) -> "TwistedPoly":
        return cls(
            weights=np.array(model.twist_weights),
            coeffs=np.array([from_pair(c) for c in model.coeffs]),
            params=params,
        )


def zero_like(f: TwistedPoly, weights=None) -> TwistedPoly:
    return TwistedPoly(f.weights if weights is None else weights, np.zeros(1), f.params)


# --- Wronskians ---
def wronskian(fs: Sequence[TwistedPoly]) -> TwistedPoly:
    """W(f_1..f_k) = det f_a^{[k+1-2b]}, expanded by a subset recursion over rows."""
    k = len(fs)
    if k == 0:
        raise ValueError("Wronskian of no functions")
    params = fs[0].params
    total_weights = sum((f.weights for f in fs), np.zeros_like(fs[0].weights))
    if k == 1:
        return fs[0]
    hbar = params.hbar
    entries = []
    for f in fs:
        row = []
        for b in range(k):
            n = k - 1 - 2 * b
            shifted = f.poly()(Polynomial([n * hbar / 2, 1.0])).coef
            row.append(np.exp(n / 2 * f.twist_log) * shifted)
        entries.append(row)
    layer = {0: np.zeros(1, dtype=complex)}
    layer[0][0] = 1.0
    for b in range(k):
        nxt = {}
        for mask, acc in layer.items():
            for a in range(k):
                if mask >> a & 1:
                    continue
                sign = -1 if bin(mask >> (a + 1)).count("1") % 2 else 1
                term = sign * P.polymul(acc, entries[a][b])
                key = mask | (1 << a)
                nxt[key] = P.polyadd(nxt[key], term) if key in nxt else term
        layer = nxt
    return TwistedPoly(total_weights, layer[(1 << k) - 1], params)


def wronskian_values(values: np.ndarray) -> np.ndarray:
    """Batched determinant of pre-evaluated shifted entries [..., a, b]."""
    return np.linalg.det(values)


# --- First-order QQ solver ---
class QQSolveOptions(BaseModel):
    """
    Options for solving W(A, X) = B for the twisted polynomial X.
    """

    max_degree_slack: int = Field(default=0, ge=0, description="Extra degrees beyond the bound.")
    gauge: bool = Field(
        default=True,
        description="Zero the u^{deg A} coefficient of X when A and X carry equal twist.",
    )
    tol: float = Field(default=1e-9, gt=0, description="Relative residual accepted for the solve.")


def _qq_linear_system(
    a_fn: TwistedPoly, b_fn: TwistedPoly, opts: QQSolveOptions, x_weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Coefficient matrix and right-hand side of W(A, X) = B, plus the degree bound of X."""
    params = a_fn.params
    hbar = params.hbar
    t_x = complex(x_weights @ params.logs) if params.nvars else 0j
    rho = np.exp((a_fn.twist_log - t_x) / 2)
    a_plus = a_fn.poly()(Polynomial([hbar / 2, 1.0])).coef
    a_minus = a_fn.poly()(Polynomial([-hbar / 2, 1.0])).coef
    deg_a, deg_b = a_fn.degree, b_fn.degree
    d = max(deg_b - deg_a + 1, 0) + opts.max_degree_slack
    rows = deg_a + d + 1
    matrix = np.zeros((rows, d + 1), dtype=complex)
    for j in range(d + 1):
        down = P.polypow([-hbar / 2, 1.0], j)
        up = P.polypow([hbar / 2, 1.0], j)
        column = P.polysub(rho * P.polymul(a_plus, down), P.polymul(a_minus, up) / rho)
        matrix[: len(column), j] = column
    if len(b_fn.coeffs) > rows:
        raise NoPolynomialSolution(f"source degree {deg_b} exceeds the reachable degree {rows - 1}")
    rhs = np.zeros(rows, dtype=complex)
    rhs[: len(b_fn.coeffs)] = b_fn.coeffs
    if opts.gauge and abs(rho**2 - 1) < 1e-12 and d >= deg_a:
        gauge_row = np.zeros((1, d + 1), dtype=complex)
        gauge_row[0, deg_a] = 1.0
        matrix = np.vstack([matrix, gauge_row])
        rhs = np.append(rhs, 0.0)
    return matrix, rhs, d


def solve_first_order_qq(
    a_fn: TwistedPoly,
    b_fn: TwistedPoly,
    opts: Optional[QQSolveOptions] = None,
    x_weights: Optional[np.ndarray] = None,
) -> TwistedPoly:
    """
    Find X with W(A, X) = A^+ X^- - A^- X^+ = B.

    x_weights overrides the twist weights of X when they are only fixed modulo
    a direction on which the twist logarithms vanish.
    """
    opts = opts or QQSolveOptions()
    if a_fn.is_zero:
        raise SingularLinearSystem("first argument of the QQ equation vanishes")
    params = a_fn.params
    if x_weights is None:
        x_weights = b_fn.weights - a_fn.weights
    x_weights = np.asarray(x_weights, dtype=float)
    if b_fn.is_zero:
        return TwistedPoly(x_weights, np.zeros(1), params)
    matrix, rhs, d = _qq_linear_system(a_fn, b_fn, opts, x_weights)
    if np.linalg.matrix_rank(matrix) < d + 1:
        raise SingularLinearSystem(f"degenerate QQ system (rank < {d + 1}); input is not generic")
    solution, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
    residual = np.linalg.norm(matrix @ solution - rhs) / (1 + np.linalg.norm(rhs))
    if residual > opts.tol:
        raise NoPolynomialSolution(f"no polynomial solution of degree <= {d} (residual {residual:.2e})")
    logger.debug("QQ solve: deg A=%d deg B=%d -> deg X<=%d, residual %.1e", a_fn.degree, b_fn.degree, d, residual)
    return TwistedPoly(x_weights, solution, params)


def qq_obstruction(
    a_fn: TwistedPoly, b_fn: TwistedPoly, x_weights: np.ndarray, opts: Optional[QQSolveOptions] = None
) -> np.ndarray:
    """
    Least-squares residual of W(A, X) = B over polynomial X, scaled by |B|.

    It vanishes exactly when a polynomial X exists, which for A with simple
    zeros is the Bethe equation at every zero of A.
    """
    opts = opts or QQSolveOptions()
    matrix, rhs, _ = _qq_linear_system(a_fn, b_fn, opts, np.asarray(x_weights, dtype=float))
    solution, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
    return (matrix @ solution - rhs) / (1 + np.linalg.norm(rhs))


# --- Exact zero-twist mode ---
U = sympy.Symbol("u")


def _shift_exact(expr, n, hbar):
    return sympy.expand(expr.subs(U, U + sympy.Rational(n, 2) * hbar))


def wronskian_exact(polys: Sequence[sympy.Expr], hbar=sympy.Integer(1)) -> sympy.Expr:
    k = len(polys)
    matrix = sympy.Matrix(k, k, lambda a, b: _shift_exact(sympy.sympify(polys[a]), k - 1 - 2 * b, hbar))
    return sympy.expand(matrix.det(method="berkowitz"))


def solve_first_order_qq_exact(a_expr, b_expr, hbar=sympy.Integer(1), slack: int = 0) -> sympy.Expr:
    """Exact rational solve of W(A, X) = B for zero-twist polynomials, gauge fixed."""
    a_poly = sympy.Poly(sympy.sympify(a_expr), U)
    b_expr = sympy.sympify(b_expr)
    if b_expr == 0:
        return sympy.Integer(0)
    deg_a, deg_b = a_poly.degree(), sympy.Poly(b_expr, U).degree()
    d = max(deg_b - deg_a + 1, 0) + slack
    coeffs = sympy.symbols(f"c0:{d + 1}")
    x_expr = sum(c * U**j for j, c in enumerate(coeffs))
    equation = sympy.expand(wronskian_exact([a_poly.as_expr(), x_expr], hbar) - b_expr)
    conditions = sympy.Poly(equation, U).all_coeffs() if equation != 0 else []
    if d >= deg_a:
        conditions.append(coeffs[deg_a])
    solution = sympy.solve(conditions, coeffs, dict=True)
    if not solution:
        raise NoPolynomialSolution("no exact polynomial solution within the degree bound")
    x_solved = x_expr.subs(solution[0])
    free = x_solved.free_symbols & set(coeffs)
    if free:
        raise SingularLinearSystem(f"underdetermined exact QQ system: {sorted(map(str, free))}")
    return sympy.expand(x_solved)


def to_twisted(expr: sympy.Expr, params: TwistParams) -> TwistedPoly:
    coeffs = [complex(c) for c in reversed(sympy.Poly(expr, U).all_coeffs())] if expr != 0 else [0]
    return TwistedPoly(np.zeros(params.nvars), np.array(coeffs), params)


def relative_residual(lhs: np.ndarray, rhs: np.ndarray, scale: Optional[np.ndarray] = None) -> float:
    """max |lhs - rhs| / (1 + max magnitude) over sample points."""
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    magnitude = np.maximum(np.abs(lhs), np.abs(rhs)) if scale is None else np.abs(scale)
    return float(np.max(np.abs(lhs - rhs) / (1 + magnitude))) if lhs.size else 0.0


def sample_points(rng: np.random.Generator, count: int, spread: float = 1.5) -> np.ndarray:
    return rng.uniform(-spread, spread, size=count).astype(complex)
