"""
Source dressing of Q-systems.

A sourced system is Q = sigma q with q an unsourced system of the same
algebra: sigma_a^+ sigma_a^- = J_a prod_{b~a} sigma_b, that is
log sigma = C(D)^{-1} log J with C(D) = D + D^{-1} - adjacency and D the unit
shift. On the A series the last node also sees the determinant, so J_r is
replaced by J_r Q_{r+1}, and sigma_{r+1} = Q_{r+1}, sigma_0 = 1.

Products of sigma's met in relations reduce to finite products of shifted
sources. A monomial maps (node, 2 * shift) to an exponent; shifts are in units
of hbar/2 and may be half-integers, hence the doubled key.
"""

import logging
from collections import Counter
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import sympy

from qflag.errors import DressingError
from qflag.lie_core import Series, build_cartan, parse_algebra
from qflag.qsystem.evaluator import Evaluator

logger = logging.getLogger(__name__)

W = sympy.Symbol("w")  # D = w^2

Monomial = Counter


def _twice(shift: float) -> int:
    twice = 2 * shift
    if abs(twice - round(twice)) > 1e-9:
        raise DressingError(f"shift {shift} is not a multiple of 1/2")
    return int(round(twice))


def monomial(*terms: Tuple[int, float, int]) -> Monomial:
    """Monomial from (node, shift, exponent) triples; node 0 is dropped."""
    out: Monomial = Counter()
    for node, shift, power in terms:
        if node:
            out[(node, _twice(shift))] += power
    return out


def combine(plus: Monomial, minus: Optional[Monomial] = None) -> Monomial:
    """plus - minus, keeping negative exponents."""
    out = Counter(plus)
    if minus:
        out.subtract(minus)
    return out


# --- Deformed Cartan matrix ---
@lru_cache(maxsize=None)
def _cartan_inverse(series: str, rank: int) -> sympy.Matrix:
    """C(w^2)^{-1} = w^2 adj(M) / det(M) with M = (w^4 + 1) I - w^2 adjacency."""
    cartan = build_cartan(parse_algebra(series, rank)).cartan
    adjacency = sympy.Matrix((2 * np.eye(rank, dtype=int) - np.asarray(cartan, dtype=int)).tolist())
    m = (W**4 + 1) * sympy.eye(rank) - W**2 * adjacency
    det = m.det(method="berkowitz")
    return (W**2 * m.adjugate(method="berkowitz") / det).applyfunc(sympy.cancel)


def _laurent(expr: sympy.Expr) -> Dict[int, int]:
    expr = sympy.cancel(sympy.together(expr))
    if expr == 0:
        return {}
    num, den = sympy.fraction(expr)
    den = sympy.Poly(den, W)
    if len(den.terms()) != 1:
        raise DressingError(f"{expr} is not a finite product of shifted sources")
    (power,), scale = den.terms()[0]
    out = {}
    for (k,), c in sympy.Poly(num, W).terms():
        value = sympy.Rational(c) / sympy.Rational(scale)
        if value == 0:
            continue
        if not value.is_integer:
            raise DressingError(f"fractional source exponent {value} in {expr}")
        out[int(k) - int(power)] = int(value)
    return out


@lru_cache(maxsize=None)
def source_exponents(
    series: str, rank: int, key: Tuple[Tuple[int, int, int], ...]
) -> Tuple[Tuple[int, int, int], ...]:
    """
    (node, 2 * shift, exponent) of the effective sources in prod sigma, for a
    monomial given as sorted (node, 2 * shift, exponent) triples.
    """
    inverse = _cartan_inverse(series, rank)
    row = sympy.zeros(1, rank)
    for node, twice, power in key:
        row[0, node - 1] += power * W**twice
    row = row * inverse
    out = []
    for b in range(rank):
        for k, c in sorted(_laurent(row[0, b]).items()):
            out.append((b + 1, k, c))
    return tuple(out)


# --- Evaluation ---
class Dressing:
    """prod sigma for monomials at the sample points of one evaluator."""

    def __init__(self, ev: Evaluator):
        self.ev = ev
        system = ev.system
        self.series = system.series
        self.rank = system.rank
        self.trivial = not system.sources and not system.sourced
        self.top_node = self.rank + 1 if self.series is Series.A else None

    def ones(self) -> np.ndarray:
        return np.ones(len(self.ev.points), dtype=complex)

    def effective_source(self, node: int, shift: float) -> np.ndarray:
        value = self.ev.source(node, shift)
        if self.top_node is not None and node == self.rank:
            value = value * self.ev.top(shift)
        return value

    def __call__(self, mono: Monomial) -> np.ndarray:
        out = self.ones()
        if self.trivial:
            return out
        key = []
        for (node, twice), power in sorted(mono.items()):
            if power == 0:
                continue
            if node == self.top_node:
                out = out * self.ev.top(twice / 2) ** power
            else:
                key.append((node, twice, power))
        if not key:
            return out
        for node, twice, power in source_exponents(self.series.value, self.rank, tuple(key)):
            out = out * self.effective_source(node, twice / 2) ** power
        return out


# --- Monomials of T-functions ---
def spinor_node(rank: int, name: str) -> int:
    return rank - 1 if name == "psi" else rank


def t_monomial(system, a: int, s: float, shift: float = 0) -> Monomial:
    """Dressing monomial of the bilinear T_{a,s}^{[shift]}, as paired by t_from_q."""
    r = system.rank
    if system.series is Series.A:
        n = r + 1
        return monomial((a, shift + s + n / 2, 1), (n - a, shift - s - n / 2, 1))
    h = r - 1
    if a <= r - 2:
        return monomial((a, shift + s + h, 1), (a, shift - s - h, 1))
    dual = a if r % 2 == 0 else 2 * r - 1 - a
    m = s + h
    return monomial((dual, shift - m, 1), (a, shift + m, 1))


def hirota_factors(ev: Evaluator) -> Callable[[int, int], Tuple[np.ndarray, np.ndarray]]:
    """
    Per-cell factors (f, g) turning the unsourced Hirota equation into
    T^+ T^- - f T_{s+1} T_{s-1} = g prod_b T_{b,s} for a sourced system.
    """
    dressing = Dressing(ev)
    system = ev.system
    cartan = system.cartan

    def factors(a: int, s: int) -> Tuple[np.ndarray, np.ndarray]:
        if dressing.trivial:
            return dressing.ones(), dressing.ones()
        both = Counter(t_monomial(system, a, s, 1))
        both.update(t_monomial(system, a, s, -1))
        second = dressing.ones()
        if s > 0:
            sides = t_monomial(system, a, s + 1)
            sides.update(t_monomial(system, a, s - 1))
            second = dressing(combine(both, sides))
        neighbours: Monomial = Counter()
        for b in cartan.neighbours[a - 1]:
            neighbours.update(t_monomial(system, b + 1, s))
        return second, dressing(combine(both, neighbours))

    return factors


def fusion_factor(ev: Evaluator, k: int, left: str, right: str, m: float) -> np.ndarray:
    """
    V_I over chi^{[-m]} C Gamma_I chi'^{[m]} dressings for |I| = k: the k-fold
    vector Wronskian carries prod_b sigma_1^{[k-1-2b]} / G_k.
    """
    dressing = Dressing(ev)
    if dressing.trivial:
        return dressing.ones()
    r = ev.system.rank
    mono = monomial(*[(1, k - 1 - 2 * b, 1) for b in range(k)])
    mono = combine(mono, monomial((spinor_node(r, left), -m, 1), (spinor_node(r, right), m, 1)))
    return dressing(mono) / ev.divisor(k)


__all__ = [
    "Dressing",
    "Monomial",
    "combine",
    "fusion_factor",
    "hirota_factors",
    "monomial",
    "source_exponents",
    "spinor_node",
    "t_monomial",
]
