"""Numerical evaluation of Q-system components at sample points, with shift caching."""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from qflag.lie_core import Weight
from qflag.qsystem.orbit import OrbitRelation, determinant_sign


class Evaluator:
    """
    Values of the base functions of a system at u + n hbar/2 for the sample
    points u, optionally rotated by a group element per base representation.

    Shifts are in units of hbar/2, so shift=2 is f^{[2]} = f(u + hbar).
    """

    def __init__(self, system, points: np.ndarray, rotations: Optional[Dict[str, np.ndarray]] = None):
        self.system = system
        self.points = np.asarray(points, dtype=complex)
        self.rotations = rotations or {}
        self._base: Dict[Tuple[str, float], np.ndarray] = {}

    @property
    def hbar(self) -> complex:
        return self.system.params.hbar

    def shifted(self, shift: float) -> np.ndarray:
        return self.points + shift * self.hbar / 2

    def function(self, f, shift: float = 0) -> np.ndarray:
        return f(self.shifted(shift))

    def base(self, name: str, shift: float = 0) -> np.ndarray:
        """(samples, dim) array of the standard base components."""
        key = (name, float(shift))
        if key not in self._base:
            u = self.shifted(shift)
            values = np.stack([f(u) for f in self.system.base[name]], axis=1)
            if name in self.rotations:
                values = values @ self.rotations[name].T
            self._base[key] = values
        return self._base[key]

    def wedge(self, name: str, positions: Sequence[int], shift: float = 0) -> np.ndarray:
        """Wronskian of base components at the given positions."""
        k = len(positions)
        if k == 0:
            return np.ones(len(self.points), dtype=complex)
        if k == 1:
            return self.base(name, shift)[:, positions[0]]
        entries = np.stack(
            [self.base(name, shift + k - 1 - 2 * b)[:, list(positions)] for b in range(k)], axis=2
        )
        return np.linalg.det(entries) / self.divisor(k, shift)

    def divisor(self, k: int, shift: float = 0) -> np.ndarray:
        """Source product dividing a k-fold Wronskian; ones for unsourced systems."""
        out = np.ones(len(self.points), dtype=complex)
        for a, n in self.system.divisor_factors(k):
            out = out * self.source(a, shift + n)
        return out

    def component(self, node: int, index: int, shift: float = 0) -> np.ndarray:
        orbit = self.system.orbits[node]
        if orbit.subsets is None:
            value = self.base(orbit.base, shift)[:, index]
        else:
            value = self.wedge(orbit.base, orbit.subsets[index], shift)
        return orbit.signs[index] * value

    def at(self, node: int, weight: Weight, shift: float = 0) -> np.ndarray:
        return self.component(node, self.system.orbits[node].index(weight), shift)

    def source(self, node: int, shift: float = 0) -> np.ndarray:
        if node in self.system.sources:
            return self.function(self.system.sources[node], shift)
        return np.ones(len(self.points), dtype=complex)

    def top(self, shift: float = 0) -> np.ndarray:
        if self.system.top is None:
            return np.ones(len(self.points), dtype=complex)
        return self.function(self.system.top, shift)

    def spinor(self, name: str, shift: float = 0) -> np.ndarray:
        """Chiral spinor placed in the full Dirac space, (samples, 2^r)."""
        r = self.system.rank
        node = r - 1 if name == "psi" else r
        embedding = self.system.orbits[node].rep.embedding
        out = np.zeros((len(self.points), 2**r), dtype=complex)
        out[:, embedding] = self.base(name, shift)
        return out


def qq_sides(ev: Evaluator, relation) -> Tuple[np.ndarray, np.ndarray]:
    """Both sides of an orbit QQ-relation at the sample points."""
    a = relation.node
    lhs = ev.at(a, relation.upper, 1) * ev.at(a, relation.lower, -1) - ev.at(a, relation.upper, -1) * ev.at(
        a, relation.lower, 1
    )
    rhs = relation.sign * ev.source(a)
    for b, w in relation.neighbours:
        rhs = rhs * ev.at(b, w)
    if relation.with_top:
        rhs = rhs * ev.top()
    return lhs, rhs


def identity_relation(ev: Evaluator, node: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sides of the highest-component relation W(Q_top, Q_{top - alpha}) = J prod Q_b,top."""
    cartan = ev.system.cartan
    orbit = ev.system.orbits[node]
    top = orbit.top
    with_top = ev.system.top is not None and node == cartan.rank
    relation = OrbitRelation(
        node=node,
        upper=top,
        lower=cartan.reflect(top, node - 1),
        neighbours=tuple((b + 1, ev.system.orbits[b + 1].top) for b in cartan.neighbours[node - 1]),
        sign=determinant_sign(ev.system.orbits) if with_top else 1,
        with_top=with_top,
    )
    return qq_sides(ev, relation)
