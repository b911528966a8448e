"""
Exact matrix representations: Chevalley generators for the A-series defining
representation, the D-series vector and spinor representations, exterior
powers, gamma matrices with charge conjugation, and Weyl-group
representatives with their sign bookkeeping.

Generator matrices are int64 and every identity below is checked with zero
residual. The spinor charge conjugation matrix is real in the Kronecker basis
used here, so no Gaussian rationals are needed.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations
from math import factorial
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from qflag.errors import NonReducedWord, OrbitReconstructionError, QFlagError
from qflag.lie_core import (
    CartanData,
    HeightFunction,
    Weight,
    alternating_height,
    lambda_spectrum,
    match_up_to_similarity,
    multiset_distance,
    pf_vector,
    weight_system_of,
)
from qflag.schemas import RelationReport, stopwatch

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]


# --- Matrix representations ---
@dataclass(frozen=True, eq=False)
class MatrixRep:
    """
    Chevalley generators e_a, f_a, h_a = [e_a, f_a] on a weight basis.
    """

    name: str
    cartan: CartanData = field(repr=False)
    e: Tuple[np.ndarray, ...] = field(repr=False)
    f: Tuple[np.ndarray, ...] = field(repr=False)
    embedding: Optional[np.ndarray] = field(default=None, repr=False)
    orbit_words: Dict[int, Word] = field(default_factory=dict, repr=False)
    orbit_signs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.e[0].shape[0]

    @cached_property
    def h(self) -> Tuple[np.ndarray, ...]:
        return tuple(e @ f - f @ e for e, f in zip(self.e, self.f))

    @cached_property
    def weights(self) -> np.ndarray:
        """dim x rank array of Dynkin labels per basis vector."""
        return np.stack([np.diag(h) for h in self.h], axis=1)

    def weight(self, i: int) -> Weight:
        return tuple(int(x) for x in self.weights[i])

    @cached_property
    def highest(self) -> int:
        """Index of the highest-weight basis vector."""
        weights = self.weights
        for i in range(self.dim):
            if all(not e[:, i].any() for e in self.e) and (weights[i] >= 0).all():
                return i
        raise QFlagError(f"{self.name}: no highest-weight basis vector")

    @property
    def highest_weight(self) -> Weight:
        return self.weight(self.highest)

    def index_of(self, weight: Sequence[int]) -> int:
        target = np.asarray(weight)
        hits = np.flatnonzero((self.weights == target).all(axis=1))
        if len(hits) != 1:
            raise QFlagError(f"{self.name}: weight {tuple(weight)} has multiplicity {len(hits)}")
        return int(hits[0])

    def orbit_indices(self) -> List[int]:
        orbit = set(self.cartan.orbit(self.highest_weight))
        return [i for i in range(self.dim) if self.weight(i) in orbit]


def check_chevalley(rep: MatrixRep) -> RelationReport:
    """[h_a, e_b] = C_ab e_b, [h_a, f_b] = -C_ab f_b, [e_a, f_b] = 0 for a != b, h diagonal."""
    cartan = rep.cartan.cartan
    residuals = []
    with stopwatch() as elapsed:
        hs = rep.h
        for a, h in enumerate(hs):
            residuals.append(np.abs(h - np.diag(np.diag(h))).max())
            for b in range(rep.cartan.rank):
                residuals.append(np.abs(h @ rep.e[b] - rep.e[b] @ h - cartan[a, b] * rep.e[b]).max())
                residuals.append(np.abs(h @ rep.f[b] - rep.f[b] @ h + cartan[a, b] * rep.f[b]).max())
                if a != b:
                    residuals.append(np.abs(rep.e[a] @ rep.f[b] - rep.f[b] @ rep.e[a]).max())
    return RelationReport.from_residuals(
        f"chevalley.{rep.name}",
        "Chevalley commutation relations, exact",
        residuals,
        0.5,
        elapsed=elapsed[0],
        details={"dim": rep.dim},
    )


# --- A series ---
def _unit(n: int, i: int, j: int, value: int = 1) -> np.ndarray:
    m = np.zeros((n, n), dtype=np.int64)
    m[i, j] = value
    return m


def defining_rep_A(cartan: CartanData) -> MatrixRep:
    n = cartan.rank + 1
    e = tuple(_unit(n, a, a + 1) for a in range(cartan.rank))
    f = tuple(_unit(n, a + 1, a) for a in range(cartan.rank))
    return MatrixRep(name="defining", cartan=cartan, e=e, f=f)


# --- D series vector ---
def vector_position(r: int, i: int) -> int:
    """Basis order 1..r, -r..-1."""
    return i - 1 if i > 0 else 2 * r + i


def vector_metric(r: int) -> np.ndarray:
    g = np.zeros((2 * r, 2 * r), dtype=np.int64)
    for i in list(range(1, r + 1)) + list(range(-r, 0)):
        g[vector_position(r, i), vector_position(r, -i)] = 1
    return g


def _so_generator(r: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((2 * r, 2 * r), dtype=np.int64)
    m[vector_position(r, i), vector_position(r, -j)] += 1
    m[vector_position(r, j), vector_position(r, -i)] -= 1
    return m


def vector_rep_D(cartan: CartanData) -> MatrixRep:
    r = cartan.rank
    e = [_so_generator(r, a, -(a + 1)) for a in range(1, r)]
    f = [_so_generator(r, a + 1, -a) for a in range(1, r)]
    e.append(_so_generator(r, r - 1, r))
    f.append(_so_generator(r, -r, -(r - 1)))
    return MatrixRep(name="vector", cartan=cartan, e=tuple(e), f=tuple(f))


def metric_residual(rep: MatrixRep) -> int:
    g = vector_metric(rep.cartan.rank)
    return int(max(np.abs(x.T @ g + g @ x).max() for x in rep.e + rep.f))


# --- Gamma matrices ---
_SZ = np.array([[1, 0], [0, -1]], dtype=np.int64)
_SMINUS = np.array([[0, 0], [1, 0]], dtype=np.int64)
_SPLUS = np.array([[0, 1], [0, 0]], dtype=np.int64)
_ID2 = np.eye(2, dtype=np.int64)


def _kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.int64)
    for m in factors:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True, eq=False)
class GammaSet:
    """
    Gamma_i for i in +-1..+-r acting on kets |s_1 ... s_r>, with
    ket index sum(bit_a 2^{r-a}) and bit 1 meaning a minus sign.
    """

    rank: int
    gammas: Dict[int, np.ndarray] = field(repr=False)
    charge_conjugation: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2**self.rank

    def __getitem__(self, i: int) -> np.ndarray:
        return self.gammas[i]

    def antisym(self, indices: Sequence[int]) -> np.ndarray:
        """Totally antisymmetrized product Gamma_{[i_1 ... i_k]} (float, entries in halves)."""
        indices = list(indices)
        if len(set(indices)) != len(indices):
            return np.zeros((self.dim, self.dim))
        paired = sorted({abs(i) for i in indices if -i in indices})
        unpaired = [i for i in indices if abs(i) not in paired]
        grouped = unpaired + [x for p in paired for x in (p, -p)]
        sign = _permutation_sign([indices.index(x) for x in grouped])
        out = np.eye(self.dim)
        for i in unpaired:
            out = out @ self.gammas[i]
        for p in paired:
            g, gbar = self.gammas[p], self.gammas[-p]
            out = out @ (0.5 * (g @ gbar - gbar @ g))
        return sign * out

    def bilinear(self, chi: np.ndarray, indices: Sequence[int], chi_prime: np.ndarray) -> np.ndarray:
        """chi^T C Gamma_I chi' over the trailing axis, broadcasting leading axes."""
        m = self.charge_conjugation @ self.antisym(indices)
        return np.einsum("...i,ij,...j->...", chi, m, chi_prime)


def _permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def gamma_set(r: int) -> GammaSet:
    if r < 2:
        raise QFlagError("gamma matrices need r >= 2")
    gammas = {}
    for a in range(1, r + 1):
        head = [_SZ] * (a - 1)
        tail = [_ID2] * (r - a)
        gammas[a] = -_kron_all(head + [_SMINUS] + tail)
        gammas[-a] = -_kron_all(head + [_SPLUS] + tail)
    c = np.eye(2**r, dtype=np.int64)
    for a in range(1, r + 1):
        c = c @ (gammas[a] + gammas[-a])
    sign = -1 if ((r + 1) * (r + 2) // 2) % 2 else 1
    return GammaSet(rank=r, gammas=gammas, charge_conjugation=sign * c)


def c_symmetry_sign(r: int, k: int) -> int:
    return -1 if ((r - k - 1) * (r - k) // 2) % 2 else 1


def _sample_index_sets(r: int, k: int, limit: int = 4) -> List[Tuple[int, ...]]:
    signed = list(range(1, r + 1)) + list(range(-r, 0))
    picks = []
    for combo in combinations(signed, k):
        picks.append(combo)
        if len(picks) >= limit:
            break
    # one set containing a conjugate pair when possible
    if k >= 2:
        paired = (1, -1) + tuple(range(2, k))
        if k - 1 <= r and paired not in picks:
            picks.append(paired)
    return picks


def check_clifford(r: int) -> RelationReport:
    """Anticommutators {Gamma_i, Gamma_j} = delta_{i+j,0} and the symmetry of C Gamma_I."""
    gs = gamma_set(r)
    residuals = []
    identity = np.eye(gs.dim, dtype=np.int64)
    signed = list(range(1, r + 1)) + list(range(-r, 0))
    with stopwatch() as elapsed:
        for i in signed:
            for j in signed:
                anti = gs[i] @ gs[j] + gs[j] @ gs[i]
                expected = identity if i + j == 0 else 0 * identity
                residuals.append(np.abs(anti - expected).max())
        for k in range(0, 2 * r + 1):
            for indices in _sample_index_sets(r, k):
                cg = gs.charge_conjugation @ gs.antisym(indices)
                residuals.append(np.abs(cg.T - c_symmetry_sign(r, len(indices)) * cg).max())
    return RelationReport.from_residuals(
        f"clifford.r{r}",
        "{Gamma_i, Gamma_j} = delta_{i+j,0}; (C Gamma_I)^T = (-1)^{(r-|I|-1)(r-|I|)/2} C Gamma_I",
        residuals,
        1e-15,
        elapsed=elapsed[0],
    )


# --- D series spinors ---
def ket_signs(r: int, index: int) -> Tuple[int, ...]:
    return tuple(-1 if (index >> (r - 1 - a)) & 1 else 1 for a in range(r))


def chirality_indices(r: int, odd: bool) -> np.ndarray:
    """Kets with an odd (psi) or even (eta) number of minus signs, by ket index."""
    return np.array(
        [i for i in range(2**r) if (bin(i).count("1") % 2 == 1) == odd], dtype=np.int64
    )


def cartan_index(r: int, ket: int) -> FrozenSet[int]:
    """Positions (1-based) of the minus signs of a ket."""
    return frozenset(a + 1 for a, s in enumerate(ket_signs(r, ket)) if s < 0)


def spinor_reps_D(cartan: CartanData, gammas: Optional[GammaSet] = None) -> Tuple[MatrixRep, MatrixRep]:
    """
    psi (odd number of minus signs) and eta (even) chiral spinors.

    e_a = Gamma_{-a} Gamma_{a+1}, f_a = Gamma_{-(a+1)} Gamma_a for a < r;
    e_r = Gamma_{-(r-1)} Gamma_{-r}, f_r = Gamma_r Gamma_{r-1}.
    The ket sign at slot a is the sign of the epsilon_a weight component.
    """
    r = cartan.rank
    gs = gammas or gamma_set(r)
    e = [gs[-a] @ gs[a + 1] for a in range(1, r)] + [gs[-(r - 1)] @ gs[-r]]
    f = [gs[-(a + 1)] @ gs[a] for a in range(1, r)] + [gs[r] @ gs[r - 1]]
    reps = []
    for name, odd in (("psi", True), ("eta", False)):
        idx = chirality_indices(r, odd)
        block = np.ix_(idx, idx)
        reps.append(
            MatrixRep(
                name=name,
                cartan=cartan,
                e=tuple(x[block] for x in e),
                f=tuple(x[block] for x in f),
                embedding=idx,
            )
        )
    return reps[0], reps[1]


def embed_spinor(rep: MatrixRep, components: np.ndarray) -> np.ndarray:
    """Place chiral components (trailing axis) into the full 2^r Dirac space."""
    r = rep.cartan.rank
    out = np.zeros(components.shape[:-1] + (2**r,), dtype=np.result_type(components, float))
    out[..., rep.embedding] = components
    return out


# --- Exterior powers ---
def exterior_power(rep: MatrixRep, k: int) -> MatrixRep:
    if not 1 <= k <= rep.dim:
        raise QFlagError(f"exterior power {k} out of range for dimension {rep.dim}")
    basis = list(combinations(range(rep.dim), k))
    lookup = {s: n for n, s in enumerate(basis)}

    def lift(x: np.ndarray) -> np.ndarray:
        out = np.zeros((len(basis), len(basis)), dtype=np.int64)
        rows, cols = np.nonzero(x)
        for col_s, subset in enumerate(basis):
            members = set(subset)
            for j, i in enumerate(subset):
                for m in rows[cols == i]:
                    if m != i and m in members:
                        continue
                    replaced = list(subset)
                    replaced[j] = m
                    order = sorted(range(k), key=lambda t: replaced[t])
                    sign = _permutation_sign(order)
                    out[lookup[tuple(replaced[t] for t in order)], col_s] += sign * x[m, i]
        return out

    return MatrixRep(
        name=f"wedge{k}({rep.name})",
        cartan=rep.cartan,
        e=tuple(lift(x) for x in rep.e),
        f=tuple(lift(x) for x in rep.f),
    )


def wedge_subsets(rep_dim: int, k: int) -> List[Tuple[int, ...]]:
    return list(combinations(range(rep_dim), k))


# --- Weyl group ---
def _exact_exp_apply(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """exp(x) v for nilpotent integer x, keeping integers exact."""
    total = v.copy()
    term = v.copy()
    k = 1
    while True:
        term = x @ term
        if not term.any():
            return total
        if np.issubdtype(term.dtype, np.integer):
            fact = factorial(k)
            if (term % fact).any():
                raise QFlagError("non-integral exponential of a Chevalley generator")
            total = total + term // fact
        else:
            total = total + term / factorial(k)
        k += 1
        if k > x.shape[0] + 1:
            raise QFlagError("generator is not nilpotent")


def apply_simple_reflection(rep: MatrixRep, a: int, v: np.ndarray) -> np.ndarray:
    """s_a v = exp(e_a) exp(-f_a) exp(e_a) v for a 1-based node."""
    e, f = rep.e[a - 1], rep.f[a - 1]
    return _exact_exp_apply(e, _exact_exp_apply(-f, _exact_exp_apply(e, v)))


def apply_word(rep: MatrixRep, word: Sequence[int], v: np.ndarray) -> np.ndarray:
    for a in reversed(word):
        v = apply_simple_reflection(rep, a, v)
    return v


@dataclass(frozen=True, eq=False)
class WeylRepresentative:
    word: Word
    matrix: np.ndarray = field(repr=False)


def weyl_representative(rep: MatrixRep, word: Sequence[int]) -> WeylRepresentative:
    for a in word:
        if not 1 <= a <= rep.cartan.rank:
            raise QFlagError(f"invalid letter {a} in Weyl word")
    matrix = apply_word(rep, word, np.eye(rep.dim, dtype=np.int64))
    return WeylRepresentative(word=tuple(word), matrix=matrix)


def reflect_root(cartan: CartanData, a: int, root: Sequence[int]) -> Tuple[int, ...]:
    """s_a on a root in simple-root coordinates (0-based a)."""
    pairing = sum(int(cartan.cartan[a, b]) * root[b] for b in range(cartan.rank))
    out = list(root)
    out[a] -= pairing
    return tuple(out)


def act_on_root(cartan: CartanData, word: Sequence[int], root: Sequence[int]) -> Tuple[int, ...]:
    out = tuple(root)
    for letter in reversed(word):
        out = reflect_root(cartan, letter - 1, out)
    return out


def inversion_set(cartan: CartanData, word: Sequence[int]) -> List[Tuple[int, ...]]:
    """Positive roots sent to negative roots by the element."""
    return [b for b in cartan.positive_roots if sum(act_on_root(cartan, word, b)) < 0]


def check_reduced(cartan: CartanData, word: Sequence[int]) -> None:
    if len(inversion_set(cartan, word)) != len(word):
        raise NonReducedWord(f"word {tuple(word)} is not reduced")


def reduced_word(cartan: CartanData, rho_image: Sequence[int]) -> Word:
    """Lexicographically minimal reduced word of the element w with w(rho) given."""
    word = []
    mu = tuple(rho_image)
    while True:
        descent = next((a for a in range(cartan.rank) if mu[a] < 0), None)
        if descent is None:
            return tuple(word)
        word.append(descent + 1)
        mu = cartan.reflect(mu, descent)


def compose(cartan: CartanData, left: Sequence[int], right: Sequence[int]) -> Word:
    """Reduced word of the product left*right."""
    return reduced_word(cartan, cartan.act(tuple(left) + tuple(right), cartan.weyl_vector))


def torus_sign_factor(
    cartan: CartanData, sigma: Sequence[int], sigma_prime: Sequence[int], weight: Sequence[int]
) -> int:
    """
    Sign relating s_sigma s_sigma' and s_{sigma sigma'} on a weight-lambda vector:
    (-1)^{sum lambda(h_beta)} over beta > 0 with sigma' beta < 0 and sigma sigma' beta > 0.
    """
    check_reduced(cartan, sigma)
    check_reduced(cartan, sigma_prime)
    total = 0
    for beta in cartan.positive_roots:
        if sum(act_on_root(cartan, sigma_prime, beta)) >= 0:
            continue
        if sum(act_on_root(cartan, tuple(sigma) + tuple(sigma_prime), beta)) > 0:
            total += sum(weight[a] * beta[a] for a in range(cartan.rank))
    return -1 if total % 2 else 1


def _short_words(cartan: CartanData) -> List[Word]:
    letters = range(1, cartan.rank + 1)
    return [()] + [(a,) for a in letters] + [(a, b) for a in letters for b in letters if a != b]


def check_torus_signs(rep: MatrixRep, limit: int = 256) -> RelationReport:
    """
    s_sigma s_sigma' = s_{sigma sigma'} t over pairs of words of length <= 2,
    with t diagonal and given on each weight vector by torus_sign_factor.
    """
    cartan = rep.cartan
    words = _short_words(cartan)
    pairs = [(x, y) for x in words for y in words]
    stride = max(1, len(pairs) // limit)
    matrices: Dict[Word, np.ndarray] = {}

    def representative(word: Word) -> np.ndarray:
        if word not in matrices:
            matrices[word] = weyl_representative(rep, word).matrix
        return matrices[word]

    residuals = []
    flips = 0
    with stopwatch() as elapsed:
        for sigma, sigma_prime in pairs[::stride]:
            product = representative(sigma) @ representative(sigma_prime)
            composed = representative(compose(cartan, sigma, sigma_prime))
            signs = {}
            for i in range(rep.dim):
                mu = rep.weight(i)
                if mu not in signs:
                    signs[mu] = torus_sign_factor(cartan, sigma, sigma_prime, mu)
            t = np.array([signs[rep.weight(i)] for i in range(rep.dim)], dtype=np.int64)
            flips += int((t < 0).sum())
            residuals.append(int(np.abs(product - composed * t[None, :]).max()))
    return RelationReport.from_residuals(
        f"torus.{rep.name}",
        "s_sigma s_sigma' = s_{sigma sigma'} t, t = (-1)^{sum lambda(h_beta)}",
        residuals,
        0.5,
        elapsed=elapsed[0],
        details={"pairs": len(residuals), "negative_entries": flips},
    )


def orbit_word(cartan: CartanData, weight: Sequence[int]) -> Word:
    """Lexicographically minimal word sigma with sigma(highest) = weight, for an orbit weight."""
    word = []
    mu = tuple(weight)
    while True:
        a = next((b for b in range(cartan.rank) if mu[b] < 0), None)
        if a is None:
            return tuple(word)
        word.append(a + 1)
        mu = cartan.reflect(mu, a)


def normalize_orbit_basis(rep: MatrixRep) -> MatrixRep:
    """
    Re-sign the basis so that every Weyl-orbit basis vector equals s_sigma applied
    to the highest-weight vector, with sigma the lexicographically minimal word.
    """
    cartan = rep.cartan
    top = rep.highest
    signs = np.ones(rep.dim, dtype=np.int64)
    words: Dict[int, Word] = {}
    cache: Dict[Weight, np.ndarray] = {}
    start = np.zeros(rep.dim, dtype=np.int64)
    start[top] = 1
    cache[rep.weight(top)] = start

    def image(weight: Weight) -> np.ndarray:
        if weight in cache:
            return cache[weight]
        a = next(b for b in range(cartan.rank) if weight[b] < 0)
        v = apply_simple_reflection(rep, a + 1, image(cartan.reflect(weight, a)))
        cache[weight] = v
        return v

    for i in rep.orbit_indices():
        mu = rep.weight(i)
        v = image(mu)
        nz = np.flatnonzero(v)
        if len(nz) != 1 or nz[0] != i or abs(v[i]) != 1:
            raise OrbitReconstructionError(f"{rep.name}: s_sigma v_high is not +-e_{i} at weight {mu}")
        signs[i] = v[i]
        words[i] = orbit_word(cartan, mu)
    d = np.diag(signs)
    normalized = replace(
        rep,
        e=tuple(d @ x @ d for x in rep.e),
        f=tuple(d @ x @ d for x in rep.f),
        orbit_words=words,
        orbit_signs=signs,
    )
    logger.debug("%s: orbit signs %s", rep.name, signs[rep.orbit_indices()].tolist())
    return normalized


# --- Root vectors, Casimir and cyclic element ---
def root_vectors(rep: MatrixRep) -> Dict[Tuple[int, ...], Tuple[np.ndarray, np.ndarray]]:
    """E_beta, F_beta for every positive root, normalized by [E_beta, F_beta] = h_beta."""
    cartan = rep.cartan
    r = cartan.rank
    hs = [h.astype(float) for h in rep.h]
    out = {}
    for a in range(r):
        key = tuple(int(a == b) for b in range(r))
        out[key] = (rep.e[a].astype(float), rep.f[a].astype(float))
    for beta in cartan.positive_roots:
        if beta in out:
            continue
        for a in range(r):
            prev = tuple(beta[b] - (a == b) for b in range(r))
            if prev in out:
                e_prev, f_prev = out[prev]
                e_new = rep.e[a] @ e_prev - e_prev @ rep.e[a]
                f_new = f_prev @ rep.f[a] - rep.f[a] @ f_prev
                bracket = e_new @ f_new - f_new @ e_new
                h_beta = sum(beta[b] * hs[b] for b in range(r))
                scale = np.vdot(h_beta, bracket) / max(np.vdot(h_beta, h_beta), 1e-300)
                if abs(scale) < 1e-12:
                    continue
                out[beta] = (e_new, f_new / scale)
                break
    return out


def casimir(rep: MatrixRep) -> np.ndarray:
    cartan = rep.cartan
    r = cartan.rank
    inv = np.array([[float(x) for x in row] for row in cartan.cartan_inverse])
    hs = [h.astype(float) for h in rep.h]
    c2 = sum(inv[a, b] * hs[a] @ hs[b] for a in range(r) for b in range(r))
    for e, f in root_vectors(rep).values():
        c2 = c2 + e @ f + f @ e
    return c2


def casimir_value(cartan: CartanData, weight: Sequence[int]) -> float:
    shifted = tuple(w + 2 for w in weight)
    return float(cartan.weight_dot(weight, shifted))


def cyclic_element(rep: MatrixRep) -> np.ndarray:
    """Sum of simple root vectors plus the lowest root vector."""
    vectors = root_vectors(rep)
    theta = rep.cartan.highest_root
    return sum(e.astype(float) for e in rep.e) + vectors[theta][1]


def tensor_product(left: MatrixRep, right: MatrixRep) -> MatrixRep:
    il, ir = np.eye(left.dim, dtype=np.int64), np.eye(right.dim, dtype=np.int64)
    return MatrixRep(
        name=f"{left.name}x{right.name}",
        cartan=left.cartan,
        e=tuple(np.kron(x, ir) + np.kron(il, y) for x, y in zip(left.e, right.e)),
        f=tuple(np.kron(x, ir) + np.kron(il, y) for x, y in zip(left.f, right.f)),
    )


def intertwiner(source: MatrixRep, target: MatrixRep, node_map: Dict[int, int]) -> np.ndarray:
    """
    Integer M with M e_a = e_{node_map[a]} M and M f_a = f_{node_map[a]} M,
    scaled so that the highest-weight vector goes to the highest-weight vector.

    The two algebras are identified through node_map; both representations
    must be irreducible and isomorphic under it.
    """
    ds, dt = source.dim, target.dim
    blocks = []
    for a, b in node_map.items():
        for x, y in ((source.e[a - 1], target.e[b - 1]), (source.f[a - 1], target.f[b - 1])):
            # column-major vec: vec(M x) = (x^T kron 1) vec(M), vec(y M) = (1 kron y) vec(M)
            blocks.append(np.kron(x.T, np.eye(dt)) - np.kron(np.eye(ds), y))
    kernel = null_space(np.vstack(blocks).astype(float))
    if kernel.shape[1] != 1:
        raise OrbitReconstructionError(
            f"{source.name} -> {target.name}: intertwiner space has dimension {kernel.shape[1]}"
        )
    m = kernel[:, 0].reshape((dt, ds), order="F")
    pivot = m[target.highest, source.highest]
    if abs(pivot) < 1e-9:
        raise OrbitReconstructionError(f"{source.name} -> {target.name}: highest weights do not correspond")
    m = m / pivot
    rounded = np.rint(m.real)
    if np.abs(m - rounded).max() > 1e-8:
        raise OrbitReconstructionError(f"{source.name} -> {target.name}: intertwiner is not integral")
    return rounded.astype(np.int64)


def check_lambda_spectrum(rep: MatrixRep, p: Optional[HeightFunction] = None, tol: float = 1e-10) -> RelationReport:
    """
    Eigenvalues of the cyclic element against the weight-projected spectrum,
    up to an overall similarity, plus gamma-closure of the projected multiset.
    """
    cartan = rep.cartan
    pf = pf_vector(cartan)
    p = p or alternating_height(cartan)
    with stopwatch() as elapsed:
        projected = lambda_spectrum(weight_system_of(cartan, rep.highest_weight), p, pf)
        direct = np.linalg.eigvals(cyclic_element(rep))
        match = match_up_to_similarity(projected, direct)
        closure = multiset_distance(projected, pf.gamma * projected)
    return RelationReport.from_residuals(
        f"lambda.{rep.name}",
        "spec(Lambda) = {sum_a gamma^(p_a/2) mu_a w_a} over the weights, closed under gamma",
        [match, closure],
        tol,
        elapsed=elapsed[0],
        details={"dim": rep.dim, "height": list(p.p)},
    )
