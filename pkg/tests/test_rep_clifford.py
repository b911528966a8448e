import numpy as np
import pytest

from qflag.errors import NonReducedWord
from qflag.lie_core import alternating_height, fundamental_weight
from qflag.rep_clifford import (
    c_symmetry_sign,
    casimir,
    casimir_value,
    check_chevalley,
    check_clifford,
    check_lambda_spectrum,
    check_reduced,
    check_torus_signs,
    compose,
    defining_rep_A,
    exterior_power,
    gamma_set,
    intertwiner,
    metric_residual,
    normalize_orbit_basis,
    spinor_reps_D,
    vector_rep_D,
    weyl_representative,
)


@pytest.mark.parametrize("r", range(3, 9))
def test_clifford_relations_exact(r):
    report = check_clifford(r)
    assert report.passed
    assert report.max_residual == 0


def test_gamma_squares_vanish():
    gs = gamma_set(4)
    for i in (1, -1, 3, -4):
        assert not (gs[i] @ gs[i]).any()
    assert gs.dim == 16


def test_c_symmetry_sign_is_periodic():
    for r in range(3, 7):
        for k in range(0, 2 * r):
            assert c_symmetry_sign(r, k) == c_symmetry_sign(r, k + 4)


@pytest.mark.parametrize("rank", [1, 3, 5])
def test_chevalley_A(cartan, rank):
    base = defining_rep_A(cartan("A", rank))
    for k in range(1, rank + 1):
        rep = base if k == 1 else exterior_power(base, k)
        assert check_chevalley(rep).passed


@pytest.mark.parametrize("rank", [3, 4, 5])
def test_chevalley_D(cartan, rank):
    data = cartan("D", rank)
    vector = vector_rep_D(data)
    psi, eta = spinor_reps_D(data)
    reps = [vector, psi, eta] + [exterior_power(vector, k) for k in range(2, rank - 1)]
    for rep in reps:
        report = check_chevalley(rep)
        assert report.passed, report.relation
    assert metric_residual(vector) == 0


def test_spinor_highest_weights(cartan):
    data = cartan("D", 5)
    psi, eta = spinor_reps_D(data)
    assert psi.dim == eta.dim == 16
    assert psi.highest_weight == fundamental_weight(data, 4)
    assert eta.highest_weight == fundamental_weight(data, 5)


def test_exterior_power_of_vector(cartan):
    data = cartan("D", 4)
    wedge = exterior_power(vector_rep_D(data), 2)
    assert wedge.dim == 28
    assert wedge.highest_weight == (0, 1, 0, 0)


def test_weyl_representative_permutes_weights(cartan):
    data = cartan("D", 4)
    rep = vector_rep_D(data)
    word = (1, 2, 3, 4, 2)
    matrix = weyl_representative(rep, word).matrix
    assert set(np.unique(matrix)) <= {-1, 0, 1}
    for i in range(rep.dim):
        rows = np.flatnonzero(matrix[:, i])
        assert len(rows) == 1
        assert rep.weight(rows[0]) == data.act(word, rep.weight(i))


def test_reduced_words(cartan):
    data = cartan("A", 3)
    check_reduced(data, (1, 2, 1))
    with pytest.raises(NonReducedWord):
        check_reduced(data, (2, 2))
    assert compose(data, (1,), (1,)) == ()
    longest = compose(data, (1, 2, 1), (3, 2, 1))
    assert len(longest) == len(data.positive_roots)


def test_normalized_orbit_basis(cartan):
    data = cartan("D", 4)
    rep = normalize_orbit_basis(vector_rep_D(data))
    top = rep.highest_weight
    for i in rep.orbit_indices():
        assert rep.orbit_signs[i] in (1, -1)
        assert data.act(rep.orbit_words[i], top) == rep.weight(i)
    assert check_chevalley(rep).passed


def test_casimir_is_scalar(cartan):
    data = cartan("D", 4)
    rep = vector_rep_D(data)
    value = casimir_value(data, rep.highest_weight)
    assert value == pytest.approx(7)
    np.testing.assert_allclose(casimir(rep), value * np.eye(rep.dim), atol=1e-10)


@pytest.mark.parametrize("series,rank", [("A", 3), ("D", 4), ("D", 5)])
def test_lambda_spectrum_matches_cyclic_element(cartan, series, rank):
    data = cartan(series, rank)
    rep = defining_rep_A(data) if series == "A" else vector_rep_D(data)
    report = check_lambda_spectrum(rep, alternating_height(data))
    assert report.passed, report.max_residual


@pytest.mark.parametrize("series,rank", [("A", 3), ("D", 3), ("D", 4)])
def test_torus_signs(cartan, series, rank):
    data = cartan(series, rank)
    if series == "A":
        reps = [defining_rep_A(data), exterior_power(defining_rep_A(data), 2)]
    else:
        reps = [vector_rep_D(data), *spinor_reps_D(data)]
    for rep in reps:
        report = check_torus_signs(rep)
        assert report.passed, (rep.name, report.max_residual)
        assert report.details["pairs"] > 0


def test_torus_signs_are_not_all_trivial(cartan):
    report = check_torus_signs(vector_rep_D(cartan("D", 4)))
    assert report.details["negative_entries"] > 0


def test_intertwiner_of_a_rep_with_itself(cartan):
    rep = vector_rep_D(cartan("D", 4))
    m = intertwiner(rep, rep, {a: a for a in range(1, 5)})
    np.testing.assert_array_equal(m, np.eye(rep.dim, dtype=np.int64))


def test_so6_intertwiner_is_a_signed_permutation(cartan):
    a3, d3 = cartan("A", 3), cartan("D", 3)
    source = exterior_power(defining_rep_A(a3), 2)
    target = vector_rep_D(d3)
    m = intertwiner(source, target, {1: 2, 2: 1, 3: 3})
    assert m.shape == (6, 6)
    np.testing.assert_array_equal(np.abs(m).sum(axis=0), np.ones(6))
    np.testing.assert_array_equal(np.abs(m).sum(axis=1), np.ones(6))
    for a, b in ((1, 2), (2, 1), (3, 3)):
        np.testing.assert_array_equal(m @ source.e[a - 1], target.e[b - 1] @ m)
