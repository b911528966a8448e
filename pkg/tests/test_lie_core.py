from fractions import Fraction

import numpy as np
import pytest

from qflag.errors import InvalidAlgebraError, QFlagError
from qflag.lie_core import (
    HeightFunction,
    alternating_height,
    coxeter_word,
    deformed_number,
    is_gamma_closed,
    lambda_spectrum,
    multiset_distance,
    orthogonal_convert,
    parse_algebra,
    pf_closed_form,
    pf_vector,
    random_height,
    verify_fusion_arithmetic,
    weight_system,
    weight_system_of,
    weyl_dimension,
)


@pytest.mark.parametrize(
    "series,rank,coxeter,positive",
    [("A", 3, 4, 6), ("D", 4, 6, 12), ("D", 5, 8, 20), ("E", 6, 12, 36), ("E", 7, 18, 63), ("E", 8, 30, 120)],
)
def test_cartan_data(cartan, series, rank, coxeter, positive):
    data = cartan(series, rank)
    assert data.coxeter_number == coxeter
    assert len(data.positive_roots) == positive
    assert np.array_equal(data.cartan, data.cartan.T)
    assert np.all(np.diag(data.cartan) == 2)


@pytest.mark.parametrize("series,rank", [("D", 2), ("E", 5), ("B", 3), ("A", 0)])
def test_invalid_algebras(series, rank):
    with pytest.raises(InvalidAlgebraError):
        parse_algebra(series, rank)


def test_deformed_numbers():
    q = np.exp(0.37j)
    assert deformed_number(0, q) == 0
    assert deformed_number(1, q) == pytest.approx(1)
    assert deformed_number(2, q) == pytest.approx(q + 1 / q)
    assert deformed_number(-3, q) == pytest.approx(-deformed_number(3, q))
    assert deformed_number(4, 1) == 4


@pytest.mark.parametrize("series,rank", [("A", 1), ("A", 4), ("D", 4), ("D", 6), ("E", 6), ("E", 8)])
def test_pf_vector_is_positive_eigenvector(cartan, series, rank):
    data = cartan(series, rank)
    pf = pf_vector(data)
    eigenvalue = 2 * np.cos(np.pi / data.coxeter_number)
    assert np.all(pf.mu > 0)
    np.testing.assert_allclose(data.incidence @ pf.mu, eigenvalue * pf.mu, atol=1e-12)


@pytest.mark.parametrize("series,rank", [("A", 5), ("D", 5)])
def test_pf_vector_closed_forms(cartan, series, rank):
    data = cartan(series, rank)
    np.testing.assert_allclose(pf_vector(data).mu, pf_closed_form(data), atol=1e-12)


def test_height_functions(cartan, rng):
    data = cartan("D", 5)
    p = alternating_height(data).validate(data)
    assert sorted(coxeter_word(data, p)) == [1, 2, 3, 4, 5]
    for _ in range(5):
        random_height(data, rng).validate(data)
    with pytest.raises(QFlagError):
        HeightFunction((0, 0, 0, 0, 0)).validate(data)


@pytest.mark.parametrize(
    "series,rank,node,dim",
    [("A", 3, 2, 6), ("D", 4, 1, 8), ("D", 4, 2, 28), ("D", 5, 5, 16), ("E", 6, 1, 27), ("E", 7, 6, 56)],
)
def test_weight_system_dimensions(cartan, series, rank, node, dim):
    data = cartan(series, rank)
    ws = weight_system(data, node)
    assert ws.total_dim == dim
    assert ws.total_dim == weyl_dimension(data, ws.highest)


def test_adjoint_multiplicities(cartan):
    data = cartan("D", 4)
    adjoint = weight_system_of(data, data.root_labels(data.highest_root))
    assert adjoint.total_dim == 28
    assert adjoint.multiplicity((0, 0, 0, 0)) == 4


@pytest.mark.parametrize("series,rank", [("D", 4), ("E", 6)])
def test_adjoint_lambda_spectrum_is_gamma_closed(cartan, series, rank):
    data = cartan(series, rank)
    pf = pf_vector(data)
    adjoint = weight_system_of(data, data.root_labels(data.highest_root))
    values = lambda_spectrum(adjoint, alternating_height(data), pf)
    assert len(values) == adjoint.total_dim
    assert is_gamma_closed(values, pf)


def test_multiset_distance_ignores_order():
    a = np.array([1 + 1j, 2, -3j])
    assert multiset_distance(a, a[::-1]) == 0
    assert multiset_distance(a, a[:2]) == float("inf")


def test_orthogonal_convert(cartan):
    data = cartan("D", 4)
    half = Fraction(1, 2)
    assert orthogonal_convert(data, (1, 0, 0, 0)) == (1, 0, 0, 0)
    assert orthogonal_convert(data, (0, 0, 0, 1)) == (half, half, half, half)
    assert orthogonal_convert(data, (0, 0, 1, 0)) == (half, half, half, -half)
    with pytest.raises(InvalidAlgebraError):
        orthogonal_convert(cartan("A", 3), (1, 0, 0))


@pytest.mark.parametrize("series,rank", [("A", 4), ("D", 5), ("E", 6), ("E", 7), ("E", 8)])
def test_fusion_arithmetic(series, rank):
    report = verify_fusion_arithmetic(parse_algebra(series, rank))
    assert report.passed, report.details["failing"]
    assert report.samples > 0


def test_d4_pf_vector(cartan):
    np.testing.assert_allclose(pf_vector(cartan("D", 4)).mu, [1, np.sqrt(3), 1, 1], atol=1e-12)


def test_coxeter_words(cartan):
    a3 = cartan("A", 3)
    assert coxeter_word(a3, HeightFunction((0, 1, 2))) == (3, 2, 1)
    assert coxeter_word(a3, HeightFunction((2, 3, 4))) == (3, 2, 1)
    d5 = cartan("D", 5)
    word = coxeter_word(d5, alternating_height(d5))
    parity = d5.node_parity
    odd = [a for a in word if parity[a - 1] == 1]
    assert list(word[: len(odd)]) == odd
