import numpy as np
import pytest
from pydantic import ValidationError

from qflag.aseries import (
    YoungDiagram,
    bilinear_T,
    bruhat_decompose,
    companion_matrix,
    coxeter_permutation,
    miura_residual,
    nested_bethe_residual_A,
    random_system_A,
    semistandard_tableaux,
    t_equality,
    tcheck,
)
from qflag.errors import InvalidAlgebraError, SchemaError
from qflag.qsystem import Evaluator, so6_dictionary
from qflag.spectral import sample_points


def test_young_diagram_validation():
    assert YoungDiagram.rectangle(2, 3).parts == [3, 3]
    assert YoungDiagram.rectangle(2, 0).rows == 0
    with pytest.raises(ValidationError):
        YoungDiagram(parts=[1, 2])
    with pytest.raises(SchemaError):
        YoungDiagram(parts=[1, 1, 1]).padded(2)


@pytest.mark.parametrize("parts,n,count", [([1], 4, 4), ([2, 2], 3, 6), ([2, 1], 3, 8), ([1, 1, 1], 3, 1)])
def test_semistandard_tableaux_count_dimensions(parts, n, count):
    assert len(list(semistandard_tableaux(YoungDiagram(parts=parts), n))) == count


def test_coxeter_permutation_has_order_n():
    for n in (2, 3, 5):
        c = coxeter_permutation(n)
        np.testing.assert_array_equal(np.linalg.matrix_power(c, n), np.eye(n))
        assert not np.array_equal(np.linalg.matrix_power(c, n - 1), np.eye(n))


def test_bruhat_decomposition(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    left, w, right = bruhat_decompose(m)
    np.testing.assert_allclose(left @ w @ right, m, atol=1e-10)
    np.testing.assert_allclose(np.tril(left, -1), 0, atol=1e-12)
    np.testing.assert_allclose(np.diag(left), 1)
    np.testing.assert_allclose(np.tril(right, -1), 0, atol=1e-12)
    assert sorted(w.sum(axis=0)) == [1, 1, 1, 1]


@pytest.mark.parametrize("rank", [2, 3])
def test_transfer_matrix_formulas_agree(rank, rng, settings):
    system = random_system_A(rank, rng)
    reports = t_equality(system, settings, smax=3)
    assert all(r.passed for r in reports), [(r.relation, r.max_residual) for r in reports]


def test_tcheck_untwisted_a2(rng, settings):
    reports = tcheck(random_system_A(2, rng), settings)
    failing = [(r.relation, r.max_residual) for r in reports if not r.passed]
    assert not failing, failing
    assert {"aseries.oper", "aseries.bethe", "hirota"} <= {r.relation for r in reports}


def test_nested_bethe_counts_roots(rng, settings):
    system = random_system_A(3, rng)
    report = nested_bethe_residual_A(system, settings)
    assert report.passed
    assert report.details["roots"] == {1: 3, 2: 4, 3: 3}


def test_a_series_checks_reject_d_systems(rng, settings):
    with pytest.raises(InvalidAlgebraError):
        tcheck(so6_dictionary(random_system_A(3, rng)), settings)


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_miura_factorization(rank, rng, settings):
    report = miura_residual(random_system_A(rank, rng, twisted=True), settings)
    assert report.passed, report.max_residual
    assert report.samples == rank + 1


def test_sl3_companion_matrix(rng):
    system = random_system_A(2, rng)
    ev = Evaluator(system, sample_points(rng, 5))
    u = companion_matrix(ev)
    assert u.shape == (5, 3, 3)
    np.testing.assert_allclose(u[:, 0, 0], bilinear_T(ev, 2, 1, 1.5))
    np.testing.assert_allclose(u[:, 0, 1], -bilinear_T(ev, 1, 1, 0.5))
    np.testing.assert_allclose(u[:, 0, 2], 1, atol=1e-9)
    np.testing.assert_allclose(u[:, 1, 0], 1)
    np.testing.assert_allclose(u[:, 2, 1], 1)
    for i, j in ((1, 1), (1, 2), (2, 0), (2, 2)):
        np.testing.assert_allclose(u[:, i, j], 0)
    np.testing.assert_allclose(np.linalg.det(u), 1, atol=1e-8)


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_tcheck_sourced(rank, sourced_a_system, settings):
    system = sourced_a_system(rank)
    reports = tcheck(system, settings)
    failing = [(r.relation, r.max_residual) for r in reports if not r.passed]
    assert not failing, failing
    relations = {r.relation: r for r in reports}
    assert {"aseries.baxter", "aseries.baxter-conjugate", "aseries.oper", "hirota"} <= set(relations)
    assert relations["aseries.baxter-conjugate"].details["sourced"]
    assert relations["hirota"].details["sourced"]
