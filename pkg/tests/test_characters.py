import numpy as np
import pytest

from qflag.bethe_chains import random_system_D
from qflag.characters import (
    CharSolution,
    TGrid,
    char_tensor,
    character_by_weights,
    character_reports,
    character_system,
    class_function_residual,
    contragredient_node,
    hirota_residual,
    kr_character,
    kr_weights,
    random_twist,
    t_grid,
    weyl_char_oracle,
)
from qflag.errors import DegenerateTwist, SchemaError
from qflag.qsystem import spinor_quantisation_sign
from qflag.spectral import TwistParams


def test_contragredient_nodes(cartan):
    e6 = cartan("E", 6)
    assert [contragredient_node(e6, a) for a in range(1, 7)] == [5, 4, 3, 2, 1, 6]
    a4 = cartan("A", 4)
    assert [contragredient_node(a4, a) for a in range(1, 5)] == [4, 3, 2, 1]
    d5 = cartan("D", 5)
    assert [contragredient_node(d5, a) for a in range(1, 6)] == [1, 2, 3, 5, 4]
    d4 = cartan("D", 4)
    assert [contragredient_node(d4, a) for a in range(1, 5)] == [1, 2, 3, 4]
    with pytest.raises(SchemaError):
        contragredient_node(d4, 5)


def test_random_twist_is_unit_modulus(rng):
    params = random_twist(5, rng)
    assert np.allclose(np.abs(params.values), 1)
    assert np.allclose(params.logs.real, 0)


def test_char_tensor_rejects_bad_indices(rng):
    params = random_twist(4, rng)
    with pytest.raises(SchemaError):
        char_tensor(params, [1, 1])
    with pytest.raises(SchemaError):
        char_tensor(params, [0, 2])
    with pytest.raises(SchemaError):
        char_tensor(params, [5])
    coeff, weight = char_tensor(params, [])
    assert coeff == 1 and not weight.any()


def test_degenerate_twist_is_rejected():
    params = TwistParams(logs=np.array([0.3j, 0.3j, 1.1j]))
    with pytest.raises(DegenerateTwist):
        CharSolution(params)


def test_vector_character_closed_form(cartan):
    logs = np.array([0.2, -0.5, 0.9j])
    expected = sum(np.exp(logs)) + sum(np.exp(-logs))
    assert weyl_char_oracle(cartan("D", 3), (1, 0, 0), logs) == pytest.approx(expected)


@pytest.mark.parametrize(
    "series,rank,weight",
    [
        ("D", 4, (1, 0, 0, 0)),
        ("D", 4, (0, 0, 0, 1)),
        ("D", 4, (0, 1, 0, 0)),
        ("D", 5, (0, 0, 0, 1, 0)),
        ("A", 2, (1, 1)),
        ("A", 3, (0, 1, 0)),
    ],
)
def test_weyl_formula_matches_weight_sum(cartan, rng, series, rank, weight):
    c = cartan(series, rank)
    n = rank + 1 if series == "A" else rank
    logs = 0.2 * rng.normal(size=n) + 1j * rng.uniform(-np.pi, np.pi, size=n)
    if series == "A":
        logs = logs - logs.mean()
    oracle = weyl_char_oracle(c, weight, logs)
    assert character_by_weights(c, weight, logs) == pytest.approx(oracle, rel=1e-9)


def test_weyl_character_is_a_class_function(cartan, rng):
    logs = 0.1 * rng.normal(size=4) + 1j * rng.uniform(-np.pi, np.pi, size=4)
    assert class_function_residual(cartan("D", 4), (1, 0, 0, 1), logs) < 1e-9


def test_weyl_oracle_checks_twist_length(cartan):
    with pytest.raises(SchemaError):
        weyl_char_oracle(cartan("A", 2), (1, 0), np.zeros(2))


def test_kr_weights(cartan):
    d5 = cartan("D", 5)
    assert sorted(kr_weights(d5, 3, 2)) == sorted([(0, 0, 2, 0, 0), (1, 0, 1, 0, 0), (2, 0, 0, 0, 0)])
    assert sorted(kr_weights(d5, 2, 1)) == sorted([(0, 1, 0, 0, 0), (0, 0, 0, 0, 0)])
    assert kr_weights(d5, 4, 3) == [(0, 0, 0, 3, 0)]
    assert kr_weights(cartan("A", 3), 2, 2) == [(0, 2, 0)]
    with pytest.raises(SchemaError):
        kr_character(d5, 1, -1, np.zeros(5))


@pytest.mark.parametrize("rank", [3, 4, 5])
def test_vector_row_matches_weyl_characters(cartan, rng, rank):
    params = random_twist(rank, rng)
    solution = CharSolution(params)
    c = cartan("D", rank)
    assert solution.t_vector(0) == pytest.approx(1)
    for s in range(1, 4):
        assert solution.t_vector(s) == pytest.approx(kr_character(c, 1, s, params.logs), rel=1e-8)


def _kr_grid(c, logs, smax, samples=4):
    def value(a, s, shift):
        return np.full(samples, kr_character(c, a, s, logs), dtype=complex)

    return TGrid(cartan=c, smax=smax, samples=samples, value=value)


@pytest.mark.parametrize("series,rank", [("A", 1), ("A", 3), ("D", 4)])
def test_kr_characters_solve_hirota(cartan, rng, settings, series, rank):
    c = cartan(series, rank)
    n = rank + 1 if series == "A" else rank
    logs = 1j * rng.uniform(-np.pi, np.pi, size=n)
    if series == "A":
        logs = logs - logs.mean()
    report = hirota_residual(_kr_grid(c, logs, smax=2), settings)
    assert report.passed, report.details


def test_hirota_flags_a_broken_grid(cartan, settings):
    c = cartan("A", 1)
    logs = np.array([0.4j, -0.4j])

    def value(a, s, shift):
        bump = 0.5 if s == 1 else 0.0
        return np.full(3, kr_character(c, a, s, logs) + bump, dtype=complex)

    report = hirota_residual(TGrid(cartan=c, smax=2, samples=3, value=value), settings)
    assert not report.passed


def test_grid_model_keeps_hirota(cartan, settings):
    c = cartan("A", 1)
    logs = np.array([0.7j, -0.7j])
    points = np.array([0.1, 0.5 + 0.2j, -0.3j])
    model = _kr_grid(c, logs, smax=3, samples=3).to_model(points, degree=0)
    assert model.smax == 3 and len(model.entries) == 4
    assert hirota_residual(TGrid.from_model(model, points), settings).passed


def test_grid_model_requires_every_row(cartan):
    c = cartan("A", 1)
    points = np.array([0.1, 0.2])
    model = _kr_grid(c, np.array([0.3j, -0.3j]), smax=2, samples=2).to_model(points, degree=0)
    model.entries = [e for e in model.entries if e.s != 1]
    with pytest.raises(SchemaError):
        TGrid.from_model(model, points)


@pytest.mark.parametrize("rank", [3, 4])
def test_d_character_system_is_constant(rng, settings, rank):
    system = character_system("D", random_twist(rank, rng))
    reports = {r.relation: r for r in character_reports(system, 2, settings)}
    assert reports["character.constant"].passed


def test_a_character_system_needs_balanced_twist():
    with pytest.raises(DegenerateTwist):
        character_system("A", TwistParams(logs=np.array([0.1j, 0.2j, 0.4j])))


@pytest.mark.parametrize("rank", [3, 4, 5])
def test_spinor_quantisation_sign(rank):
    for node in (rank - 1, rank):
        assert spinor_quantisation_sign(rank, node) in (1, -1)


@pytest.mark.parametrize("rank", [3, 4])
def test_sourced_grid_solves_hirota(rank, rng, settings):
    system = random_system_D(rank, rng)
    grid = t_grid(system, 2, settings)
    assert grid.factors is not None
    report = hirota_residual(grid, settings)
    assert report.passed, report.max_residual
    assert report.details["sourced"]
