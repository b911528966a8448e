import numpy as np
import pytest

from qflag.aseries import random_system_A
from qflag.bethe_chains import random_system_D
from qflag.errors import ProjectionError
from qflag.qsystem import (
    check_fusion_D,
    check_projection_relations,
    check_quantisation,
    hodge_dual_A,
    inverse_so6_dictionary,
    isotypic_projector,
    normalize_system,
    path_difference,
    q_function,
    relation_constants,
    so6_dictionary,
    system_from_model,
    verify_system,
    weyl_orbit_extend,
)
from qflag.rep_clifford import tensor_product, vector_rep_D
from qflag.spectral import QQSolveOptions, sample_points


def _assert_all_pass(reports):
    failing = [(r.relation, r.max_residual) for r in reports if not r.passed]
    assert not failing, failing


def test_normalized_a3_wronskian(a3_system):
    full = q_function(a3_system, (1, 2, 3, 4))
    assert full.degree == 0
    assert full.coeffs[0] == pytest.approx(1)


def test_q_functions_are_antisymmetric(a3_system, rng):
    u = sample_points(rng, 4)
    np.testing.assert_allclose(q_function(a3_system, (2, 1))(u), -q_function(a3_system, (1, 2))(u))
    assert q_function(a3_system, (3, 3)).is_zero


def test_hodge_dual(a3_system, rng):
    u = sample_points(rng, 4)
    np.testing.assert_allclose(hodge_dual_A(a3_system, (1,))(u), q_function(a3_system, (2, 3, 4))(u))
    np.testing.assert_allclose(hodge_dual_A(a3_system, (2,))(u), -q_function(a3_system, (1, 3, 4))(u))


def test_a3_suites(a3_system, settings):
    _assert_all_pass(verify_system(a3_system, "all", settings))


def test_twisted_a2_suites(rng, settings):
    system = random_system_A(2, rng, twisted=True)
    _assert_all_pass(verify_system(system, "qq", settings))
    _assert_all_pass(verify_system(system, "projection", settings))


@pytest.mark.parametrize("rank", [3, 4])
def test_random_d_system_suites(rank, rng, settings):
    system = random_system_D(rank, rng)
    reports = verify_system(system, "all", settings)
    _assert_all_pass(reports)
    assert any(r.relation.startswith("fusion") for r in reports)


def test_so6_dictionary_suites(a3_system, settings):
    d3 = so6_dictionary(a3_system)
    assert d3.spec.label == "D3"
    _assert_all_pass(verify_system(d3, "all", settings))


def test_so6_dictionary_inverts(a3_system, rng):
    back = inverse_so6_dictionary(so6_dictionary(a3_system))
    u = sample_points(rng, 4)
    for a in range(4):
        np.testing.assert_allclose(back.base["singles"][a](u), a3_system.base["singles"][a](u), rtol=1e-10)


def test_extension_orders_agree(rng):
    system = random_system_D(4, rng)
    opts = QQSolveOptions(tol=1e-7)
    forward = weyl_orbit_extend(system.cartan, system.seeds(), sources=system.sources, opts=opts)
    backward = weyl_orbit_extend(system.cartan, system.seeds(), sources=system.sources, reverse=True, opts=opts)
    assert path_difference(forward, backward) < 1e-9


def test_normalize_absorbs_rescalings(rng):
    system = random_system_D(4, rng)
    points = sample_points(rng, 6)
    np.testing.assert_allclose(relation_constants(system, points), 1, atol=1e-8)
    scaled = system.rescaled({"vector": 2.0, "psi": 0.5j, "eta": 3.0})
    assert np.max(np.abs(relation_constants(scaled, points) - 1)) > 0.1
    fixed = normalize_system(scaled, points)
    np.testing.assert_allclose(relation_constants(fixed, points), 1, atol=1e-8)


def test_system_model_round_trip(rng, settings):
    system = random_system_D(3, rng)
    rebuilt = system_from_model(system.to_model())
    _assert_all_pass(verify_system(rebuilt, "qq", settings))


def test_isotypic_projectors_of_vector_square(cartan):
    data = cartan("D", 4)
    vector = vector_rep_D(data)
    square = tensor_product(vector, vector)
    for target, dim in (((0, 0, 0, 0), 1), ((0, 1, 0, 0), 28), ((2, 0, 0, 0), 35)):
        p = isotypic_projector(square, target)
        np.testing.assert_allclose(p @ p, p, atol=1e-9)
        assert np.trace(p).real == pytest.approx(dim)
    with pytest.raises(ProjectionError):
        isotypic_projector(square, (0, 0, 1, 0))


@pytest.mark.parametrize("twisted", [False, True])
@pytest.mark.parametrize("rank", [1, 2, 3, 4])
def test_qq_holds_at_every_a_node(rank, twisted, rng, settings):
    system = random_system_A(rank, rng, twisted=twisted)
    reports = verify_system(system, "qq", settings)
    assert [r.relation for r in reports] == [f"qq.node{a}" for a in range(1, rank + 1)]
    _assert_all_pass(reports)


def test_qq_holds_at_every_so6_node(a3_system, settings):
    reports = verify_system(so6_dictionary(a3_system), "qq", settings)
    assert [r.relation for r in reports] == ["qq.node1", "qq.node2", "qq.node3"]
    _assert_all_pass(reports)


def test_quantisation_rejects_a_minus_one_wronskian(a3_system, settings):
    # four singles scaled by e^{i pi / 4} multiply the Wronskian by -1
    flipped = a3_system.rescaled({"singles": np.exp(1j * np.pi / 4)})
    reports = {r.relation: r for r in check_quantisation(flipped, settings)}
    wronskian = reports["quant.A.wronskian"]
    assert not wronskian.passed
    assert wronskian.details["constant"] == pytest.approx([-1, 0], abs=1e-8)
    assert wronskian.max_residual == pytest.approx(2, abs=1e-8)


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_quantisation_of_sourced_a_systems(rank, sourced_a_system, settings):
    system = sourced_a_system(rank)
    assert system.sourced
    reports = check_quantisation(system, settings)
    assert {r.relation for r in reports} == {"quant.A.wronskian"} | {f"quant.A.T{a}" for a in range(1, rank + 1)}
    _assert_all_pass(reports)
    for r in reports:
        assert r.details["constant"] == pytest.approx([1, 0], abs=1e-6)


@pytest.mark.parametrize("rank", [3, 4])
def test_sourced_d_quantisation_and_fusion(rank, rng, settings):
    system = random_system_D(rank, rng)
    assert system.sourced
    quantisation = check_quantisation(system, settings)
    fusion = check_fusion_D(system, settings)
    _assert_all_pass(quantisation + fusion)
    assert any(r.relation.startswith("quant.D.vector") for r in quantisation)
    assert fusion


def test_d4_fused_flags(rng, settings):
    reports = {r.relation: r for r in check_projection_relations(random_system_D(4, rng), settings)}
    assert {"fused-flag.D.vector", "fused-flag.D.spinor"} <= set(reports)
    _assert_all_pass(reports.values())
