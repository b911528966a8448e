import numpy as np
import pytest
from pydantic import ValidationError

from qflag.bethe_chains import (
    BetheState,
    ChainSpec,
    RMatrix,
    bethe_residual,
    calibrate_vacuum,
    census_report,
    commutator_residual,
    highest_weight_count,
    oracle_report,
    r_matrix_D,
    random_system_D,
    sector_weight,
    sectors,
    solve_small_chain,
    source_polynomials,
    t_spectrum,
    tensor_weights,
    transfer_matrix,
    weight_space_dimension,
    yang_baxter_residual,
)
from qflag.config import Settings
from qflag.errors import SchemaError
from qflag.lie_core import Series
from qflag.qsystem import verify_system
from qflag.spectral import sample_points
from qflag.schemas import ChainSpecModel


def _chain(series, rank, sites, thetas, twist, seed=0) -> ChainSpec:
    model = ChainSpecModel(
        series=series,
        rank=rank,
        L=len(sites),
        site_labels=[list(s) for s in sites],
        thetas=[(t.real, t.imag) for t in map(complex, thetas)],
        twist=[(x.real, x.imag) for x in map(complex, twist)],
        seed=seed,
    )
    return ChainSpec.from_model(model)


@pytest.fixture
def a1_chain() -> ChainSpec:
    return _chain("A", 1, [(1,)], [0.3], [1.3 + 0.2j, 0.6 - 0.1j])


@pytest.fixture
def so6_chain() -> ChainSpec:
    return _chain("D", 3, [(1, 0, 0), (1, 0, 0)], [0.1, -0.45], np.exp(1j * np.array([0.4, 1.3, -2.1])))


def test_chain_model_validation():
    with pytest.raises(ValidationError):
        ChainSpecModel(series="A", rank=1, L=2, site_labels=[[1]], thetas=[(0, 0)], twist=[(1, 0), (2, 0)])
    with pytest.raises(ValidationError):
        ChainSpecModel(series="A", rank=2, L=1, site_labels=[[1, -1]], thetas=[(0, 0)], twist=[(1, 0)] * 3)
    with pytest.raises(SchemaError):
        _chain("D", 3, [(1, 0, 0)], [0.0], [2.0, 3.0])
    with pytest.raises(SchemaError):
        _chain("E", 6, [(1, 0, 0, 0, 0, 0)], [0.0], [2.0] * 6)


def test_chain_model_round_trip(so6_chain):
    again = ChainSpec.from_model(so6_chain.to_model())
    assert again.sites == so6_chain.sites
    assert np.allclose(again.params.values, so6_chain.params.values)


def test_source_polynomials():
    chain = _chain("A", 2, [(2, 0)], [0.3], [1.5, 2.0, 3.0])
    sources = source_polynomials(chain)
    assert sources[1].degree == 2
    assert sources[2].degree == 0
    assert abs(sources[1](0.8)) < 1e-12
    assert abs(sources[1](-0.2)) < 1e-12
    assert abs(sources[1](0.3)) > 0.1


def test_empty_sector_has_one_solution(a1_chain, settings):
    found = solve_small_chain(a1_chain, (0,), settings)
    assert len(found) == 1
    assert len(found[0].state.q(1)) == 0


def test_single_magnon_root(a1_chain):
    found = solve_small_chain(a1_chain, (1,), Settings(seed=3, census_restarts=40))
    assert len(found) == 1
    root = found[0].state.q(1)[0]
    x1, x2 = a1_chain.params.values
    candidates = [0.3 + (X + 1) / (2 * (X - 1)) for X in (x1 / x2, x2 / x1)]
    assert min(abs(root - c) for c in candidates) < 1e-8
    assert bethe_residual(a1_chain, found[0].state).passed


def test_solver_rejects_bad_sectors(a1_chain, settings):
    with pytest.raises(SchemaError):
        solve_small_chain(a1_chain, (1, 0), settings)
    with pytest.raises(SchemaError):
        solve_small_chain(a1_chain, (5,), settings)


def test_bethe_residual_flags_collisions(a1_chain, settings):
    state = BetheState(magnons=(2,), roots={1: np.array([0.5, 0.5])})
    report = bethe_residual(a1_chain, state, settings)
    assert report.details["collisions"] == [[1, 0, 1]]


def test_tensor_square_of_so6_vector(so6_chain):
    weights = tensor_weights(so6_chain)
    assert sum(weights.values()) == 36
    assert sector_weight(so6_chain, (2, 1, 1)) == (0, 0, 0)
    assert weight_space_dimension(so6_chain, (0, 0, 0)) == 1
    assert weight_space_dimension(so6_chain, (1, 0, 0)) == 2
    assert weight_space_dimension(so6_chain, (2, 1, 1)) == 6
    # 6 x 6 = 20 + 15 + 1
    for magnons in [(0, 0, 0), (1, 0, 0), (2, 1, 1)]:
        assert highest_weight_count(so6_chain, magnons) == 1
    assert highest_weight_count(so6_chain, (1, 1, 0)) == 0
    found = sectors(so6_chain)
    assert found[0] == (0, 0, 0)
    assert (2, 1, 1) in found


def test_r_matrix_special_points():
    rmat = RMatrix(rank=3)
    assert np.allclose(rmat(0), rmat.kappa * rmat.permutation)
    assert np.allclose(rmat(-rmat.kappa), rmat.kappa * rmat.trace)
    assert np.allclose(rmat.permutation @ rmat.permutation, np.eye(36))


@pytest.mark.parametrize("rank", [3, 4])
def test_yang_baxter(rank):
    assert yang_baxter_residual(RMatrix(rank=rank), np.random.default_rng(rank), count=2) < 1e-10


def test_r_matrix_needs_rank_three():
    with pytest.raises(SchemaError):
        r_matrix_D(2)


def test_transfer_matrices_commute(so6_chain):
    rmat = r_matrix_D(3)
    assert commutator_residual(so6_chain, 0.3 + 0.7j, -1.1 + 0.2j, rmat) < 1e-10
    assert transfer_matrix(so6_chain, 0.5, rmat).shape == (36, 36)


def test_transfer_matrix_needs_vector_chain(a1_chain):
    with pytest.raises(SchemaError):
        transfer_matrix(a1_chain, 0.5)
    spinor = _chain("D", 3, [(0, 1, 0)], [0.0], [2.0, 3.0, 5.0])
    with pytest.raises(SchemaError):
        transfer_matrix(spinor, 0.5)


def test_spectrum_is_grouped_by_sector(so6_chain):
    spectrum = t_spectrum(so6_chain, [0.2 + 0.1j, -0.4j])
    assert sum(block.shape[0] for block in spectrum.values()) == 36
    assert spectrum[(0, 0, 0)].shape == (1, 2)
    assert spectrum[(2, 1, 1)].shape == (6, 2)


@pytest.fixture(scope="module")
def so6_census():
    chain = _chain("D", 3, [(1, 0, 0), (1, 0, 0)], [0.1, -0.45], np.exp(1j * np.array([0.4, 1.3, -2.1])))
    settings = Settings(seed=11, census_restarts=60)
    report, solutions = census_report(chain, settings, max_magnons=4)
    return chain, settings, report, solutions


def test_so6_census_matches_multiplicities(so6_census):
    _, _, report, solutions = so6_census
    table = report.details["sectors"]
    off = {sector: row for sector, row in table.items() if row["found"] != row["expected"] or not row["stable"]}
    assert not off, off
    assert report.passed
    assert table["2,1,1"]["expected"] == 6
    assert sum(len(found) for found in solutions.values()) == sum(row["expected"] for row in table.values())


def test_so6_oracle_covers_every_eigenvalue(so6_census):
    chain, settings, _, solutions = so6_census
    commute, spectrum = oracle_report(chain, solutions, settings)
    assert commute.passed
    assert spectrum.passed, spectrum.max_residual
    for sector, row in spectrum.details["sectors"].items():
        assert row["uncovered"] == 0, sector
        assert row["solutions"] == row["eigenvalues"], sector


def test_vacuum_calibration(so6_census):
    chain, settings, _, solutions = so6_census
    vacuum = solutions[(0, 0, 0)][0].system
    points = sample_points(settings.rng(22), 5) + complex(np.mean(chain.thetas))
    calibration = calibrate_vacuum(chain, vacuum, points, r_matrix_D(chain.rank, settings.rng(21)))
    _, spectrum = oracle_report(chain, solutions, settings)
    assert calibration.shift == spectrum.details["shift"]
    assert calibration.inverse_twist == spectrum.details["inverse_twist"]
    assert calibration.spread == pytest.approx(spectrum.details["vacuum_spread"])
    assert calibration.shift * 2 == int(calibration.shift * 2)
    assert np.all(np.isfinite(calibration.prefactor))
    assert np.all(np.abs(calibration.prefactor) > 0)


def test_oracle_rejects_a_missing_solution(so6_census):
    chain, settings, _, solutions = so6_census
    partial = dict(solutions)
    partial[(2, 1, 1)] = solutions[(2, 1, 1)][:-1]
    _, spectrum = oracle_report(chain, partial, settings)
    assert not spectrum.passed
    assert spectrum.details["sectors"]["2,1,1"]["uncovered"] == 1


def test_oracle_rejects_a_repeated_solution(so6_census):
    chain, settings, _, solutions = so6_census
    doubled = dict(solutions)
    doubled[(1, 0, 0)] = [solutions[(1, 0, 0)][0]] * 2
    _, spectrum = oracle_report(chain, doubled, settings)
    assert not spectrum.passed


@pytest.mark.parametrize("rank", [3, 4])
def test_random_system_d_extends(rank, settings):
    system = random_system_D(rank, np.random.default_rng(rank))
    assert system.series is Series.D
    assert system.rank == rank
    assert system.sourced
    failing = [r.relation for r in verify_system(system, "qq", settings) if not r.passed]
    assert not failing, failing
