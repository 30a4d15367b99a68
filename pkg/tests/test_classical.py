import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pepslab.classical import (ClassicalModel, GibbsOracle, all_energies, conditional_distribution,
                               config_from_index, config_index, energy, glauber_step, ising_ferromagnet,
                               ising_spin_glass, local_energies, log_partition_function, make_rng,
                               metropolis_probabilities, metropolis_step, potts, specific_heat_curve,
                               specific_heat_peak)
from pepslab.lattice import Boundary, SquareLattice
from pepslab.limits import CapExceededError

ONSAGER = 0.5 * np.log(1 + np.sqrt(2))
betas = st.floats(min_value=0.0, max_value=3.0)


def test_ferro_ground_energy_is_minus_edge_count():
    for lat in (SquareLattice(3, 3), SquareLattice(4, 2, Boundary.PERIODIC)):
        m = ising_ferromagnet(lat)
        assert energy(m, np.zeros(lat.n_sites, int)) == -lat.n_edges
        assert all_energies(m).min() == -lat.n_edges


def test_field_breaks_the_up_down_symmetry():
    m = ising_ferromagnet(SquareLattice(2, 2), field=0.25)
    assert energy(m, [0, 0, 0, 0]) == pytest.approx(-4 - 1.0)
    assert energy(m, [1, 1, 1, 1]) == pytest.approx(-4 + 1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("beta", [0.0, 0.4, 1.3])
def test_chain_partition_function(n, beta):
    m = ising_ferromagnet(SquareLattice(n, 1))
    assert log_partition_function(m, beta) == pytest.approx(np.log(2) + (n - 1) * np.log(2 * np.cosh(beta)),
                                                            abs=1e-12)


@pytest.mark.parametrize("beta", [0.0, 0.3, 0.44, 2.0])
def test_four_cycle_partition_function(beta):
    # the open 2x2 lattice is a ring of four spins
    m = ising_ferromagnet(SquareLattice(2, 2))
    exact = (2 * np.cosh(beta)) ** 4 + (2 * np.sinh(beta)) ** 4
    assert log_partition_function(m, beta) == pytest.approx(np.log(exact), abs=1e-12)


def test_spin_glass_is_seeded():
    lat = SquareLattice(3, 3)
    a, b = ising_spin_glass(lat, 7, 0.5), ising_spin_glass(lat, 7, 0.5)
    np.testing.assert_array_equal(a.edge_coupling, b.edge_coupling)
    np.testing.assert_array_equal(a.site_field, b.site_field)
    assert not np.array_equal(a.edge_coupling, ising_spin_glass(lat, 8, 0.5).edge_coupling)
    assert set(np.abs(a.edge_coupling).ravel()) == {1.0}
    assert set(np.abs(a.site_field).ravel()) == {0.5}
    # frozen regression value for seed 7
    assert log_partition_function(a, 1.0) == pytest.approx(11.896428613309176, abs=1e-10)


def test_potts():
    m = potts(SquareLattice(2, 2), 3)
    assert m.d == 3
    assert energy(m, [2, 2, 2, 2]) == -4
    assert energy(m, [0, 1, 1, 0]) == 0  # checkerboard: no satisfied bond
    with pytest.raises(ValueError):
        potts(SquareLattice(2, 2), 1)


def test_model_validation():
    lat = SquareLattice(2, 2)
    with pytest.raises(ValueError):
        ClassicalModel(lat, 2, np.zeros((3, 2, 2)))
    with pytest.raises(ValueError):
        ClassicalModel(lat, 2, np.zeros((4, 2, 2)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        ClassicalModel(lat, 2, np.full((4, 2, 2), np.nan))
    m = ising_ferromagnet(lat)
    with pytest.raises(ValueError):
        m.edge_coupling[0, 0, 0] = 5.0
    with pytest.raises(ValueError):
        energy(m, [0, 1, 2, 0])
    with pytest.raises(ValueError):
        energy(m, [0, 1])


@given(st.integers(2, 4), st.integers(1, 5), st.data())
def test_config_index_round_trip(d, n, data):
    idx = data.draw(st.integers(0, d ** n - 1))
    assert config_index(config_from_index(idx, d, n), d) == idx


@pytest.mark.parametrize("model", [
    ising_ferromagnet(SquareLattice(3, 3), field=0.3),
    ising_spin_glass(SquareLattice(3, 2, Boundary.PERIODIC), 3, 0.5),
    potts(SquareLattice(2, 3), 3),
])
def test_enumeration_matches_direct_energy(model):
    energies = all_energies(model, use_numba=False)
    # same terms, different summation order
    np.testing.assert_allclose(all_energies(model, use_numba=True), energies, rtol=0, atol=1e-12)
    for idx in range(0, len(energies), 7):
        assert energies[idx] == pytest.approx(energy(model, config_from_index(idx, model.d, model.n_sites)))


def test_enumeration_cap():
    with pytest.raises(CapExceededError):
        all_energies(ising_ferromagnet(SquareLattice(3, 3)), max_enum=256)


@given(st.floats(min_value=0.05, max_value=2.0))
def test_log_partition_derivative_is_minus_mean_energy(beta):
    m = ising_spin_glass(SquareLattice(3, 2), 5, 0.5)
    step = 1e-4
    fd = (log_partition_function(m, beta + step) - log_partition_function(m, beta - step)) / (2 * step)
    assert fd == pytest.approx(-GibbsOracle(m, beta).mean_energy(), abs=1e-6)


def test_specific_heat_is_second_derivative():
    m = ising_ferromagnet(SquareLattice(3, 3))
    beta, step = 0.45, 1e-3
    f = [log_partition_function(m, beta + k * step) for k in (-1, 0, 1)]
    fd = (f[0] - 2 * f[1] + f[2]) / step ** 2
    assert specific_heat_curve(m, [beta])[0] == pytest.approx(fd, rel=1e-5)


def test_gibbs_oracle_basics():
    m = ising_ferromagnet(SquareLattice(2, 2))
    hot = GibbsOracle(m, 0.0)
    np.testing.assert_allclose(hot.probabilities, 1 / 16)
    cold = GibbsOracle(m, 0.7)
    assert cold.probabilities.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(cold.marginal([2]), [0.5, 0.5])
    pair = cold.marginal([3, 1])
    assert pair.shape == (2, 2)
    np.testing.assert_allclose(pair, pair.T)
    assert cold.expectation([0, 1], np.outer([1, -1], [1, -1])) > 0
    with pytest.raises(ValueError):
        cold.marginal([1, 1])


def test_gibbs_oracle_survives_large_beta():
    m = ising_ferromagnet(SquareLattice(3, 3))
    p = GibbsOracle(m, 200.0).probabilities
    assert np.isfinite(p).all()
    assert p[0] == pytest.approx(0.5) and p[-1] == pytest.approx(0.5)


@pytest.mark.parametrize("boundary, frozen", [
    (Boundary.OPEN, [0.3726990147962029, 0.4370698183982483, 0.4552165913285619]),
    (Boundary.PERIODIC, [0.18630209014394003, 0.3139783925157792, 0.35597714374608475]),
])
def test_specific_heat_peaks_approach_the_critical_coupling(boundary, frozen):
    grid = np.linspace(0.05, 1.0, 96)
    peaks = [specific_heat_peak(ising_ferromagnet(SquareLattice(L, L, boundary)), grid) for L in (2, 3, 4)]
    np.testing.assert_allclose(peaks, frozen, atol=1e-9)
    assert peaks[0] < peaks[1] < peaks[2]
    assert abs(peaks[2] - ONSAGER) < abs(peaks[0] - ONSAGER)


# ---------------------------------------------------------------- local dynamics

model_strategy = st.sampled_from([
    ising_ferromagnet(SquareLattice(3, 3), field=0.2),
    ising_spin_glass(SquareLattice(3, 2, Boundary.PERIODIC), 11, 0.5),
    potts(SquareLattice(2, 3), 3),
])


@given(model_strategy, betas, st.data())
def test_local_energies_give_energy_differences(model, beta, data):
    config = np.array(data.draw(st.lists(st.integers(0, model.d - 1), min_size=model.n_sites,
                                         max_size=model.n_sites)))
    k = data.draw(st.integers(0, model.n_sites - 1))
    loc = local_energies(model, config, k)
    for s in range(model.d):
        other = config.copy()
        other[k] = s
        assert energy(model, other) - energy(model, config) == pytest.approx(loc[s] - loc[config[k]], abs=1e-12)


@given(model_strategy, betas, st.data())
def test_detailed_balance(model, beta, data):
    config = np.array(data.draw(st.lists(st.integers(0, model.d - 1), min_size=model.n_sites,
                                         max_size=model.n_sites)))
    k = data.draw(st.integers(0, model.n_sites - 1))
    for rule in (conditional_distribution, metropolis_probabilities):
        for a in range(model.d):
            ca = config.copy()
            ca[k] = a
            pa = rule(model, beta, ca, k)
            assert pa.sum() == pytest.approx(1.0) and (pa >= 0).all()
            for b in range(model.d):
                cb = config.copy()
                cb[k] = b
                pb = rule(model, beta, cb, k)
                lhs = np.exp(-beta * energy(model, ca)) * pa[b]
                rhs = np.exp(-beta * energy(model, cb)) * pb[a]
                assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("step", [glauber_step, metropolis_step])
def test_single_site_frequencies_within_three_sigma(step):
    m = potts(SquareLattice(3, 1), 3)
    beta, k, config = 0.8, 1, np.array([0, 2, 1])
    rule = conditional_distribution if step is glauber_step else metropolis_probabilities
    expected = rule(m, beta, config, k)
    rng = make_rng(2024)
    n = 20000
    counts = np.bincount([step(m, beta, config, k, rng)[k] for _ in range(n)], minlength=3)
    sigma = np.sqrt(n * expected * (1 - expected))
    assert np.all(np.abs(counts - n * expected) <= 3 * sigma)
