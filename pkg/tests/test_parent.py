import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pepslab.classical import ising_ferromagnet, ising_spin_glass, potts
from pepslab.lattice import Boundary, SquareLattice
from pepslab.limits import CapExceededError
from pepslab.parent import (build_hamiltonian, degenerate_check, detailed_balance_violation, embed,
                            glauber_kernel, kernel_support, metropolis_kernel, spectral_gap)

SMALL = [SquareLattice(2, 1), SquareLattice(3, 1), SquareLattice(2, 2), SquareLattice(3, 2)]
models = st.sampled_from([
    ising_ferromagnet(SquareLattice(3, 2), field=0.3),
    ising_spin_glass(SquareLattice(2, 2, Boundary.PERIODIC), 4, 0.5),
    potts(SquareLattice(3, 1), 3),
])


def test_kernel_support_is_site_then_distinct_neighbours():
    m = ising_ferromagnet(SquareLattice(2, 2, Boundary.PERIODIC))
    assert kernel_support(m, 0) == (0, 2, 1)
    assert kernel_support(ising_ferromagnet(SquareLattice(3, 3)), 4) == (4, 1, 5, 7, 3)


@given(models, st.floats(0.0, 3.0), st.sampled_from([glauber_kernel, metropolis_kernel]), st.data())
def test_kernels_are_stochastic_and_reversible(model, beta, make, data):
    k = data.draw(st.integers(0, model.n_sites - 1))
    kern = make(model, beta, k)
    np.testing.assert_allclose(kern.matrix.sum(axis=1), 1.0, atol=1e-12)
    assert (kern.matrix >= 0).all()
    assert detailed_balance_violation(model, beta, kern) <= 1e-12
    assert kern.weight == pytest.approx(1 / model.n_sites)


def test_kernel_only_moves_its_own_site():
    m = ising_ferromagnet(SquareLattice(3, 1))
    kern = glauber_kernel(m, 0.5, 1)
    d, m_sites = 2, len(kern.support)
    stride = d ** (m_sites - 1)
    rows, cols = np.nonzero(kern.matrix)
    np.testing.assert_array_equal(rows % stride, cols % stride)


def test_bad_site():
    with pytest.raises(ValueError):
        glauber_kernel(ising_ferromagnet(SquareLattice(2, 1)), 0.5, 2)


@pytest.mark.parametrize("kernel", ["glauber", "metropolis"])
@pytest.mark.parametrize("lat", SMALL, ids=lambda lat: f"{lat.width}x{lat.height}")
@pytest.mark.parametrize("beta", [0.0, 0.3, 0.7, 1.2])
def test_parent_hamiltonian_properties(kernel, lat, beta):
    model = ising_ferromagnet(lat)
    H = build_hamiltonian(model, beta, kernel)
    assert H.residual() <= 1e-10
    dense = H.dense()
    np.testing.assert_allclose(dense, dense.T, atol=1e-14)
    evals = np.linalg.eigvalsh(dense)
    assert abs(evals[0]) <= 1e-10
    assert np.sum(np.abs(evals) <= 1e-10) == 1
    sym = np.sort(np.linalg.eigvalsh(H.symmetric_sum()))
    markov = np.sort(np.linalg.eigvals(H.markov_matrix()).real)
    np.testing.assert_allclose(sym, markov, atol=1e-9)
    rep = spectral_gap(H)
    assert rep.quantum_gap == pytest.approx(rep.markov_gap, abs=1e-9)
    assert rep.quantum_gap > 0


def test_markov_matrix_is_stochastic_and_stationary():
    model = ising_spin_glass(SquareLattice(3, 2), 2, 0.5)
    H = build_hamiltonian(model, 0.9)
    M = H.markov_matrix()
    np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=1e-12)
    p = H.ground_state ** 2
    np.testing.assert_allclose(p @ M, p, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_infinite_temperature_gap_is_one_over_n(n):
    lat = SquareLattice(n, 1) if n < 4 else SquareLattice(n // 2, 2)
    rep = spectral_gap(build_hamiltonian(ising_ferromagnet(lat), 0.0))
    assert rep.quantum_gap == pytest.approx(1 / n, abs=1e-12)
    assert rep.markov_gap == pytest.approx(1 / n, abs=1e-12)


def test_three_by_three_gap_sweep_frozen():
    model = ising_ferromagnet(SquareLattice(3, 3))
    frozen = [0.08040088857820521, 0.0536136409657017, 0.033073777175541004, 0.019022491951901012,
              0.010293274940618593, 0.005287631537753876, 0.0026021644856624327, 0.001238261721614922]
    gaps = [spectral_gap(build_hamiltonian(model, b)).quantum_gap for b in np.arange(1, 9) / 10]
    np.testing.assert_allclose(gaps, frozen, rtol=1e-9)
    assert np.all(np.diff(gaps) < 0)


def test_iterative_path_matches_dense():
    model = ising_spin_glass(SquareLattice(3, 3), 3, 0.5)
    H = build_hamiltonian(model, 0.6)
    dense = spectral_gap(H)
    iterative = spectral_gap(H, dense_cap=16)
    assert iterative.method == "iterative" and dense.method == "dense"
    assert iterative.quantum_gap == pytest.approx(dense.quantum_gap, abs=1e-9)
    assert iterative.markov_gap == pytest.approx(dense.markov_gap, abs=1e-9)


def test_dense_cap():
    H = build_hamiltonian(ising_ferromagnet(SquareLattice(3, 2)), 0.5)
    with pytest.raises(CapExceededError):
        H.dense(cap=32)


def test_embed_places_operators_on_their_sites():
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    full = embed(X, (1,), 2, 2)
    np.testing.assert_allclose(full, np.kron(np.eye(2), X))
    swap_order = embed(np.kron(X, np.eye(2)), (1, 0), 2, 2)
    np.testing.assert_allclose(swap_order, np.kron(np.eye(2), X))


def test_uniqueness_report():
    rep = degenerate_check(ising_ferromagnet(SquareLattice(2, 2)), 0.7)
    assert rep.multiplicity == 1
    assert rep.overlap == pytest.approx(1.0, abs=1e-10)
    assert rep.splitting > 0.01
    # deep in the ordered phase the two symmetry-broken sectors decouple numerically
    cold = degenerate_check(ising_ferromagnet(SquareLattice(2, 2)), 60.0)
    assert cold.multiplicity == 2
    assert cold.splitting < 1e-10
