import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pepslab.contraction import entropy_bits, to_statevector
from pepslab.lattice import Block, Boundary, SquareLattice
from pepslab.oracles import (apply_diagonal_edge_gates, cluster_stabilizer_values, cluster_state_vector,
                             constrained_faces, face_parity_matrix, gf2_nullspace, gf2_rank,
                             stabilizer_entropy, stabilizer_topological_entropy, toric_code_state_vector)
from pepslab.peps import cluster_peps, toric_code_peps
from pepslab.states import StateVector


def test_gf2_rank_and_nullspace():
    M = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=np.uint8)
    assert gf2_rank(M) == 2
    N = gf2_nullspace(M)
    assert N.shape == (1, 3)
    np.testing.assert_array_equal((M @ N.T) % 2, 0)


@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2 ** 16))
def test_nullspace_dimension(rows, cols, seed):
    M = np.random.default_rng(seed).integers(0, 2, size=(rows, cols)).astype(np.uint8)
    N = gf2_nullspace(M)
    assert N.shape[0] == cols - gf2_rank(M)
    np.testing.assert_array_equal((M.astype(int) @ N.T.astype(int)) % 2, 0)
    if N.shape[0]:
        assert gf2_rank(N) == N.shape[0]


def test_constrained_faces_form_a_checkerboard():
    lat = SquareLattice(4, 2, Boundary.PERIODIC)
    faces = constrained_faces(lat)
    assert faces == [(1, 2, 6, 5), (3, 0, 4, 7), (4, 5, 1, 0), (6, 7, 3, 2)]
    H = face_parity_matrix(lat)
    assert H.sum(axis=0).tolist() == [2] * 8
    assert gf2_rank(H) == 3  # one relation among the four faces
    with pytest.raises(ValueError):
        constrained_faces(SquareLattice(4, 2))


@pytest.mark.parametrize("w, h", [(4, 2), (2, 4), (4, 4)])
def test_stabilizer_entropy_matches_statevector(w, h):
    lat = SquareLattice(w, h, Boundary.PERIODIC)
    sv = toric_code_state_vector(lat)
    rng = np.random.default_rng(w * 10 + h)
    for _ in range(12):
        region = sorted(rng.choice(lat.n_sites, size=rng.integers(1, lat.n_sites), replace=False).tolist())
        assert stabilizer_entropy(lat, region) == pytest.approx(entropy_bits(sv, region), abs=1e-9)


@pytest.mark.parametrize("w", [4, 6, 8])
def test_column_tripartition_has_one_bit(w):
    lat = SquareLattice(w, 2, Boundary.PERIODIC)
    col = lambda c: Block([lat.site(0, c), lat.site(1, c)])  # noqa: E731
    assert stabilizer_topological_entropy(lat, col(w - 1), col(w - 2), col(0)) == 1.0


def test_toric_oracle_at_zero_beta_is_plus_state():
    lat = SquareLattice(4, 2, Boundary.PERIODIC)
    np.testing.assert_allclose(toric_code_state_vector(lat, 0.0).amplitudes, 1.0)


def test_cluster_stabilizers_on_circuit_and_peps():
    for lat in (SquareLattice(2, 2), SquareLattice(3, 2), SquareLattice(2, 3)):
        np.testing.assert_allclose(cluster_stabilizer_values(cluster_state_vector(lat)), 1.0, atol=1e-12)
        np.testing.assert_allclose(cluster_stabilizer_values(to_statevector(cluster_peps(lat))), 1.0,
                                   atol=1e-12)


def test_stabilizers_detect_a_wrong_state():
    lat = SquareLattice(2, 2)
    wrong = to_statevector(toric_code_peps(SquareLattice(2, 2, Boundary.PERIODIC)))
    values = cluster_stabilizer_values(StateVector(lat, 2, wrong.amplitudes))
    assert not np.allclose(values, 1.0)


def test_diagonal_gates_commute():
    lat = SquareLattice(3, 2)
    rng = np.random.default_rng(3)
    gates = rng.normal(size=(lat.n_edges, 2, 2))
    a = apply_diagonal_edge_gates(lat, gates)
    b = apply_diagonal_edge_gates(lat, gates, order=list(rng.permutation(lat.n_edges)))
    np.testing.assert_allclose(a, b, rtol=1e-13)
