import pytest
from hypothesis import given
from hypothesis import strategies as st

from pepslab.lattice import DOWN, LEFT, RIGHT, UP, Block, Boundary, SquareLattice

dims = st.integers(min_value=2, max_value=6)
boundaries = st.sampled_from(list(Boundary))


def test_site_coords_round_trip():
    lat = SquareLattice(4, 3)
    for s in range(lat.n_sites):
        assert lat.site(*lat.coords(s)) == s
    assert lat.site(1, 2) == 6


@pytest.mark.parametrize("w, h, boundary, n_edges", [
    (1, 1, Boundary.OPEN, 0),
    (2, 1, Boundary.OPEN, 1),
    (3, 3, Boundary.OPEN, 12),
    (4, 4, Boundary.OPEN, 24),
    (2, 2, Boundary.PERIODIC, 8),
    (4, 2, Boundary.PERIODIC, 16),
    (3, 3, Boundary.PERIODIC, 18),
])
def test_edge_counts(w, h, boundary, n_edges):
    assert SquareLattice(w, h, boundary).n_edges == n_edges


@given(dims, dims, boundaries)
def test_degree_sum_is_twice_edges(w, h, boundary):
    lat = SquareLattice(w, h, boundary)
    assert sum(lat.degree(s) for s in range(lat.n_sites)) == 2 * lat.n_edges


def test_thin_torus_keeps_parallel_edges():
    lat = SquareLattice(2, 2, Boundary.PERIODIC)
    assert lat.neighbors(0) == [2, 1, 2, 1]
    assert len({lat.leg_edge(0, d) for d in (UP, RIGHT, DOWN, LEFT)}) == 4


@given(dims, dims, boundaries)
def test_leg_edges_pair_up(w, h, boundary):
    lat = SquareLattice(w, h, boundary)
    for e in lat.edges:
        opposite = LEFT if e.direction == RIGHT else UP
        assert lat.leg_edge(e.tail, e.direction) == e.id
        assert lat.leg_edge(e.head, opposite) == e.id


@given(dims, dims, boundaries, st.data())
def test_boundary_edges_of_complement(w, h, boundary, data):
    lat = SquareLattice(w, h, boundary)
    sites = data.draw(st.sets(st.integers(0, lat.n_sites - 1)))
    block = Block(sites)
    assert lat.boundary_edges(block) == lat.boundary_edges(block.complement(lat))


@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 3))
def test_square_block_perimeter(L, r, c):
    # any L x L block clear of the open boundary cuts 4L bonds
    lat = SquareLattice(L + 4, L + 4)
    assert len(lat.boundary_edges(lat.rectangle(r, c, L, L))) == 4 * L


def test_corner_block_has_fewer_cut_bonds():
    lat = SquareLattice(4, 4)
    assert len(lat.boundary_edges(lat.rectangle(0, 0, 2, 2))) == 4
    torus = SquareLattice(4, 4, Boundary.PERIODIC)
    assert len(torus.boundary_edges(torus.rectangle(0, 0, 2, 2))) == 8


@pytest.mark.parametrize("w, h", [(1, 2), (2, 3), (3, 3), (4, 4)])
def test_rectangular_block_count(w, h):
    lat = SquareLattice(w, h)
    # every axis-aligned rectangle except the whole lattice
    expected = (w * (w + 1) // 2) * (h * (h + 1) // 2) - 1
    blocks = list(lat.rectangular_blocks())
    assert len(blocks) == expected
    assert len(set(blocks)) == expected


def test_checkerboard():
    lat = SquareLattice(3, 2)
    assert [lat.checkerboard(s) for s in range(6)] == [0, 1, 0, 1, 0, 1]


def test_invalid_lattices_and_sites():
    with pytest.raises(ValueError):
        SquareLattice(0, 3)
    with pytest.raises(ValueError):
        SquareLattice(1, 3, Boundary.PERIODIC)
    lat = SquareLattice(2, 2)
    with pytest.raises(ValueError):
        lat.neighbors(4)
    with pytest.raises(ValueError):
        lat.site(2, 0)


def test_to_dict():
    assert SquareLattice(3, 2, Boundary.PERIODIC).to_dict() == {
        "width": 3, "height": 2, "boundary": "periodic"}
