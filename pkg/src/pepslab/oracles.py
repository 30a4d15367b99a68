"""Independent brute-force constructions used to check the PEPS builders.

None of these touch the PEPS code: they build state vectors directly from
circuits, coverings or constraints.
"""
from __future__ import annotations

import numpy as np

from .lattice import Block, SquareLattice
from .states import StateVector
from .limits import check_enum


def _plus_state(n: int, d: int = 2) -> np.ndarray:
    return np.ones((d,) * n)


def apply_diagonal_edge_gates(lattice: SquareLattice, gates, vector=None, order=None) -> np.ndarray:
    """Multiply ``|+...+>`` (or ``vector``) by ``W_e[s_tail, s_head]`` edge by edge."""
    gates = np.asarray(gates, dtype=float)
    n = lattice.n_sites
    d = gates.shape[1]
    check_enum(d, n)
    psi = _plus_state(n, d) if vector is None else np.array(vector, dtype=float).reshape((d,) * n)
    for eid in (range(lattice.n_edges) if order is None else order):
        e = lattice.edges[eid]
        view = [1] * n
        view[e.tail] = d
        view[e.head] = d
        W = gates[eid] if e.tail < e.head else gates[eid].T
        psi = psi * W.reshape(view)
    return psi.reshape(-1)


def cluster_state_vector(lattice: SquareLattice) -> StateVector:
    """CZ on every edge applied to ``|+>^N``, gate by gate."""
    n = lattice.n_sites
    check_enum(2, n)
    psi = np.full(2 ** n, 2.0 ** (-n / 2))
    idx = np.arange(2 ** n)
    for e in lattice.edges:
        bt = (idx >> (n - 1 - e.tail)) & 1
        bh = (idx >> (n - 1 - e.head)) & 1
        psi = np.where(bt & bh, -psi, psi)
    return StateVector(lattice, 2, psi)


def cluster_stabilizer_values(state: StateVector) -> np.ndarray:
    """``<K_a>`` for ``K_a = X_a prod_{b ~ a} Z_b`` at every site."""
    lat = state.lattice
    n = lat.n_sites
    psi = state.amplitudes / np.sqrt(state.norm_sq)
    idx = np.arange(2 ** n)
    out = np.empty(n)
    for a in range(n):
        flipped = psi[idx ^ (1 << (n - 1 - a))]
        sign = np.ones(2 ** n)
        for b in lat.neighbors(a):
            sign *= 1 - 2 * ((idx >> (n - 1 - b)) & 1)
        # <psi| X_a Z_nbrs |psi> = sum_x psi(x ^ a) * sign(x) * psi(x)
        out[a] = float(np.sum(flipped * sign * psi))
    return out


def ghz_vector(lattice: SquareLattice) -> StateVector:
    n = lattice.n_sites
    psi = np.zeros(2 ** n)
    psi[0] = psi[-1] = 2 ** -0.5
    return StateVector(lattice, 2, psi)


# --------------------------------------------------------------------------
# dimer coverings and the RVB state
# --------------------------------------------------------------------------

def dimer_coverings(lattice: SquareLattice) -> list[tuple[int, ...]]:
    """Every perfect matching of the lattice graph, as sorted edge-id tuples."""
    n = lattice.n_sites
    out: list[tuple[int, ...]] = []

    def extend(free: frozenset[int], chosen: list[int]) -> None:
        if not free:
            out.append(tuple(sorted(chosen)))
            return
        s = min(free)
        for _, eid in lattice.incident_edges(s):
            e = lattice.edges[eid]
            other = e.head if e.tail == s else e.tail
            if other in free and other != s:
                extend(free - {s, other}, chosen + [eid])

    extend(frozenset(range(n)), [])
    return out


def rvb_state_vector(lattice: SquareLattice) -> StateVector:
    """Sum over coverings of products of ``|01> - |10>`` singlets, A-sublattice first."""
    n = lattice.n_sites
    check_enum(2, n)
    total = np.zeros((2,) * n)
    for covering in dimer_coverings(lattice):
        psi = np.ones((2,) * n)
        for eid in covering:
            e = lattice.edges[eid]
            a, b = (e.tail, e.head) if lattice.checkerboard(e.tail) == 0 else (e.head, e.tail)
            singlet = np.array([[0.0, 1.0], [-1.0, 0.0]])  # [s_a, s_b]
            view = [1] * n
            view[a] = view[b] = 2
            psi = psi * (singlet if a < b else singlet.T).reshape(view)
        total += psi
    return StateVector(lattice, 2, total.reshape(-1))


# --------------------------------------------------------------------------
# toric code on site spins
# --------------------------------------------------------------------------

def constrained_faces(lattice: SquareLattice) -> list[tuple[int, int, int, int]]:
    """Faces whose top-left corner is an odd site, as (TL, TR, BR, BL) site tuples."""
    if not lattice.periodic:
        raise ValueError("constrained faces are defined on tori")
    faces = []
    for r in range(lattice.height):
        for c in range(lattice.width):
            if (r + c) % 2 == 1:
                r1, c1 = (r + 1) % lattice.height, (c + 1) % lattice.width
                faces.append((lattice.site(r, c), lattice.site(r, c1),
                              lattice.site(r1, c1), lattice.site(r1, c)))
    return faces


def toric_code_state_vector(lattice: SquareLattice, beta: float | None = None) -> StateVector:
    """``exp(beta/2 sum_faces Z^4) |+...+>`` on the constrained faces; ``None`` = projector limit."""
    n = lattice.n_sites
    check_enum(2, n)
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    psi = np.ones(2 ** n)
    for face in constrained_faces(lattice):
        parity = bits[:, list(face)].sum(axis=1) % 2
        z = 1.0 - 2.0 * parity
        psi = psi * ((z > 0).astype(float) if beta is None else np.exp(0.5 * beta * (z - 1.0)))
    return StateVector(lattice, 2, psi)


def face_parity_matrix(lattice: SquareLattice) -> np.ndarray:
    """GF(2) rows, one per constrained face, marking its four sites."""
    faces = constrained_faces(lattice)
    H = np.zeros((len(faces), lattice.n_sites), dtype=np.uint8)
    for i, face in enumerate(faces):
        for s in face:
            H[i, s] ^= 1
    return H


def gf2_rank(M: np.ndarray) -> int:
    M = (np.array(M, dtype=np.uint8) & 1).copy()
    rank = 0
    rows, cols = M.shape if M.ndim == 2 else (0, 0)
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if M[r, c]), None)
        if pivot is None:
            continue
        M[[rank, pivot]] = M[[pivot, rank]]
        for r in range(rows):
            if r != rank and M[r, c]:
                M[r] ^= M[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def gf2_nullspace(H: np.ndarray) -> np.ndarray:
    """Basis (rows) of ``{x : H x = 0}`` over GF(2)."""
    H = (np.array(H, dtype=np.uint8) & 1).copy()
    rows, cols = H.shape
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if H[i, c]), None)
        if pivot is None:
            continue
        H[[r, pivot]] = H[[pivot, r]]
        for i in range(rows):
            if i != r and H[i, c]:
                H[i] ^= H[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        x = np.zeros(cols, dtype=np.uint8)
        x[f] = 1
        for i, c in enumerate(pivots):
            x[c] = H[i, f]
        basis.append(x)
    return np.array(basis, dtype=np.uint8).reshape(len(basis), cols)


def stabilizer_entropy(lattice: SquareLattice, region) -> float:
    """Entropy (bits) of a region of the infinite-beta toric state by stabilizer counting.

    The state is the uniform superposition over the code ``C = ker H``; its
    stabilizer group is ``X^C x Z^rowspace(H)``, so
    ``S(A) = |A| - dim C_A - dim (rowspace H)_A`` where ``G_A`` counts group
    elements supported inside ``A``.
    """
    sites = sorted(region.sites if isinstance(region, Block) else region)
    outside = [s for s in range(lattice.n_sites) if s not in sites]
    H = face_parity_matrix(lattice)
    G = gf2_nullspace(H)
    dim_z = gf2_rank(H) - gf2_rank(H[:, outside]) if outside else gf2_rank(H)
    dim_x = G.shape[0] - gf2_rank(G[:, outside]) if outside else G.shape[0]
    return float(len(sites) - dim_x - dim_z)


def stabilizer_topological_entropy(lattice: SquareLattice, A: Block, B: Block, C: Block) -> float:
    S = {}
    regions = {"A": A, "B": B, "C": C}
    for names in ("A", "B", "C", "AB", "AC", "BC", "ABC"):
        sites = frozenset().union(*(regions[x].sites for x in names))
        S[names] = stabilizer_entropy(lattice, sites)
    return S["A"] + S["B"] + S["C"] - S["AB"] - S["AC"] - S["BC"] + S["ABC"]

