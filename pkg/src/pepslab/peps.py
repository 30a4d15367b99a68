"""PEPS construction.

Site tensors have legs ``(phys, up, right, down, left)``.  Virtual bonds are
plain identities between neighbouring legs; any non-trivial bond state is
absorbed into one of its endpoint tensors.  Legs facing an open boundary have
dimension 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .classical import ClassicalModel, all_energies
from .lattice import DOWN, LEFT, OPPOSITE, RIGHT, UP, Boundary, SquareLattice
from .states import StateVector

RECONSTRUCTION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Peps:
    lattice: SquareLattice
    tensors: tuple[np.ndarray, ...]

    def __post_init__(self):
        lat = self.lattice
        tensors = tuple(np.asarray(t, dtype=float) for t in self.tensors)
        if len(tensors) != lat.n_sites:
            raise ValueError(f"need {lat.n_sites} site tensors, got {len(tensors)}")
        d = tensors[0].shape[0]
        for s, t in enumerate(tensors):
            if t.ndim != 5 or t.shape[0] != d:
                raise ValueError(f"site {s}: tensor must have shape (d, up, right, down, left)")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"site {s}: non-finite entries")
            for direction in (UP, RIGHT, DOWN, LEFT):
                if lat.leg_edge(s, direction) is None and t.shape[1 + direction] != 1:
                    raise ValueError(f"site {s}: boundary leg {direction} must have dimension 1")
        for e in lat.edges:
            a = tensors[e.tail].shape[1 + e.direction]
            b = tensors[e.head].shape[1 + OPPOSITE[e.direction]]
            if a != b:
                raise ValueError(f"edge {e.id}: leg dimensions disagree ({a} vs {b})")
        object.__setattr__(self, "tensors", tensors)

    @property
    def d(self) -> int:
        return self.tensors[0].shape[0]

    @property
    def D(self) -> int:
        return max(max(t.shape[1:]) for t in self.tensors)

    def bond_dim(self, edge_id: int) -> int:
        e = self.lattice.edges[edge_id]
        return self.tensors[e.tail].shape[1 + e.direction]


# --------------------------------------------------------------------------
# gates and their factorization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GateFactorization:
    """``W[s, t] = sum_k A[s, k] B[t, k]``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    def reconstruct(self) -> np.ndarray:
        return self.A @ self.B.T

    def padded(self, r: int) -> "GateFactorization":
        if r < self.rank:
            raise ValueError("cannot pad to a smaller rank")
        pad = ((0, 0), (0, r - self.rank))
        return GateFactorization(np.pad(self.A, pad), np.pad(self.B, pad))


def boltzmann_gate(h, beta: float) -> np.ndarray:
    """Entrywise ``exp(-beta h / 2)``."""
    return np.exp(-0.5 * beta * np.asarray(h, dtype=float))


def factorize_gate(W, symmetric: bool = False, tol: float = RECONSTRUCTION_TOL) -> GateFactorization:
    """Split a two-site gate matrix into per-site factors.

    The default uses the SVD ``W = U S V^T`` with ``A = U sqrt(S)`` and
    ``B = V sqrt(S)`` truncated to the numerical rank.  ``symmetric=True``
    requires a symmetric positive semidefinite ``W`` and returns
    ``A = B = sqrt(W)``.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or not np.all(np.isfinite(W)):
        raise ValueError("gate must be a finite matrix")
    scale = max(float(np.max(np.abs(W), initial=0.0)), 1.0)
    if symmetric:
        if W.shape[0] != W.shape[1] or np.max(np.abs(W - W.T)) > tol * scale:
            raise ValueError("symmetric factorization needs a symmetric gate")
        vals, vecs = np.linalg.eigh(W)
        if vals.min() < -tol * scale:
            raise ValueError("symmetric factorization needs a positive semidefinite gate")
        root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
        root = 0.5 * (root + root.T)
        fac = GateFactorization(root, root)
    else:
        U, S, Vt = np.linalg.svd(W)
        r = max(int(np.sum(S > tol * S[0])) if S.size and S[0] > 0 else 1, 1)
        root = np.sqrt(S[:r])
        fac = GateFactorization(U[:, :r] * root, Vt[:r].T * root)
    err = np.max(np.abs(fac.reconstruct() - W), initial=0.0)
    if err > tol * scale * 10:
        raise ArithmeticError(f"gate factorization error {err:.3e} exceeds tolerance")
    return fac


def gate_peps(lattice: SquareLattice, edge_gates, site_weights=None, symmetric: bool = False,
              bond_dim: int | None = None, edge_order: Sequence[int] | None = None) -> Peps:
    """PEPS of ``prod_e W_e[s_tail, s_head] * prod_i w_i[s_i]`` applied to ``|+...+>``.

    Each gate is factorized and its ``A`` side absorbed into the endpoint with
    the smaller site id.  ``bond_dim`` zero-pads every bond to a fixed size.
    """
    edge_gates = np.asarray(edge_gates, dtype=float)
    d = edge_gates.shape[1] if site_weights is None else np.shape(site_weights)[1]
    n = lattice.n_sites
    weights = np.ones((n, d)) if site_weights is None else np.asarray(site_weights, dtype=float)
    legs = [[np.ones((d, 1)) for _ in range(4)] for _ in range(n)]
    order = range(lattice.n_edges) if edge_order is None else edge_order
    if sorted(order) != list(range(lattice.n_edges)):
        raise ValueError("edge_order must be a permutation of the edge ids")
    for eid in order:
        e = lattice.edges[eid]
        W = edge_gates[eid]
        low, high = (e.tail, e.head) if e.tail < e.head else (e.head, e.tail)
        fac = factorize_gate(W if e.tail < e.head else W.T, symmetric=symmetric)
        if bond_dim is not None:
            fac = fac.padded(bond_dim)
        low_dir = e.direction if low == e.tail else OPPOSITE[e.direction]
        legs[low][low_dir] = fac.A
        legs[high][OPPOSITE[low_dir]] = fac.B
    tensors = [np.einsum("s,su,sr,sd,sl->surdl", weights[s], *legs[s]) for s in range(n)]
    return Peps(lattice, tuple(tensors))


def thermal_peps(model: ClassicalModel, beta: float, symmetric: bool = False) -> Peps:
    """D = d PEPS whose amplitude on ``s`` is ``exp(-beta H(s) / 2)``."""
    gates = boltzmann_gate(model.edge_coupling, beta)
    weights = boltzmann_gate(model.site_field, beta)
    return gate_peps(model.lattice, gates, weights, symmetric=symmetric, bond_dim=model.d)


def coherent_state_vector(model: ClassicalModel, beta: float, max_enum: int | None = None) -> StateVector:
    """Normalized vector with amplitudes ``exp(-beta H / 2) / sqrt(Z)`` by brute force."""
    energies = all_energies(model, max_enum)
    log_amp = -0.5 * beta * energies
    log_amp -= 0.5 * logsumexp(2.0 * log_amp)
    return StateVector(model.lattice, model.d, np.exp(log_amp))


# --------------------------------------------------------------------------
# named families
# --------------------------------------------------------------------------

CZ_GATE = np.array([[1.0, 1.0], [1.0, -1.0]])


def cluster_peps(lattice: SquareLattice) -> Peps:
    """CZ on every edge of ``|+>^N``, via the signed factorization of diag(1, 1, 1, -1)."""
    if lattice.periodic:
        raise ValueError("cluster_peps needs an open lattice")
    return gate_peps(lattice, np.tile(CZ_GATE, (lattice.n_edges, 1, 1)), bond_dim=2)


def toric_code_peps(lattice: SquareLattice, beta: float | None = None) -> Peps:
    """Toric-code PEPS on a torus with checkerboard projectors.

    Even sites pair their virtual qubits as (up, right)(down, left), odd sites
    as (up, left)(right, down); physical 0/1 selects |00>+|11> / |00>-|11> on
    both pairs.  The virtual bonds then close into loops around every face
    whose top-left corner is odd.  With finite ``beta`` one bond per loop
    carries diag(1, tanh(beta/2)), which yields
    ``exp(beta/2 sum_faces Z Z Z Z)|+...+>`` up to normalization; ``None``
    is the infinite-beta limit.
    """
    if not lattice.periodic:
        raise ValueError("toric_code_peps needs a periodic lattice")
    if lattice.width % 2 or lattice.height % 2:
        raise ValueError("toric_code_peps needs even width and height")
    eq = np.eye(2)
    # sign[s, v] = (-1)^(s v)
    sign = np.array([[1.0, 1.0], [1.0, -1.0]])
    even = np.einsum("ur,dl,su,sd->surdl", eq, eq, sign, sign)
    odd = np.einsum("ul,rd,su,sr->surdl", eq, eq, sign, sign)
    tensors = []
    for s in range(lattice.n_sites):
        if lattice.checkerboard(s) == 0:
            tensors.append(even)
        else:
            t = odd
            if beta is not None:
                # the odd site's right leg is the top edge of the face it heads
                t = t * np.array([1.0, np.tanh(0.5 * beta)])[None, None, :, None, None]
            tensors.append(t)
    return Peps(lattice, tuple(tensors))


SINGLET_BOND = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def rvb_projector(lattice: SquareLattice, s: int) -> np.ndarray:
    """|0>(<0222| + perms) + |1>(<1222| + perms) restricted to existing legs.

    Missing (boundary) legs are fixed to the virtual value 2.
    """
    existing = [lattice.leg_edge(s, direction) is not None for direction in range(4)]
    shape = (2,) + tuple(3 if x else 1 for x in existing)
    P = np.zeros(shape)
    for phys in range(2):
        for leg in range(4):
            if not existing[leg]:
                continue
            idx = [2 if x else 0 for x in existing]
            idx[leg] = phys
            P[(phys, *idx)] = 1.0
    return P


def rvb_peps(lattice: SquareLattice) -> Peps:
    """Nearest-neighbour RVB as a D = 3 PEPS.

    Bonds carry ``|01> - |10> + |22>`` written A-sublattice first (A = even
    checkerboard); the bond matrix is absorbed into the A-site tensors.
    """
    if lattice.periodic:
        raise ValueError("rvb_peps needs an open lattice")
    tensors = []
    for s in range(lattice.n_sites):
        P = rvb_projector(lattice, s)
        if lattice.checkerboard(s) == 0:
            for direction in range(4):
                if lattice.leg_edge(s, direction) is not None:
                    P = np.moveaxis(np.tensordot(P, SINGLET_BOND, axes=([1 + direction], [0])), -1, 1 + direction)
        tensors.append(P)
    return Peps(lattice, tuple(tensors))


# --------------------------------------------------------------------------
# plain-text export
# --------------------------------------------------------------------------

_MAGIC = "# pepslab-peps v1"


def write_peps(peps: Peps, target) -> None:
    """Header (lattice, d, D) then each site's entries in row-major leg order, %.17g."""
    lat = peps.lattice
    lines = [_MAGIC,
             f"lattice {lat.width} {lat.height} {lat.boundary.value}",
             f"d {peps.d}",
             f"D {peps.D}"]
    for s, t in enumerate(peps.tensors):
        lines.append("site " + " ".join(str(x) for x in (s, *t.shape)))
        lines.extend(f"{x:.17g}" for x in t.reshape(-1))
    text = "\n".join(lines) + "\n"
    if isinstance(target, (str, Path)):
        Path(target).write_text(text)
    else:
        target.write(text)


def read_peps(source) -> Peps:
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    lines = text.split("\n")
    if lines[0].strip() != _MAGIC:
        raise ValueError("not a pepslab PEPS file")
    try:
        _, w, h, boundary = lines[1].split()
        lattice = SquareLattice(int(w), int(h), Boundary(boundary))
        d, D = int(lines[2].split()[1]), int(lines[3].split()[1])
        pos = 4
        tensors = []
        for s in range(lattice.n_sites):
            head = lines[pos].split()
            if head[0] != "site" or int(head[1]) != s:
                raise ValueError(f"malformed site header at line {pos + 1}")
            shape = tuple(int(x) for x in head[2:])
            size = int(np.prod(shape))
            chunk = lines[pos + 1:pos + 1 + size]
            if len(chunk) != size:
                raise ValueError(f"site {s}: file ends early")
            tensors.append(np.array([float(x) for x in chunk]).reshape(shape))
            pos += 1 + size
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed PEPS file: {exc}") from None
    peps = Peps(lattice, tuple(tensors))
    if (peps.d, peps.D) != (d, D):
        raise ValueError(f"header says d={d}, D={D} but tensors give d={peps.d}, D={peps.D}")
    return peps
