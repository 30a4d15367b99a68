"""Exact PEPS contraction and entanglement diagnostics.

Everything here is exact: rows are contracted into row operators and swept
top to bottom without truncation.  On tori the open top legs are carried
along and traced against the last row at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .classical import ClassicalModel, GibbsOracle, ISING_SIGN
from .lattice import Block, SquareLattice
from .limits import MAX_CONTRACTION_BITS, CapExceededError, check_enum
from .peps import Peps, thermal_peps
from .states import PAULI_X, Observable, StateVector

SCHMIDT_TOL = 1e-10


# --------------------------------------------------------------------------
# row-sweep contraction
# --------------------------------------------------------------------------

def _contract_row(row: list[np.ndarray], wrap: bool) -> np.ndarray:
    """Contract one row left to right into an array of shape (phys, up, down)."""
    t = row[0]
    p, u, r, dn, l = t.shape
    # (P, U, D, L, R)
    acc = t.transpose(0, 1, 3, 4, 2)
    for t in row[1:]:
        P, U, D, L, R = acc.shape
        p, u, r, dn, l = t.shape
        acc = np.tensordot(acc, t, axes=([4], [4]))  # P U D L p u r dn
        acc = acc.transpose(0, 4, 1, 5, 2, 7, 3, 6).reshape(P * p, U * u, D * dn, L, r)
    if wrap:
        return np.trace(acc, axis1=3, axis2=4)
    return acc[..., 0, 0]


def _contract(peps_lattice: SquareLattice, tensors) -> np.ndarray:
    lat = peps_lattice
    w = lat.width
    rows = [_contract_row(list(tensors[r * w:(r + 1) * w]), lat.periodic) for r in range(lat.height)]
    first = rows[0]
    if lat.height == 1:
        # top and bottom legs are the same bonds only on tori, which need height >= 2
        return first[:, 0, 0]
    acc = first.transpose(1, 0, 2)  # (top, phys, down)
    for row in rows[1:-1]:
        T, P, K = acc.shape
        acc = np.tensordot(acc, row, axes=([2], [1]))  # T P p D
        acc = acc.reshape(T, P * row.shape[0], row.shape[2])
    last = rows[-1]
    T, P, K = acc.shape
    if lat.periodic:
        # sum_{t,k} acc[t, P, k] last[p, k, t]
        left = acc.transpose(1, 0, 2).reshape(P, T * K)
        right = last.transpose(2, 1, 0).reshape(T * K, last.shape[0])
        return (left @ right).reshape(-1)
    return (acc[0] @ last[:, :, 0].T).reshape(-1)


def _check_width(peps: Peps) -> None:
    lat = peps.lattice
    bits = lat.width * math.log2(max(peps.D, 1))
    if lat.periodic:
        bits *= 2
    if bits > MAX_CONTRACTION_BITS:
        raise CapExceededError(f"boundary of {bits:.1f} bits exceeds the contraction cap {MAX_CONTRACTION_BITS}")


def amplitude(peps: Peps, config) -> float:
    """Unnormalized amplitude with the physical legs fixed to ``config``."""
    _check_width(peps)
    config = np.asarray(config, dtype=np.int64)
    if config.shape != (peps.lattice.n_sites,):
        raise ValueError(f"configuration must have length {peps.lattice.n_sites}")
    if np.any(config < 0) or np.any(config >= peps.d):
        raise ValueError(f"configuration entries must lie in [0, {peps.d})")
    sliced = [t[c:c + 1] for t, c in zip(peps.tensors, config)]
    return float(_contract(peps.lattice, sliced)[0])


def contract_full(peps: Peps, max_enum: int | None = None) -> np.ndarray:
    """Every unnormalized amplitude, site 0 most significant."""
    check_enum(peps.d, peps.lattice.n_sites, max_enum)
    _check_width(peps)
    return _contract(peps.lattice, peps.tensors)


def to_statevector(peps: Peps, max_enum: int | None = None) -> StateVector:
    raw = StateVector(peps.lattice, peps.d, contract_full(peps, max_enum))
    return raw.normalized()


# --------------------------------------------------------------------------
# expectation values
# --------------------------------------------------------------------------

def _front(state: StateVector, sites) -> np.ndarray:
    """State as a (d^|sites|, rest) matrix with ``sites`` leading in the given order."""
    sites = [int(s) for s in sites]
    for s in sites:
        state.lattice._check_site(s)
    rest = [i for i in range(state.n_sites) if i not in sites]
    psi = state.tensor().transpose(sites + rest)
    return psi.reshape(state.d ** len(sites), -1)


def expectation(state: StateVector, obs: Observable) -> float:
    """``<psi|O|psi> / <psi|psi>``."""
    k = len(obs.support)
    if obs.matrix.shape != (state.d ** k,) * 2:
        raise ValueError("observable dimension does not match its support")
    M = _front(state, obs.support)
    return float(np.sum(M * (obs.matrix @ M)) / state.norm_sq)


def pauli_x_expectation(state: StateVector, site: int) -> float:
    if state.d != 2:
        raise ValueError("Pauli X needs a two-state model")
    return expectation(state, Observable((site,), PAULI_X))


def off_diagonal_identity_check(model: ClassicalModel, beta: float, site: int,
                                max_enum: int | None = None) -> tuple[float, float]:
    """Both sides of the transverse-magnetization identity.

    ``lhs`` is ``<psi|X_site|psi>`` on the contracted thermal PEPS; ``rhs`` is
    the Gibbs average of the single-flip weight
    ``exp(-beta [H(s^flip) - H(s)] / 2)``.
    """
    if model.d != 2:
        raise ValueError("the flip identity is defined for two-state models")
    state = to_statevector(thermal_peps(model, beta), max_enum)
    lhs = pauli_x_expectation(state, site)
    oracle = GibbsOracle(model, beta, max_enum)
    n = model.n_sites
    idx = np.arange(2 ** n)
    flipped = idx ^ (1 << (n - 1 - site))
    delta = oracle.energies[flipped] - oracle.energies
    rhs = float(oracle.probabilities @ np.exp(-0.5 * beta * delta))
    return lhs, rhs


def reduced_density(state: StateVector, block) -> np.ndarray:
    sites = sorted(block.sites if isinstance(block, Block) else block)
    check_enum(state.d, len(sites))
    M = _front(state, sites)
    rho = M @ M.T / state.norm_sq
    return 0.5 * (rho + rho.T)


@dataclass(frozen=True)
class SpectrumReport:
    schmidt_values: np.ndarray
    entropy_bits: float
    rank: int

    def to_dict(self) -> dict:
        return {"schmidt_values": [float(x) for x in self.schmidt_values],
                "entropy_bits": self.entropy_bits, "rank": self.rank}


def schmidt_values(state: StateVector, block) -> np.ndarray:
    """Descending Schmidt coefficients of the block / complement cut."""
    sites = sorted(block.sites if isinstance(block, Block) else block)
    if len(sites) in (0, state.n_sites):
        return np.array([1.0])
    M = _front(state, sites)
    if M.shape[0] > M.shape[1]:
        M = M.T
    vals = np.linalg.svd(M, compute_uv=False)
    return vals / np.sqrt(np.sum(vals ** 2))


def entanglement_report(state: StateVector, block, tol: float = SCHMIDT_TOL) -> SpectrumReport:
    vals = schmidt_values(state, block)
    kept = vals[vals > tol * vals[0]]
    probs = kept ** 2
    entropy = float(-np.sum(probs * np.log2(probs)))
    return SpectrumReport(vals, max(entropy, 0.0) + 0.0, int(kept.size))


def entropy_bits(state: StateVector, block) -> float:
    return entanglement_report(state, block).entropy_bits


# --------------------------------------------------------------------------
# correlations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Correlation:
    raw: float
    connected: float


def correlation(source, i: int, j: int, values=None) -> Correlation:
    """``<Z_i Z_j>`` raw and connected, from a StateVector or a GibbsOracle.

    ``values`` gives the diagonal of the single-site operator (Ising sign by
    default).
    """
    if isinstance(source, StateVector):
        d = source.d
    elif isinstance(source, GibbsOracle):
        d = source.model.d
    else:
        raise TypeError("correlation needs a StateVector or a GibbsOracle")
    z = ISING_SIGN if values is None else np.asarray(values, dtype=float)
    if z.shape != (d,):
        raise ValueError("single-site values must have length d")
    if isinstance(source, StateVector):
        mean_i = expectation(source, Observable.diagonal((i,), z))
        mean_j = expectation(source, Observable.diagonal((j,), z))
        if i == j:
            raw = expectation(source, Observable.diagonal((i,), z * z))
        else:
            raw = expectation(source, Observable.diagonal((i, j), np.outer(z, z)))
    else:
        mean_i = source.expectation((i,), z)
        mean_j = source.expectation((j,), z)
        raw = source.expectation((i,), z * z) if i == j else source.expectation((i, j), np.outer(z, z))
    return Correlation(raw, raw - mean_i * mean_j)


# --------------------------------------------------------------------------
# topological entropy
# --------------------------------------------------------------------------

def region_entropies(state: StateVector, A: Block, B: Block, C: Block) -> dict[str, float]:
    regions = {"A": A, "B": B, "C": C}
    for (na, ra), (nb, rb) in combinations(regions.items(), 2):
        if ra.sites & rb.sites:
            raise ValueError(f"regions {na} and {nb} overlap")
    out = {}
    for r in range(1, 4):
        for names in combinations("ABC", r):
            union = Block(frozenset().union(*(regions[n].sites for n in names)))
            out["".join(names)] = entropy_bits(state, union)
    return out


def topological_entropy(state: StateVector, A: Block, B: Block, C: Block) -> float:
    """``S_A + S_B + S_C - S_AB - S_AC - S_BC + S_ABC`` in bits."""
    S = region_entropies(state, A, B, C)
    return S["A"] + S["B"] + S["C"] - S["AB"] - S["AC"] - S["BC"] + S["ABC"]
