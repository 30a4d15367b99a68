"""Parent Hamiltonians from detailed-balance Markov kernels.

A single-site kernel ``K_k`` resamples site ``k`` given its neighbours.  With
the random-site weight ``1/N`` the sum ``M = sum_k M_k``, ``M_k = K_k / N``,
is a stochastic matrix.  Matrices are row-stochastic, ``M[a, b] = Prob(a -> b)``,
which is the convention under which ``diag(exp(-beta H/2)) M diag(exp(beta H/2))``
is symmetric.  ``H(beta) = 1 - sum_k P_k`` then annihilates the coherent
thermal state.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse.linalg as sla

from .classical import ClassicalModel, conditional_distribution, metropolis_probabilities
from .limits import MAX_DENSE_DIM, CapExceededError, check_enum
from .peps import coherent_state_vector

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LocalKernel:
    """Single-site update on ``support = (site, *distinct neighbours)``.

    ``matrix`` is the row-stochastic update restricted to the support
    configurations; ``weight`` is the 1/N random-site factor.
    """

    site: int
    support: tuple[int, ...]
    matrix: np.ndarray
    weight: float

    @property
    def scaled(self) -> np.ndarray:
        return self.weight * self.matrix


def kernel_support(model: ClassicalModel, k: int) -> tuple[int, ...]:
    seen = [k]
    for s in model.lattice.neighbors(k):
        if s not in seen:
            seen.append(s)
    return tuple(seen)


def _local_configs(model: ClassicalModel, support) -> np.ndarray:
    m = len(support)
    return np.array(np.unravel_index(np.arange(model.d ** m), (model.d,) * m)).T


def _embed_config(model: ClassicalModel, support, local) -> np.ndarray:
    # only the support entries matter for local energies
    config = np.zeros(model.n_sites, dtype=np.int64)
    config[list(support)] = local
    return config


def _build_kernel(model: ClassicalModel, beta: float, k: int, rule) -> LocalKernel:
    support = kernel_support(model, k)
    d = model.d
    configs = _local_configs(model, support)
    dim = len(configs)
    K = np.zeros((dim, dim))
    stride = d ** (len(support) - 1)  # site k is the leading support axis
    for a, local in enumerate(configs):
        probs = rule(model, beta, _embed_config(model, support, local), k)
        base = a % stride
        for s in range(d):
            K[a, s * stride + base] = probs[s]
    return LocalKernel(k, support, K, 1.0 / model.n_sites)


def glauber_kernel(model: ClassicalModel, beta: float, k: int) -> LocalKernel:
    """Heat-bath resampling of site ``k`` from its conditional Gibbs law."""
    model.lattice._check_site(k)
    return _build_kernel(model, beta, k, conditional_distribution)


def metropolis_kernel(model: ClassicalModel, beta: float, k: int) -> LocalKernel:
    model.lattice._check_site(k)
    return _build_kernel(model, beta, k, metropolis_probabilities)


KERNELS = {"glauber": glauber_kernel, "metropolis": metropolis_kernel}


def local_site_energy(model: ClassicalModel, kernel: LocalKernel) -> np.ndarray:
    """Energy terms touching ``kernel.site``, for every support configuration."""
    configs = _local_configs(model, kernel.support)
    pos = {s: i for i, s in enumerate(kernel.support)}
    k = kernel.site
    out = model.site_field[k][configs[:, 0]].copy()
    for _, eid in model.lattice.incident_edges(k):
        e = model.lattice.edges[eid]
        out += model.edge_coupling[eid][configs[:, pos[e.tail]], configs[:, pos[e.head]]]
    return out


def detailed_balance_violation(model: ClassicalModel, beta: float, kernel: LocalKernel) -> float:
    """``max |p_a M_ab - p_b M_ba|`` with local Boltzmann weights (relative to the largest)."""
    E = local_site_energy(model, kernel)
    logp = -beta * (E - E.min())
    flow = np.exp(logp)[:, None] * kernel.matrix
    return float(np.max(np.abs(flow - flow.T)))


def symmetrize(kernel: LocalKernel, model: ClassicalModel, beta: float) -> np.ndarray:
    """``P_k = e^{-beta H/2} M_k e^{+beta H/2}`` restricted to the kernel support.

    Only energy terms touching the updated site survive the conjugation.
    """
    E = local_site_energy(model, kernel)
    P = kernel.scaled * np.exp(-0.5 * beta * (E[:, None] - E[None, :]))
    P = np.where(kernel.matrix > 0, P, 0.0)
    asym = np.max(np.abs(P - P.T), initial=0.0)
    if asym > SYMMETRY_TOL:
        raise ArithmeticError(f"symmetrized kernel at site {kernel.site} is asymmetric by {asym:.3e}; "
                              "detailed balance is broken upstream")
    return 0.5 * (P + P.T)


# --------------------------------------------------------------------------
# local operators on the full space
# --------------------------------------------------------------------------

def apply_local(op: np.ndarray, support, vectors: np.ndarray, d: int, n_sites: int) -> np.ndarray:
    """Apply a local operator to vectors of shape (d^N,) or (d^N, batch)."""
    batch = vectors.shape[1:] if vectors.ndim > 1 else ()
    psi = vectors.reshape((d,) * n_sites + batch)
    m = len(support)
    opt = op.reshape((d,) * (2 * m))
    out = np.tensordot(opt, psi, axes=(list(range(m, 2 * m)), list(support)))
    # tensordot puts the support axes first; move them back into place
    out = np.moveaxis(out, list(range(m)), list(support))
    return out.reshape(vectors.shape)


def embed(op: np.ndarray, support, d: int, n_sites: int) -> np.ndarray:
    dim = d ** n_sites
    return apply_local(op, support, np.eye(dim), d, n_sites)


@dataclass(eq=False)
class ParentHamiltonian:
    model: ClassicalModel
    beta: float
    kernels: list[LocalKernel]
    terms: list[np.ndarray]  # P_k on each kernel's support

    @property
    def dim(self) -> int:
        return self.model.d ** self.model.n_sites

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Matrix-free ``H v``; terms are reduced in site order."""
        out = vectors.copy()
        for kern, P in zip(self.kernels, self.terms):
            out -= apply_local(P, kern.support, vectors, self.model.d, self.model.n_sites)
        return out

    def _check_dense(self, cap):
        cap = MAX_DENSE_DIM if cap is None else cap
        if self.dim > cap:
            raise CapExceededError(f"dense assembly of dimension {self.dim} exceeds {cap}")

    def dense(self, cap: int | None = None) -> np.ndarray:
        self._check_dense(cap)
        H = self.apply(np.eye(self.dim))
        return 0.5 * (H + H.T)

    def symmetric_sum(self, cap: int | None = None) -> np.ndarray:
        """``sum_k P_k`` as a dense matrix."""
        self._check_dense(cap)
        return np.eye(self.dim) - self.dense(cap)

    def markov_matrix(self, cap: int | None = None) -> np.ndarray:
        """``sum_k M_k`` as a dense row-stochastic matrix."""
        self._check_dense(cap)
        d, n = self.model.d, self.model.n_sites
        M = np.zeros((self.dim, self.dim))
        for kern in self.kernels:
            M += embed(kern.scaled, kern.support, d, n)
        return M

    @cached_property
    def ground_state(self) -> np.ndarray:
        return coherent_state_vector(self.model, self.beta).amplitudes

    def residual(self) -> float:
        """``||H psi_beta|| / ||psi_beta||``."""
        psi = self.ground_state
        return float(np.linalg.norm(self.apply(psi)) / np.linalg.norm(psi))


def build_hamiltonian(model: ClassicalModel, beta: float, kernel: str = "glauber",
                      max_enum: int | None = None) -> ParentHamiltonian:
    check_enum(model.d, model.n_sites, max_enum)
    make = KERNELS[kernel]
    kernels = [make(model, beta, k) for k in range(model.n_sites)]
    terms = [symmetrize(kern, model, beta) for kern in kernels]
    return ParentHamiltonian(model, float(beta), kernels, terms)


# --------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GapReport:
    ground_energy: float
    quantum_gap: float
    markov_gap: float
    method: str


def spectral_gap(H: ParentHamiltonian, dense_cap: int | None = None, tol: float = 1e-12) -> GapReport:
    """Gap of ``H`` and, independently, ``1 - lambda_2`` of the Markov matrix.

    Dense eigensolves up to ``dense_cap``; beyond that a Lanczos solve on ``H``
    with the known ground state shifted out, and an Arnoldi solve on ``M``
    with the stationary projector removed.
    """
    cap = MAX_DENSE_DIM if dense_cap is None else dense_cap
    if H.dim <= cap:
        evals = np.linalg.eigvalsh(H.dense(cap))
        markov = np.sort(np.linalg.eigvals(H.markov_matrix(cap)).real)[::-1]
        return GapReport(float(evals[0]), float(evals[1] - evals[0]), float(1.0 - markov[1]), "dense")
    psi = H.ground_state / np.linalg.norm(H.ground_state)
    shift = 4.0  # spectrum of H lies in [0, 2]

    def deflated(v):
        v = np.asarray(v).reshape(-1)
        return H.apply(v) + shift * psi * (psi @ v)

    op = sla.LinearOperator((H.dim, H.dim), matvec=deflated, dtype=float)
    try:
        lam = sla.eigsh(op, k=1, which="SA", tol=tol, maxiter=50 * H.dim)[0]
    except sla.ArpackNoConvergence as exc:
        raise RuntimeError("Lanczos did not converge for the Hamiltonian gap") from exc
    p = psi ** 2  # stationary distribution
    d, n = H.model.d, H.model.n_sites

    def markov_deflated(v):
        v = np.asarray(v).reshape(-1)
        out = np.zeros_like(v)
        for kern in H.kernels:
            out += apply_local(kern.scaled, kern.support, v, d, n)
        return out - np.ones_like(v) * (p @ v)

    mop = sla.LinearOperator((H.dim, H.dim), matvec=markov_deflated, dtype=float)
    try:
        mu = sla.eigs(mop, k=1, which="LR", tol=tol, maxiter=50 * H.dim)[0]
    except sla.ArpackNoConvergence as exc:
        raise RuntimeError("Arnoldi did not converge for the Markov gap") from exc
    return GapReport(0.0, float(lam[0]), float(1.0 - mu[0].real), "iterative")


@dataclass(frozen=True)
class UniquenessReport:
    multiplicity: int
    overlap: float
    splitting: float  # lambda_1 - lambda_0
    lowest: tuple[float, ...]


def degenerate_check(model: ClassicalModel, beta: float, tol: float = 1e-10,
                     kernel: str = "glauber") -> UniquenessReport:
    """Multiplicity of eigenvalue 0 of ``H`` and the ground-space overlap with ``psi_beta``."""
    H = build_hamiltonian(model, beta, kernel)
    evals, evecs = np.linalg.eigh(H.dense())
    zero = np.abs(evals) <= tol
    psi = H.ground_state / np.linalg.norm(H.ground_state)
    overlap = float(np.linalg.norm(evecs[:, zero].T @ psi)) if zero.any() else 0.0
    return UniquenessReport(int(zero.sum()), overlap, float(evals[1] - evals[0]),
                            tuple(float(x) for x in evals[:4]))
