"""Classical two-body spin models, exact Gibbs oracles and local samplers.

States are integers ``s`` in ``[0, d)``.  For two-state models the Ising sign
is ``sigma(s) = 1 - 2 s`` so that ``s = 0`` is spin up.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .lattice import SquareLattice
from .limits import check_enum

ISING_SIGN = np.array([1.0, -1.0])


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator from a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True, eq=False)
class ClassicalModel:
    """``H(s) = sum_e h_e[s_tail, s_head] + sum_i f_i[s_i]``."""

    lattice: SquareLattice
    d: int
    edge_coupling: np.ndarray  # (n_edges, d, d)
    site_field: np.ndarray = field(default=None)  # (n_sites, d)

    def __post_init__(self):
        lat, d = self.lattice, int(self.d)
        if d < 1:
            raise ValueError("local dimension must be positive")
        coupling = np.array(self.edge_coupling, dtype=float)
        if coupling.shape != (lat.n_edges, d, d):
            raise ValueError(f"edge_coupling must have shape {(lat.n_edges, d, d)}, got {coupling.shape}")
        fields = np.zeros((lat.n_sites, d)) if self.site_field is None else np.array(self.site_field, dtype=float)
        if fields.shape != (lat.n_sites, d):
            raise ValueError(f"site_field must have shape {(lat.n_sites, d)}, got {fields.shape}")
        if not (np.all(np.isfinite(coupling)) and np.all(np.isfinite(fields))):
            raise ValueError("model entries must be finite")
        coupling.setflags(write=False)
        fields.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "edge_coupling", coupling)
        object.__setattr__(self, "site_field", fields)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Padded (N, 4) tables: touching edge, far site, and whether the site is the tail."""
        n = self.n_sites
        inc_edge = np.full((n, 4), -1, dtype=np.int64)
        inc_other = np.full((n, 4), -1, dtype=np.int64)
        inc_is_tail = np.zeros((n, 4), dtype=np.int64)
        edges = self.lattice.edges
        for k in range(n):
            for j, (_, e) in enumerate(self.lattice.incident_edges(k)):
                edge = edges[e]
                inc_edge[k, j] = e
                inc_other[k, j] = edge.head if edge.tail == k else edge.tail
                inc_is_tail[k, j] = int(edge.tail == k)
        return inc_edge, inc_other, inc_is_tail


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------

def ising_ferromagnet(lattice: SquareLattice, coupling: float = 1.0, field: float = 0.0) -> ClassicalModel:
    """``H = -J sum sigma_i sigma_j - field sum sigma_i``."""
    h = -coupling * np.outer(ISING_SIGN, ISING_SIGN)
    fields = np.tile(-field * ISING_SIGN, (lattice.n_sites, 1))
    return ClassicalModel(lattice, 2, np.tile(h, (lattice.n_edges, 1, 1)), fields)


def ising_spin_glass(lattice: SquareLattice, seed: int, field_amplitude: float = 0.0) -> ClassicalModel:
    """+-J couplings and +-field_amplitude random fields, all drawn from ``seed``."""
    rng = make_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=lattice.n_edges)
    field_signs = rng.choice([-1.0, 1.0], size=lattice.n_sites)
    pair = np.outer(ISING_SIGN, ISING_SIGN)
    couplings = -signs[:, None, None] * pair[None]
    fields = -field_amplitude * field_signs[:, None] * ISING_SIGN[None]
    return ClassicalModel(lattice, 2, couplings, fields)


def potts(lattice: SquareLattice, q: int, coupling: float = 1.0) -> ClassicalModel:
    if q < 2:
        raise ValueError(f"Potts model needs q >= 2, got {q}")
    h = -coupling * np.eye(q)
    return ClassicalModel(lattice, q, np.tile(h, (lattice.n_edges, 1, 1)))


# --------------------------------------------------------------------------
# energies and exact Gibbs quantities
# --------------------------------------------------------------------------

def _as_config(model: ClassicalModel, config) -> np.ndarray:
    config = np.asarray(config, dtype=np.int64)
    if config.shape != (model.n_sites,):
        raise ValueError(f"configuration must have length {model.n_sites}, got shape {config.shape}")
    if np.any(config < 0) or np.any(config >= model.d):
        raise ValueError(f"configuration entries must lie in [0, {model.d})")
    return config


def energy(model: ClassicalModel, config) -> float:
    config = _as_config(model, config)
    tails, heads = model.lattice.edge_arrays()
    e = model.site_field[np.arange(model.n_sites), config].sum()
    if len(tails):
        e += model.edge_coupling[np.arange(len(tails)), config[tails], config[heads]].sum()
    return float(e)


def config_from_index(index: int, d: int, n_sites: int) -> np.ndarray:
    return np.array(np.unravel_index(index, (d,) * n_sites), dtype=np.int64) if n_sites else np.zeros(0, np.int64)


def config_index(config, d: int) -> int:
    return int(np.ravel_multi_index(tuple(np.asarray(config)), (d,) * len(config)))


def all_energies(model: ClassicalModel, max_enum: int | None = None, use_numba=None) -> np.ndarray:
    """Energies of all ``d**N`` configurations (site 0 most significant)."""
    check_enum(model.d, model.n_sites, max_enum)
    tails, heads = model.lattice.edge_arrays()
    return _kernels.all_energies(model.d, model.n_sites, tails, heads,
                                 model.edge_coupling, model.site_field, use_numba=use_numba)


def log_partition_function(model: ClassicalModel, beta: float, max_enum: int | None = None) -> float:
    return float(logsumexp(-beta * all_energies(model, max_enum)))


class GibbsOracle:
    """Exact Boltzmann distribution of an enumerable model.

    All weights are accumulated in the log domain, so large ``beta`` is safe.
    """

    def __init__(self, model: ClassicalModel, beta: float, max_enum: int | None = None,
                 energies: np.ndarray | None = None):
        self.model = model
        self.beta = float(beta)
        self.energies = all_energies(model, max_enum) if energies is None else energies
        self.logZ = float(logsumexp(-self.beta * self.energies))

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.exp(-self.beta * self.energies - self.logZ)

    def marginal(self, support) -> np.ndarray:
        """Joint marginal over ``support`` as a tensor with axes in the given order."""
        support = [int(s) for s in support]
        if len(set(support)) != len(support):
            raise ValueError("support sites must be distinct")
        n, d = self.model.n_sites, self.model.d
        for s in support:
            self.model.lattice._check_site(s)
        p = self.probabilities.reshape((d,) * n)
        rest = tuple(i for i in range(n) if i not in support)
        marg = p.sum(axis=rest)
        # remaining axes are in increasing site order; reorder to `support`
        order = sorted(support)
        return np.transpose(marg, [order.index(s) for s in support])

    def expectation(self, support, values) -> float:
        """``<f>`` for a diagonal observable given as a ``(d,)*len(support)`` value table."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.model.d,) * len(support):
            raise ValueError("value table shape does not match the support")
        return float(np.sum(self.marginal(support) * values))

    def mean_energy(self) -> float:
        return float(self.probabilities @ self.energies)

    def energy_variance(self) -> float:
        mean = self.mean_energy()
        return float(self.probabilities @ (self.energies - mean) ** 2)


def gibbs_expectation(oracle: GibbsOracle, support, values) -> float:
    return oracle.expectation(support, values)


def energy_histogram(model: ClassicalModel, max_enum: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Distinct energy levels (rounded to 1e-9) and their degeneracies."""
    levels, counts = np.unique(np.round(all_energies(model, max_enum), 9), return_counts=True)
    return levels, counts


def specific_heat_curve(model: ClassicalModel, betas, max_enum: int | None = None) -> np.ndarray:
    """``d^2 logZ / d beta^2 = Var(H)`` on a beta grid, from the density of states."""
    levels, counts = energy_histogram(model, max_enum)
    out = []
    for b in betas:
        logw = np.log(counts) - b * levels
        p = np.exp(logw - logsumexp(logw))
        mean = p @ levels
        out.append(p @ (levels - mean) ** 2)
    return np.array(out)


def specific_heat_peak(model: ClassicalModel, betas, max_enum: int | None = None) -> float:
    """Grid point maximizing ``Var(H)``, refined by a parabola through its neighbours."""
    betas = np.asarray(betas, dtype=float)
    curve = specific_heat_curve(model, betas, max_enum)
    i = int(np.argmax(curve))
    if 0 < i < len(betas) - 1:
        x, y = betas[i - 1:i + 2], curve[i - 1:i + 2]
        a, b, _ = np.polyfit(x, y, 2)
        if a < 0:
            return float(-b / (2 * a))
    return float(betas[i])


# --------------------------------------------------------------------------
# single-site dynamics
# --------------------------------------------------------------------------

def local_energies(model: ClassicalModel, config, k: int) -> np.ndarray:
    """Energy terms touching site ``k`` for each candidate value of ``s_k``."""
    config = _as_config(model, config)
    model.lattice._check_site(k)
    out = model.site_field[k].copy()
    inc_edge, inc_other, inc_is_tail = model.incidence
    for e, o, is_tail in zip(inc_edge[k], inc_other[k], inc_is_tail[k]):
        if e < 0:
            continue
        h = model.edge_coupling[e]
        out += h[:, config[o]] if is_tail else h[config[o], :]
    return out


def conditional_distribution(model: ClassicalModel, beta: float, config, k: int) -> np.ndarray:
    """Heat-bath distribution of ``s_k`` given the rest of ``config``."""
    loc = local_energies(model, config, k)
    w = np.exp(-beta * (loc - loc.min()))
    return w / w.sum()


def metropolis_probabilities(model: ClassicalModel, beta: float, config, k: int) -> np.ndarray:
    """Transition probabilities for ``s_k`` under uniform-proposal Metropolis."""
    config = _as_config(model, config)
    loc = local_energies(model, config, k)
    old, d = config[k], model.d
    out = np.zeros(d)
    if d == 1:
        out[0] = 1.0
        return out
    for s in range(d):
        if s != old:
            out[s] = min(1.0, float(np.exp(-beta * (loc[s] - loc[old])))) / (d - 1)
    out[old] = 1.0 - out.sum()
    return out


def glauber_step(model: ClassicalModel, beta: float, config, k: int, rng: np.random.Generator) -> np.ndarray:
    """One heat-bath update of site ``k``; returns a new configuration."""
    new = _as_config(model, config).copy()
    p = conditional_distribution(model, beta, new, k)
    new[k] = min(int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right")), model.d - 1)
    return new


def metropolis_step(model: ClassicalModel, beta: float, config, k: int, rng: np.random.Generator) -> np.ndarray:
    """One Metropolis update of site ``k`` with a uniform proposal over the other values."""
    new = _as_config(model, config).copy()
    if model.d == 1:
        return new
    loc = local_energies(model, new, k)
    old = new[k]
    proposal = int(rng.integers(model.d - 1))
    proposal += proposal >= old
    delta = loc[proposal] - loc[old]
    if delta <= 0 or rng.random() < np.exp(-beta * delta):
        new[k] = proposal
    return new
