"""Gibbs sampling of diagonal measurements and annealed ground-energy search.

Sampling the classical Gibbs law is the same as measuring the coherent
thermal state in the computational basis, so annealing the chain towards
large beta reads out the ground-state energy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .classical import ClassicalModel, all_energies, energy

METHODS = {"glauber": _kernels.HEAT_BATH, "metropolis": _kernels.METROPOLIS}


def run_generators(seed: int, runs: int) -> list[np.random.Generator]:
    """One independent Philox stream per run, spawned from a 64-bit seed."""
    children = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(runs)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def linear_schedule(beta_start: float, beta_end: float, sweeps: int) -> np.ndarray:
    return np.linspace(beta_start, beta_end, sweeps)


@dataclass(frozen=True)
class AnnealResult:
    best_energy: np.ndarray
    best_config: np.ndarray
    final_energy: np.ndarray


def _draws(model: ClassicalModel, gens, sweeps: int):
    n = model.n_sites
    uniforms = np.stack([g.random((sweeps, n, 2)) for g in gens])
    init = np.stack([g.integers(model.d, size=n) for g in gens])
    return uniforms, init


def run_chains(model: ClassicalModel, betas, seed: int, runs: int, method: str = "glauber",
               use_numba=None) -> AnnealResult:
    """Sequential-sweep chains, one per run, following the per-sweep ``betas``."""
    betas = np.asarray(betas, dtype=float)
    uniforms, init = _draws(model, run_generators(seed, runs), len(betas))
    best, configs, final = _kernels.anneal(model.d, model.edge_coupling, model.site_field,
                                           model.incidence, betas, uniforms, init,
                                           METHODS[method], use_numba=use_numba)
    # re-evaluate from scratch so incremental round-off never leaks out
    best = np.array([energy(model, c) for c in configs])
    return AnnealResult(best, configs, final)


def anneal(model: ClassicalModel, beta_start: float, beta_end: float, sweeps: int, runs: int,
           seed: int, method: str = "glauber", use_numba=None) -> AnnealResult:
    return run_chains(model, linear_schedule(beta_start, beta_end, sweeps), seed, runs, method, use_numba)


def sample_energies(model: ClassicalModel, beta: float, samples: int, sweeps: int, seed: int,
                    method: str = "glauber", use_numba=None) -> np.ndarray:
    """Final energies of ``samples`` independent chains run ``sweeps`` sweeps at fixed beta."""
    res = run_chains(model, np.full(sweeps, float(beta)), seed, samples, method, use_numba)
    return res.final_energy


def exact_ground_energy(model: ClassicalModel, max_enum: int | None = None) -> float:
    return float(all_energies(model, max_enum).min())
