"""Hot loops: configuration-energy enumeration and annealed single-site sampling.

Each kernel has a numba implementation and a pure-numpy one with the same
signature and the same consumption of pre-drawn uniforms.  The numba path is
used when numba imports and ``PEPSLAB_NUMBA`` is not set to ``0``.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("PEPSLAB_NUMBA", "1") != "0"

HEAT_BATH = 0
METROPOLIS = 1


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# energies of every configuration
# --------------------------------------------------------------------------

def _all_energies_numpy(d, n_sites, tails, heads, couplings, fields):
    shape = (d,) * n_sites
    energy = np.zeros(shape)
    for i in range(n_sites):
        view = [1] * n_sites
        view[i] = d
        energy += fields[i].reshape(view)
    for e in range(len(tails)):
        t, h = int(tails[e]), int(heads[e])
        view = [1] * n_sites
        view[t] = d
        view[h] = d
        block = couplings[e] if t < h else couplings[e].T
        energy += block.reshape(view)
    return energy.reshape(-1)


@_njit
def _all_energies_numba(d, n_sites, tails, heads, couplings, fields):
    # odometer over configurations; prefix[i] is the energy of every term
    # whose larger site index is < i, so an increment at position j only
    # recomputes prefix[j+1:]
    total = d ** n_sites
    out = np.empty(total)
    if n_sites == 0:
        out[0] = 0.0
        return out
    n_edges = tails.shape[0]
    back_count = np.zeros(n_sites, dtype=np.int64)
    for e in range(n_edges):
        back_count[max(tails[e], heads[e])] += 1
    width = max(1, back_count.max())
    back_edge = np.empty((n_sites, width), dtype=np.int64)
    back_count[:] = 0
    for e in range(n_edges):
        hi = max(tails[e], heads[e])
        back_edge[hi, back_count[hi]] = e
        back_count[hi] += 1
    digits = np.zeros(n_sites, dtype=np.int64)
    prefix = np.zeros(n_sites + 1)
    start = 0
    for idx in range(total):
        for i in range(start, n_sites):
            acc = prefix[i] + fields[i, digits[i]]
            for j in range(back_count[i]):
                e = back_edge[i, j]
                acc += couplings[e, digits[tails[e]], digits[heads[e]]]
            prefix[i + 1] = acc
        out[idx] = prefix[n_sites]
        pos = n_sites - 1
        while pos >= 0:
            digits[pos] += 1
            if digits[pos] < d:
                break
            digits[pos] = 0
            pos -= 1
        start = max(pos, 0)
    return out


def all_energies(d, n_sites, tails, heads, couplings, fields, use_numba=None):
    """Energy of every configuration, flattened with site 0 most significant."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    fn = _all_energies_numba if use_numba else _all_energies_numpy
    return fn(int(d), int(n_sites), np.ascontiguousarray(tails, dtype=np.int64),
              np.ascontiguousarray(heads, dtype=np.int64),
              np.ascontiguousarray(couplings, dtype=np.float64),
              np.ascontiguousarray(fields, dtype=np.float64))


# --------------------------------------------------------------------------
# annealed single-site updates over many independent chains
# --------------------------------------------------------------------------
#
# Incidence tables (N x 4, padded with -1): inc_edge[k, j] is an edge touching
# site k, inc_other[k, j] the site on its far end and inc_is_tail[k, j] == 1
# when k is that edge's tail (so the coupling is h[s_k, s_other]).

@_njit
def _local_energies_one(k, config, d, couplings, fields, inc_edge, inc_other, inc_is_tail, out):
    for s in range(d):
        out[s] = fields[k, s]
    for j in range(inc_edge.shape[1]):
        e = inc_edge[k, j]
        if e < 0:
            continue
        o = config[inc_other[k, j]]
        if inc_is_tail[k, j] == 1:
            for s in range(d):
                out[s] += couplings[e, s, o]
        else:
            for s in range(d):
                out[s] += couplings[e, o, s]


@_njit
def _anneal_numba(d, couplings, fields, inc_edge, inc_other, inc_is_tail,
                  betas, uniforms, init, method):
    n_chains, n_sweeps, n_sites = uniforms.shape[0], uniforms.shape[1], uniforms.shape[2]
    best_energy = np.empty(n_chains)
    best_config = np.empty((n_chains, n_sites), dtype=np.int64)
    final_energy = np.empty(n_chains)
    local = np.empty(d)
    weights = np.empty(d)
    for c in range(n_chains):
        config = init[c].copy()
        energy = 0.0
        # each edge is counted once, from its tail
        for k in range(n_sites):
            energy += fields[k, config[k]]
            for j in range(inc_edge.shape[1]):
                e = inc_edge[k, j]
                if e >= 0 and inc_is_tail[k, j] == 1:
                    energy += couplings[e, config[k], config[inc_other[k, j]]]
        best_energy[c] = energy
        best_config[c] = config
        for t in range(n_sweeps):
            beta = betas[t]
            for k in range(n_sites):
                _local_energies_one(k, config, d, couplings, fields,
                                    inc_edge, inc_other, inc_is_tail, local)
                old = config[k]
                u = uniforms[c, t, k, 0]
                if method == 0:
                    lo = local[0]
                    for s in range(1, d):
                        if local[s] < lo:
                            lo = local[s]
                    total = 0.0
                    for s in range(d):
                        weights[s] = np.exp(-beta * (local[s] - lo))
                        total += weights[s]
                    target = u * total
                    new = d - 1
                    acc = 0.0
                    for s in range(d):
                        acc += weights[s]
                        if target < acc:
                            new = s
                            break
                else:
                    new = int(u * (d - 1))
                    if new >= d - 1:
                        new = d - 2
                    if new >= old:
                        new += 1
                    delta = local[new] - local[old]
                    if delta > 0.0 and uniforms[c, t, k, 1] >= np.exp(-beta * delta):
                        new = old
                if new != old:
                    energy += local[new] - local[old]
                    config[k] = new
                    if energy < best_energy[c]:
                        best_energy[c] = energy
                        best_config[c] = config
        final_energy[c] = energy
    return best_energy, best_config, final_energy


def _anneal_numpy(d, couplings, fields, inc_edge, inc_other, inc_is_tail,
                  betas, uniforms, init, method):
    n_chains, n_sweeps, n_sites = uniforms.shape[:3]
    rows = np.arange(n_chains)
    config = init.copy()
    energy = fields[np.arange(n_sites), config].sum(axis=1)
    for k in range(n_sites):
        for j in range(inc_edge.shape[1]):
            e = inc_edge[k, j]
            if e >= 0 and inc_is_tail[k, j] == 1:
                energy = energy + couplings[e][config[:, k], config[:, inc_other[k, j]]]
    best_energy = energy.copy()
    best_config = config.copy()
    for t in range(n_sweeps):
        beta = betas[t]
        for k in range(n_sites):
            local = np.broadcast_to(fields[k], (n_chains, d)).copy()
            for j in range(inc_edge.shape[1]):
                e = inc_edge[k, j]
                if e < 0:
                    continue
                o = config[:, inc_other[k, j]]
                local += couplings[e][:, o].T if inc_is_tail[k, j] == 1 else couplings[e][o, :]
            old = config[:, k]
            u = uniforms[:, t, k, 0]
            if method == HEAT_BATH:
                weights = np.exp(-beta * (local - local.min(axis=1, keepdims=True)))
                cdf = np.cumsum(weights, axis=1)
                target = u * cdf[:, -1]
                new = np.minimum((cdf <= target[:, None]).sum(axis=1), d - 1)
            else:
                new = np.minimum((u * (d - 1)).astype(np.int64), d - 2)
                new = new + (new >= old)
                delta = local[rows, new] - local[rows, old]
                reject = (delta > 0.0) & (uniforms[:, t, k, 1] >= np.exp(-beta * np.maximum(delta, 0.0)))
                new = np.where(reject, old, new)
            energy = energy + local[rows, new] - local[rows, old]
            config[:, k] = new
            improved = energy < best_energy
            if improved.any():
                best_energy = np.where(improved, energy, best_energy)
                best_config[improved] = config[improved]
    return best_energy, best_config, energy


def anneal(d, couplings, fields, incidence, betas, uniforms, init, method=HEAT_BATH, use_numba=None):
    """Run sequential-sweep single-site chains along a beta schedule.

    ``uniforms`` has shape (chains, sweeps, sites, 2); ``init`` (chains, sites).
    Returns (best energy, best configuration, final energy) per chain.
    """
    use_numba = USE_NUMBA if use_numba is None else use_numba
    fn = _anneal_numba if use_numba else _anneal_numpy
    inc_edge, inc_other, inc_is_tail = incidence
    return fn(int(d), np.ascontiguousarray(couplings, dtype=np.float64),
              np.ascontiguousarray(fields, dtype=np.float64),
              np.ascontiguousarray(inc_edge, dtype=np.int64),
              np.ascontiguousarray(inc_other, dtype=np.int64),
              np.ascontiguousarray(inc_is_tail, dtype=np.int64),
              np.ascontiguousarray(betas, dtype=np.float64),
              np.ascontiguousarray(uniforms, dtype=np.float64),
              np.ascontiguousarray(init, dtype=np.int64), int(method))
