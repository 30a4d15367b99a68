"""Dense state vectors and local observables (the exact oracle representation)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .lattice import SquareLattice

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True, eq=False)
class StateVector:
    lattice: SquareLattice
    d: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float).reshape(-1)
        if amps.size != self.d ** self.lattice.n_sites:
            raise ValueError(f"expected {self.d ** self.lattice.n_sites} amplitudes, got {amps.size}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def norm_sq(self) -> float:
        return float(self.amplitudes @ self.amplitudes)

    def normalized(self) -> "StateVector":
        amps = self.amplitudes
        peak = np.max(np.abs(amps))
        if peak == 0:
            raise ValueError("cannot normalize the zero vector")
        amps = amps / peak
        return StateVector(self.lattice, self.d, amps / np.sqrt(amps @ amps))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.n_sites)

    def fidelity(self, other: "StateVector") -> float:
        """``|<a|b>|^2 / (<a|a><b|b>)``."""
        a, b = self.normalized().amplitudes, other.normalized().amplitudes
        return float((a @ b) ** 2)


@dataclass(frozen=True, eq=False)
class Observable:
    support: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        if len(set(support)) != len(support):
            raise ValueError("observable support sites must be distinct")
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable matrix must be square")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def product(cls, ops: dict[int, np.ndarray]) -> "Observable":
        """Tensor product of single-site operators, keyed by site."""
        sites = tuple(ops)
        return cls(sites, reduce(np.kron, [np.asarray(ops[s], dtype=float) for s in sites]))

    @classmethod
    def diagonal(cls, support, values) -> "Observable":
        values = np.asarray(values, dtype=float)
        return cls(tuple(support), np.diag(values.reshape(-1)))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.T), initial=0.0) <= tol)
