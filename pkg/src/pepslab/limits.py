"""Desk-scale size caps shared by every brute-force path."""
from __future__ import annotations

import math

# hard ceiling on the number of enumerated configurations
MAX_ENUM = 2 ** 25
# row-sweep contraction: width * log2(D) (plus the wrap legs on tori)
MAX_CONTRACTION_BITS = 24
# largest Hilbert-space dimension for dense eigensolves
MAX_DENSE_DIM = 2 ** 12


class CapExceededError(ValueError):
    """A brute-force operation would exceed its configured size cap."""


def check_enum(d: int, n_sites: int, max_enum: int | None = None) -> int:
    cap = MAX_ENUM if max_enum is None else min(int(max_enum), MAX_ENUM)
    size = d ** n_sites
    if size > cap:
        raise CapExceededError(
            f"{d}^{n_sites} = {size} configurations exceeds the enumeration cap {cap} "
            f"({n_sites * math.log2(d):.1f} bits)")
    return size
