"""JSON model specs for the command-line drivers."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from dataclasses import field as dc_field
from typing import Any

import numpy as np

from .classical import ClassicalModel, ising_ferromagnet, ising_spin_glass, potts
from .lattice import Block, Boundary, SquareLattice
from .limits import MAX_DENSE_DIM, MAX_ENUM

MODEL_FAMILIES = ("ising_ferro", "spin_glass", "potts", "custom")
STATE_FAMILIES = ("toric", "cluster", "rvb")


class SpecError(ValueError):
    pass


def parse_beta(text: str) -> list[float]:
    """``0.5``, ``0.1,0.2,0.4`` or an inclusive range ``start:stop:step``."""
    text = text.strip()
    try:
        values = [float(x) for x in text.replace(":", ",").split(",") if x.strip()]
    except ValueError:
        raise SpecError(f"cannot parse beta {text!r}") from None
    if ":" in text:
        if len(values) != 3:
            raise SpecError("beta range needs start:stop:step")
        start, stop, step = values
        if step <= 0:
            raise SpecError("beta range step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return values


@dataclass
class ModelSpec:
    width: int
    height: int
    boundary: str = "open"
    family: str = "ising_ferro"
    d: int = 2
    betas: list[float] | None = None  # None: projector limit for toric, required otherwise
    seed: int = 0
    field: float = 0.0
    couplings: list | None = None
    fields: list | None = None
    kernel: str = "glauber"
    max_enum: int = MAX_ENUM
    max_dense: int = MAX_DENSE_DIM
    blocks: list[list[int]] | None = None
    pairs: list[list[int]] | None = None
    regions: dict[str, list[int]] | None = None
    anneal: dict[str, Any] = dc_field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelSpec":
        raw = dict(raw)
        lat = raw.pop("lattice", None)
        if not isinstance(lat, dict):
            raise SpecError("spec needs a 'lattice' object with width and height")
        try:
            kwargs: dict[str, Any] = {"width": int(lat["width"]), "height": int(lat["height"]),
                                      "boundary": str(lat.get("boundary", "open")).lower()}
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad lattice entry: {exc!r}") from None
        beta = raw.pop("beta", raw.pop("betas", None))
        if beta is None:
            kwargs["betas"] = None
        else:
            try:
                kwargs["betas"] = parse_beta(beta) if isinstance(beta, str) else (
                    [float(b) for b in beta] if isinstance(beta, (list, tuple)) else [float(beta)])
            except (TypeError, ValueError) as exc:
                raise SpecError(f"bad beta entry {beta!r}") from exc
        if "q" in raw:
            raw.setdefault("d", raw.pop("q"))
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        kwargs.update(raw)
        for key in ("d", "seed", "max_enum", "max_dense"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])
        if "field" in kwargs:
            kwargs["field"] = float(kwargs["field"])
        spec = cls(**kwargs)
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.family not in MODEL_FAMILIES + STATE_FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        try:
            Boundary(self.boundary)
        except ValueError:
            raise SpecError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}") from None
        if self.family in ("ising_ferro", "spin_glass", "toric", "cluster", "rvb") and self.d != 2:
            raise SpecError(f"family {self.family} has d = 2, spec says d = {self.d}")
        if self.family == "potts" and self.d < 2:
            raise SpecError("potts needs d (or q) >= 2")
        if self.family == "custom" and self.couplings is None:
            raise SpecError("custom family needs 'couplings'")
        if self.kernel not in ("glauber", "metropolis"):
            raise SpecError(f"unknown kernel {self.kernel!r}")
        self.lattice()  # geometry checks
        if self.betas is None:
            if self.is_model:
                raise SpecError(f"family {self.family} needs 'beta'")
        elif not self.betas:
            raise SpecError("need at least one beta")
        elif any(not np.isfinite(b) or b < 0 for b in self.betas):
            raise SpecError("beta values must be finite and non-negative")

    def lattice(self) -> SquareLattice:
        try:
            return SquareLattice(self.width, self.height, Boundary(self.boundary))
        except ValueError as exc:
            raise SpecError(str(exc)) from None

    @property
    def is_model(self) -> bool:
        return self.family in MODEL_FAMILIES

    def model(self) -> ClassicalModel:
        lat = self.lattice()
        if self.family == "ising_ferro":
            return ising_ferromagnet(lat, field=self.field)
        if self.family == "spin_glass":
            return ising_spin_glass(lat, self.seed, self.field)
        if self.family == "potts":
            return potts(lat, self.d)
        if self.family == "custom":
            try:
                return ClassicalModel(lat, self.d, np.array(self.couplings, dtype=float),
                                      None if self.fields is None else np.array(self.fields, dtype=float))
            except ValueError as exc:
                raise SpecError(str(exc)) from None
        raise SpecError(f"family {self.family!r} is a state family, not a classical model")

    def block_list(self) -> list[Block] | None:
        return None if self.blocks is None else [Block(b) for b in self.blocks]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lattice"] = {"width": out.pop("width"), "height": out.pop("height"),
                          "boundary": out.pop("boundary")}
        out["beta"] = out.pop("betas")
        return out

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def load_spec(path) -> ModelSpec:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from None
    return ModelSpec.from_dict(raw)
