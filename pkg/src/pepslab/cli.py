"""Command-line entry point: ``pepslab <command> --spec model.json [flags]``.

Reports are JSON Lines.  The first record describes the run (effective spec,
its hash, library versions), then one ``result`` record per check in a fixed
order, then a ``summary`` and a ``timing`` record.  Result records depend
only on the effective spec, so repeated runs produce identical bytes.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from contextlib import nullcontext

import numpy as np

from . import __version__, _kernels
from .config import ModelSpec, SpecError, load_spec, parse_beta
from .experiments import COMMANDS, export_peps
from .limits import CapExceededError


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, default=_jsonable) + "\n"


def _pair(text: str) -> list[int]:
    i, j = (int(x) for x in text.split(","))
    return [i, j]


def _sites(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def versions() -> dict:
    out = {"pepslab": __version__, "numpy": np.__version__, "python": platform.python_version()}
    import scipy
    out["scipy"] = scipy.__version__
    if _kernels.HAVE_NUMBA:
        import numba
        out["numba"] = numba.__version__
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pepslab",
                                     description="Exact checks of coherent thermal PEPS on small lattices.")
    parser.add_argument("--version", action="version", version=f"pepslab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="model spec (JSON)")
    common.add_argument("--seed", type=int, help="64-bit seed; overrides the spec")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--max-enum", type=int, help="cap on enumerated configurations")
    common.add_argument("--max-dense", type=int, help="cap on dense eigensolver dimension")
    common.add_argument("--beta", help="float, comma list, or inclusive start:stop:step")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="oracle-equivalence suite")
    p = sub.add_parser("entropy", parents=[common], help="block entanglement vs the bond bound")
    p.add_argument("--block", action="append", type=_sites, help="comma-separated site ids (repeatable)")
    p = sub.add_parser("correlations", parents=[common], help="quantum vs classical two-point functions")
    p.add_argument("--pair", action="append", type=_pair, help="i,j (repeatable)")
    sub.add_parser("gap", parents=[common], help="parent Hamiltonian gap vs Markov gap over a beta grid")
    sub.add_parser("measure-energy", parents=[common], help="annealed sampling of diagonal measurements")
    sub.add_parser("topological", parents=[common], help="tripartite topological entropy")
    p = sub.add_parser("export-peps", parents=[common], help="write the PEPS tensors to a text file")
    p.add_argument("peps_path", help="destination of the PEPS file")
    return parser


def effective_spec(args) -> ModelSpec:
    spec = load_spec(args.spec)
    raw = spec.to_dict()
    if args.seed is not None:
        raw["seed"] = int(args.seed) & 0xFFFFFFFFFFFFFFFF
    if args.beta is not None:
        raw["beta"] = parse_beta(args.beta)
    if args.max_enum is not None:
        raw["max_enum"] = args.max_enum
    if args.max_dense is not None:
        raw["max_dense"] = args.max_dense
    if getattr(args, "block", None):
        raw["blocks"] = args.block
    if getattr(args, "pair", None):
        raw["pairs"] = args.pair
    return ModelSpec.from_dict(raw)


def run(args) -> tuple[list[dict], dict]:
    spec = effective_spec(args)
    if args.command == "export-peps":
        records = export_peps(spec, args.peps_path)
    else:
        records = COMMANDS[args.command](spec)
    meta = {"record": "meta", "command": args.command, "spec": spec.to_dict(),
            "spec_hash": spec.digest(), "versions": versions(),
            "kernels": "numba" if _kernels.USE_NUMBA else "numpy"}
    return records, meta


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        records, meta = run(args)
    except (SpecError, CapExceededError, OSError) as exc:
        print(f"pepslab: error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in records if r.get("pass") is False and not r.get("stochastic")]
    stochastic_failed = [r for r in records if r.get("pass") is False and r.get("stochastic")]
    summary = {"record": "summary", "command": args.command, "spec_hash": meta["spec_hash"],
               "checks": sum("pass" in r for r in records), "failed": len(failed),
               "stochastic_failed": len(stochastic_failed), "ok": not failed}
    sink = open(args.out, "w") if args.out else nullcontext(sys.stdout)
    with sink as fh:
        fh.write(_line(meta))
        for i, rec in enumerate(records):
            fh.write(_line({"record": "result", "id": i, "command": args.command,
                            "spec_hash": meta["spec_hash"], **rec}))
        fh.write(_line(summary))
        fh.write(_line({"record": "timing", "seconds": round(time.perf_counter() - start, 6)}))
    return 0 if not failed else 1


if __name__ == "__main__":
    raise SystemExit(main())
