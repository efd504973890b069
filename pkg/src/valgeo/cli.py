"""``valgeo`` command line.

Exit codes: 0 success, 1 a checked claim failed (or a length did not
converge), 2 usage error or unreadable input.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from .deviations import Deviation
from .experiments import EXPERIMENTS
from .geometry import (DEFAULT_TOL, BodyFormatError, GeometryError, ToleranceConfig,
                       hausdorff_distance, load_body)
from .paths import Path, path_length
from .valuations import mcmullen_decompose, steiner_fit, valuation_from_spec

OUTPUTS = ("text", "json", "csv")


@dataclass(frozen=True)
class CliConfig:
    dimension: int = 2
    tolerances: ToleranceConfig = field(default_factory=lambda: DEFAULT_TOL)
    seed: int = 0
    output: str = "text"

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.output not in OUTPUTS:
            raise ValueError(f"output must be one of {OUTPUTS}")

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "tolerances": self.tolerances.to_dict(),
                "seed": self.seed, "output": self.output}

    @classmethod
    def from_dict(cls, d: dict) -> "CliConfig":
        return cls(int(d["dimension"]), ToleranceConfig.from_dict(d["tolerances"]),
                   int(d["seed"]), d["output"])

    def to_argv(self) -> list:
        t = self.tolerances
        return ["--dim", str(self.dimension), "--seed", str(self.seed), "--output", self.output,
                "--eps-geom", repr(t.eps_geom), "--eps-rank", repr(t.eps_rank),
                "--eps-vol", repr(t.eps_vol)]

    @classmethod
    def from_namespace(cls, ns) -> "CliConfig":
        tol = ToleranceConfig(eps_geom=ns.eps_geom, eps_rank=ns.eps_rank, eps_vol=ns.eps_vol)
        return cls(ns.dim, tol, ns.seed, ns.output)


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--dim", type=int, choices=(2, 3), default=2,
                   help="ambient dimension for valuation specs (bodies carry their own)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", choices=OUTPUTS, default="text", help="stdout format")
    p.add_argument("--out", help="write the structured result as JSON here")
    p.add_argument("--eps-geom", type=float, default=DEFAULT_TOL.eps_geom)
    p.add_argument("--eps-rank", type=float, default=DEFAULT_TOL.eps_rank)
    p.add_argument("--eps-vol", type=float, default=DEFAULT_TOL.eps_vol)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="valgeo", description=(
        "Valuation deviations, interpolation-path lengths and numerical checks on convex polytopes."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deviation", help="meet or join deviation of two bodies")
    p.add_argument("--kind", choices=("meet", "join"), default="meet")
    p.add_argument("--phi", default="vol")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    _common(p)

    p = sub.add_parser("path-length", help="deviation length of a piecewise interpolation path")
    p.add_argument("--kind", choices=("meet", "join"), default="meet")
    p.add_argument("--phi", default="vol")
    p.add_argument("--path", required=True, help='JSON {"bodies": [body, ...]}')
    p.add_argument("--max-depth", type=int, default=20)
    _common(p)

    p = sub.add_parser("verify", help="run a seeded experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--csv", help="write measurements as CSV here")
    _common(p)

    p = sub.add_parser("steiner", help="intrinsic volumes by Steiner fitting")
    p.add_argument("--body", required=True)
    p.add_argument("--radii", type=float, nargs="+")
    _common(p)

    p = sub.add_parser("decompose", help="McMullen components of a valuation at a body")
    p.add_argument("--phi", default="vol")
    p.add_argument("--body", required=True)
    _common(p)

    p = sub.add_parser("hausdorff", help="Hausdorff distance of two bodies")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    _common(p)
    return parser


def _load(path: str, tol: ToleranceConfig):
    try:
        return load_body(path, tol)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from exc
    except BodyFormatError as exc:
        raise UsageError(str(exc)) from exc


def _phi(spec: str, n: int):
    try:
        return valuation_from_spec(spec, n)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc


def _emit(cfg: CliConfig, ns, result: dict, text: str):
    if cfg.output == "json":
        print(json.dumps(result, indent=2))
    elif cfg.output == "csv":
        keys = [k for k, v in result.items() if not isinstance(v, (dict, list))]
        print(",".join(keys))
        print(",".join(str(result[k]) for k in keys))
    else:
        print(text)
    if getattr(ns, "out", None):
        with open(ns.out, "w") as fh:
            json.dump(result, fh, indent=2)


def _cmd_deviation(cfg, ns) -> int:
    k, l = _load(ns.a, cfg.tolerances), _load(ns.b, cfg.tolerances)
    if k.dim != l.dim:
        raise UsageError("bodies live in different dimensions")
    dev = Deviation(ns.kind, _phi(ns.phi, k.dim))
    value = dev(k, l)
    result = {"command": "deviation", "kind": ns.kind, "phi": ns.phi, "a": ns.a, "b": ns.b,
              "value": value, "config": cfg.to_dict()}
    _emit(cfg, ns, result, repr(value))
    return 0


def _cmd_path_length(cfg, ns) -> int:
    try:
        with open(ns.path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"{ns.path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{ns.path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        path = Path.from_json(obj)
    except GeometryError as exc:
        raise UsageError(f"{ns.path}: {exc}") from exc
    dev = Deviation(ns.kind, _phi(ns.phi, path.start.dim))
    est = path_length(path, dev, max_depth=ns.max_depth)
    result = {"command": "path-length", "kind": ns.kind, "phi": ns.phi, "path": ns.path,
              **est.to_dict(), "config": cfg.to_dict()}
    text = repr(est.value) + ("" if est.converged else "  (not converged)")
    _emit(cfg, ns, result, text)
    return 0 if est.converged else 1


def _cmd_verify(cfg, ns) -> int:
    report = EXPERIMENTS[ns.name](seed=cfg.seed)
    if cfg.output == "json":
        print(report.to_json())
    elif cfg.output == "csv":
        print(report.to_csv(), end="")
    else:
        print(report.summary())
    if ns.out:
        with open(ns.out, "w") as fh:
            fh.write(report.to_json())
    if ns.csv:
        with open(ns.csv, "w") as fh:
            fh.write(report.to_csv())
    return 0 if report.passed else 1


def _cmd_steiner(cfg, ns) -> int:
    k = _load(ns.body, cfg.tolerances)
    try:
        dec = steiner_fit(k, radii=ns.radii)
    except GeometryError as exc:
        raise UsageError(str(exc)) from exc
    comps = {f"V{i}": v for i, v in dec.components.items()}
    result = {"command": "steiner", "body": ns.body, **comps, "config": cfg.to_dict()}
    _emit(cfg, ns, result, "  ".join(f"{k}={v:.10g}" for k, v in comps.items()))
    return 0


def _cmd_decompose(cfg, ns) -> int:
    k = _load(ns.body, cfg.tolerances)
    dec = mcmullen_decompose(_phi(ns.phi, k.dim), k)
    comps = {f"phi{i}": v for i, v in dec.components.items()}
    result = {"command": "decompose", "phi": ns.phi, "body": ns.body, "value": dec.value, **comps,
              "config": cfg.to_dict()}
    _emit(cfg, ns, result, "  ".join(f"{k}={v:.10g}" for k, v in comps.items()))
    return 0


def _cmd_hausdorff(cfg, ns) -> int:
    k, l = _load(ns.a, cfg.tolerances), _load(ns.b, cfg.tolerances)
    if k.dim != l.dim:
        raise UsageError("bodies live in different dimensions")
    value = hausdorff_distance(k, l)
    result = {"command": "hausdorff", "a": ns.a, "b": ns.b, "value": value, "config": cfg.to_dict()}
    _emit(cfg, ns, result, repr(value))
    return 0


COMMANDS = {
    "deviation": _cmd_deviation,
    "path-length": _cmd_path_length,
    "verify": _cmd_verify,
    "steiner": _cmd_steiner,
    "decompose": _cmd_decompose,
    "hausdorff": _cmd_hausdorff,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = CliConfig.from_namespace(ns)
    except ValueError as exc:
        print(f"valgeo: error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[ns.command](cfg, ns)
    except UsageError as exc:
        print(f"valgeo: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
