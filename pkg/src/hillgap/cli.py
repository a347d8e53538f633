"""Command-line entry point: ``hillgap {spectrum,asymptotics,oracle,space-check}``.

``--potential`` accepts a JSON file, inline JSON, or a shorthand such as
``mathieu:a=1`` / ``delta_comb:c=1`` / ``random_decay:s=1,K=128``. A JSON
potential file may also carry any of the run fields (``n_max``, ``tol``,
``epsilon``, ``weight``, ``method``, ``format``, ``seed``); flags override it.

Exit codes: 0 success, 2 validation error, 3 numerical failure. Errors are
printed to stderr as one JSON object ``{"error", "message", "exit_code"}``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hillgap import reporting
from hillgap.asymptotics import DEFAULT_EPSILON, marchenko_ostrovskii_check, residual_report
from hillgap.errors import HillGapError, ValidationError
from hillgap.galerkin import SpectralData, converged_spectrum
from hillgap.oracle import DiscriminantOracle, endpoint_roots
from hillgap.potential import PeriodicPotential, potential_from_spec
from hillgap.weights import SlowlyVaryingWeight, WeightFunction, embedding_constants

METHODS = ("galerkin", "oracle", "both")
FORMATS = ("csv", "json")
RUN_FIELDS = ("n_max", "tol", "epsilon", "weight", "method", "format", "seed", "oracle_tol")
DEFAULT_SUPPORT = 64
EMBEDDING_K_MAX = 10 ** 6


@dataclass
class RunConfig:
    potential: dict
    n_max: int = 10
    tol: float = 1e-6
    epsilon: float = DEFAULT_EPSILON
    weight: WeightFunction = field(default_factory=WeightFunction)
    method: str = "galerkin"
    format: str = "csv"
    out: Optional[str] = None
    seed: Optional[int] = None
    oracle_tol: float = 1e-10

    def validate(self) -> None:
        if not isinstance(self.n_max, int) or isinstance(self.n_max, bool) or self.n_max < 1:
            raise ValidationError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be > 0, got {self.tol!r}")
        if not self.oracle_tol > 0:
            raise ValidationError(f"oracle_tol must be > 0, got {self.oracle_tol!r}")
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon!r}")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}")

    def build_potential(self) -> PeriodicPotential:
        spec = dict(self.potential)
        if self.seed is not None and "family" in spec:
            fam = dict(spec["family"])
            if fam.get("tag") == "random_decay":
                fam["seed"] = int(self.seed)
                spec["family"] = fam
        return potential_from_spec(spec, DEFAULT_SUPPORT)


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_shorthand(text: str) -> dict:
    """``tag[:key=value,...]`` into a family spec."""
    tag, _, rest = text.partition(":")
    fam = {"tag": tag.strip()}
    support = None
    for item in filter(None, (x.strip() for x in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValidationError(f"shorthand parameter {item!r} is not key=value")
        key = key.strip()
        if key == "support_limit":
            support = int(value)
        else:
            fam[key] = _parse_number(value.strip())
    spec = {"family": fam}
    if support is not None:
        spec["support_limit"] = support
    return spec


def load_potential_arg(arg: str) -> dict:
    """File path, inline JSON, or shorthand -> dict (potential spec plus optional run fields)."""
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = arg.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"potential JSON does not parse: {exc}") from None
        if not isinstance(spec, dict):
            raise ValidationError("potential JSON must be an object")
        return spec
    if os.path.isfile(arg):
        raise ValidationError(f"potential file {arg!r} is not a JSON object")
    return parse_shorthand(text)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    raw = load_potential_arg(args.potential)
    run = {k: raw.pop(k) for k in RUN_FIELDS if k in raw}
    weight = WeightFunction.from_dict(run.pop("weight", {}))
    cfg = RunConfig(potential=raw, weight=weight, **run)
    for name in ("n_max", "tol", "epsilon", "method", "format", "out", "seed", "oracle_tol"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    s = weight.s if args.weight_s is None else args.weight_s
    phi = weight.phi if args.phi_exponents is None else SlowlyVaryingWeight(tuple(args.phi_exponents))
    cfg.weight = WeightFunction(float(s), phi)
    if isinstance(cfg.n_max, float) and cfg.n_max.is_integer():
        cfg.n_max = int(cfg.n_max)
    cfg.validate()
    return cfg


# -- runners -----------------------------------------------------------------

def _galerkin(p: PeriodicPotential, cfg: RunConfig) -> SpectralData:
    return converged_spectrum(p, cfg.n_max, cfg.tol)


def _oracle(p: PeriodicPotential, cfg: RunConfig) -> SpectralData:
    return endpoint_roots(DiscriminantOracle.for_potential(p), cfg.n_max, cfg.oracle_tol)


def _spectrum(p: PeriodicPotential, cfg: RunConfig) -> SpectralData:
    return _oracle(p, cfg) if cfg.method == "oracle" else _galerkin(p, cfg)


def run_spectrum(cfg: RunConfig) -> dict:
    """File name -> content for the ``spectrum`` subcommand."""
    p = cfg.build_potential()
    ext = cfg.format
    if cfg.method == "both":
        g = _galerkin(p, cfg)
        o = _oracle(p, cfg)
        if ext == "json":
            return {"comparison.json": reporting.dumps(reporting.comparison_to_dict(g, o))}
        return {"spectrum_galerkin.csv": reporting.spectrum_csv(g),
                "spectrum_oracle.csv": reporting.spectrum_csv(o),
                "comparison.csv": reporting.comparison_csv(g, o)}
    sd = _spectrum(p, cfg)
    text = reporting.spectrum_json(sd) if ext == "json" else reporting.spectrum_csv(sd)
    return {f"spectrum.{ext}": text}


def run_asymptotics(cfg: RunConfig) -> dict:
    p = cfg.build_potential()
    sd = _spectrum(p, cfg)
    report = residual_report(p, sd, cfg.epsilon)
    return reporting.report_files(report, p, sd, cfg.format)


def run_oracle(cfg: RunConfig, lambdas=None) -> dict:
    p = cfg.build_potential()
    o = DiscriminantOracle.for_potential(p)
    sd = endpoint_roots(o, cfg.n_max, cfg.oracle_tol)
    files = {}
    if cfg.format == "json":
        payload = {"spectrum": reporting.spectrum_to_dict(sd)}
        if lambdas:
            vals = np.atleast_1d(o.discriminant(np.asarray(lambdas, dtype=float)))
            payload["discriminant"] = {"lambda": list(map(float, lambdas)), "delta": vals.tolist()}
        files["oracle.json"] = reporting.dumps(payload)
        return files
    files["spectrum.csv"] = reporting.spectrum_csv(sd)
    if lambdas:
        vals = np.atleast_1d(o.discriminant(np.asarray(lambdas, dtype=float)))
        files["discriminant.csv"] = reporting.csv_text(
            ("lambda", "delta"), [[float(l), float(v)] for l, v in zip(lambdas, vals)])
    return files


def run_space_check(cfg: RunConfig) -> dict:
    p = cfg.build_potential()
    sd = _spectrum(p, cfg)
    check = marchenko_ostrovskii_check(p, sd, cfg.weight)
    emb = embedding_constants(cfg.weight.s, cfg.epsilon, cfg.weight.phi, EMBEDDING_K_MAX)
    if cfg.format == "json":
        payload = {"potential": p.label, **check.to_dict(), "embedding": {"epsilon": cfg.epsilon, **emb}}
        return {"space_check.json": reporting.dumps(payload)}
    rows = []
    for name, v in (("potential", check.potential_verdict), ("gaps", check.gap_verdict)):
        for (lo, hi), b in zip(v.ranges, v.block_sums):
            rows.append([name, lo, hi, float(b), v.label])
    summary = [["agree", str(check.agree).lower()],
               ["potential_verdict", check.potential_verdict.label],
               ["gap_verdict", check.gap_verdict.label]]
    for key, fit in (("potential_fit", check.potential_fit), ("gap_fit", check.gap_fit)):
        if fit is not None:
            summary.append([f"{key}_slope", float(fit["slope"])])
    summary += [[f"embedding_{k}", v if not isinstance(v, bool) else str(v).lower()] for k, v in emb.items()]
    return {"blocks.csv": reporting.csv_text(("sequence", "lo", "hi", "block_sum", "verdict"), rows),
            "summary.csv": reporting.csv_text(("key", "value"), summary)}


def write_outputs(files: dict, out: Optional[str], stream=None) -> None:
    """Write to directory ``out``, or to ``stream`` with ``# <name>`` separators when several files."""
    if out is not None:
        os.makedirs(out, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return
    stream = stream or sys.stdout
    if len(files) == 1:
        stream.write(next(iter(files.values())))
        return
    for name, text in files.items():
        stream.write(f"# {name}\n")
        stream.write(text)


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hillgap", description="Gap endpoints and asymptotics of Hill operators")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", required=True,
                        help="JSON file, inline JSON, or shorthand like 'mathieu:a=1'")
    common.add_argument("--n-max", dest="n_max", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="Galerkin convergence tolerance")
    common.add_argument("--oracle-tol", dest="oracle_tol", type=float, default=None)
    common.add_argument("--epsilon", type=float, default=None)
    common.add_argument("--weight-s", dest="weight_s", type=float, default=None)
    common.add_argument("--phi-exponents", dest="phi_exponents", type=float, nargs="*", default=None)
    common.add_argument("--method", choices=METHODS, default=None)
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("--out", default=None, help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="seed for random_decay potentials")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="gap endpoints, lengths and midpoints")
    sub.add_parser("asymptotics", parents=[common], help="residuals, omega, fits and verdicts")
    orc = sub.add_parser("oracle", parents=[common], help="endpoints from the Floquet discriminant")
    orc.add_argument("--lambda", dest="lambdas", type=float, nargs="*", default=None,
                     help="also tabulate Delta at these lambda values")
    sub.add_parser("space-check", parents=[common], help="weighted-space membership of qhat and gaps")
    return parser


def _fail(exc: HillGapError, stream) -> int:
    payload = {"error": exc.code, "message": str(exc), "exit_code": exc.exit_code}
    stream.write(json.dumps(payload, sort_keys=True) + "\n")
    return exc.exit_code


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "spectrum":
            files = run_spectrum(cfg)
        elif args.command == "asymptotics":
            files = run_asymptotics(cfg)
        elif args.command == "oracle":
            files = run_oracle(cfg, args.lambdas)
        else:
            files = run_space_check(cfg)
        write_outputs(files, cfg.out, stdout)
    except HillGapError as exc:
        return _fail(exc, stderr)
    except (TypeError, KeyError) as exc:
        # malformed config values that slipped past the typed parsers
        return _fail(ValidationError(f"invalid configuration: {exc}"), stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
