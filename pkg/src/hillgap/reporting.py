"""Deterministic CSV/JSON serialization of spectra and residual reports.

Floats are always written with 17 significant digits so that every value
round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

from hillgap.asymptotics import ResidualReport, two_term_endpoint_table
from hillgap.errors import ValidationError
from hillgap.galerkin import SpectralData
from hillgap.potential import PeriodicPotential

SPECTRUM_HEADER = ("n", "lambda_minus", "lambda_plus", "gamma", "tau", "conv_err")
COMPARISON_HEADER = ("n", "galerkin_minus", "oracle_minus", "galerkin_plus", "oracle_plus",
                     "abs_diff_minus", "abs_diff_plus", "abs_diff_gamma")


def fmt(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits; key order is preserved."""
    return _encode(obj, indent, 0) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# -- spectra -----------------------------------------------------------------

def spectrum_rows(sd: SpectralData) -> list:
    # gap 0 is (-inf, lambda_0): lambda_0 is its upper endpoint
    rows = [[0, "", float(sd.lambda0), "", "", float(sd.conv_err[0])]]
    for i in range(sd.n_max):
        rows.append([i + 1, float(sd.lambda_minus[i]), float(sd.lambda_plus[i]),
                     float(sd.gaps[i]), float(sd.midpoints[i]), float(sd.conv_err[i + 1])])
    return rows


def spectrum_csv(sd: SpectralData) -> str:
    return csv_text(SPECTRUM_HEADER, spectrum_rows(sd))


def spectrum_to_dict(sd: SpectralData) -> dict:
    return {
        "lambda0": sd.lambda0,
        "n": sd.n.tolist(),
        "lambda_minus": sd.lambda_minus.tolist(),
        "lambda_plus": sd.lambda_plus.tolist(),
        "gamma": sd.gaps.tolist(),
        "tau": sd.midpoints.tolist(),
        "conv_err": sd.conv_err.tolist(),
        "meta": sd.meta,
    }


def spectrum_json(sd: SpectralData) -> str:
    return dumps(spectrum_to_dict(sd))


def spectrum_from_dict(d: dict) -> SpectralData:
    try:
        return SpectralData(float(d["lambda0"]), np.array(d["lambda_minus"], dtype=float),
                            np.array(d["lambda_plus"], dtype=float),
                            np.array(d["conv_err"], dtype=float), dict(d.get("meta", {})))
    except KeyError as exc:
        raise ValidationError(f"spectrum JSON lacks field {exc}") from None


def spectrum_from_json(text: str) -> SpectralData:
    return spectrum_from_dict(json.loads(text))


def comparison_rows(galerkin: SpectralData, oracle: SpectralData) -> list:
    n_max = min(galerkin.n_max, oracle.n_max)
    rows = [[0, "", "", float(galerkin.lambda0), float(oracle.lambda0), "",
             abs(galerkin.lambda0 - oracle.lambda0), ""]]
    for i in range(n_max):
        gm, om = float(galerkin.lambda_minus[i]), float(oracle.lambda_minus[i])
        gp, op = float(galerkin.lambda_plus[i]), float(oracle.lambda_plus[i])
        rows.append([i + 1, gm, om, gp, op, abs(gm - om), abs(gp - op),
                     abs(float(galerkin.gaps[i]) - float(oracle.gaps[i]))])
    return rows


def comparison_csv(galerkin: SpectralData, oracle: SpectralData) -> str:
    return csv_text(COMPARISON_HEADER, comparison_rows(galerkin, oracle))


def comparison_to_dict(galerkin: SpectralData, oracle: SpectralData) -> dict:
    rows = comparison_rows(galerkin, oracle)
    diffs = [r[5] for r in rows[1:]] + [r[6] for r in rows[1:]] + [rows[0][6]]
    return {
        "galerkin": spectrum_to_dict(galerkin),
        "oracle": spectrum_to_dict(oracle),
        "abs_diff_minus": [r[5] for r in rows[1:]],
        "abs_diff_plus": [r[6] for r in rows[1:]],
        "abs_diff_gamma": [r[7] for r in rows[1:]],
        "abs_diff_lambda0": rows[0][6],
        "max_abs_diff": max(diffs),
    }


# -- residual reports ----------------------------------------------------------

RESIDUAL_HEADER = ("n", "gap", "midpoint", "endpoint_minus", "endpoint_plus", "matched", "matched_min_form")
OMEGA_HEADER = ("n", "omega_re", "omega_im")
FITS_HEADER = ("residual", "range", "lo", "hi", "slope", "stderr", "verdict")
ENDPOINT_HEADER = ("n", "lambda_minus", "lambda_plus", "pred_minus", "pred_plus", "mismatch_minus", "mismatch_plus")


def residual_rows(r: ResidualReport) -> list:
    return [[int(n), float(a), float(b), float(c), float(d), float(e), float(f)]
            for n, a, b, c, d, e, f in zip(r.n, r.gap_residual, r.midpoint_residual, r.endpoint_minus_residual,
                                           r.endpoint_plus_residual, r.matched_residual,
                                           r.matched_residual_min_form)]


def omega_rows(r: ResidualReport) -> list:
    om = r.omega
    return [[n, float(om[n].real), float(om[n].imag)] for n in range(-om.n_max, om.n_max + 1)]


def fits_rows(r: ResidualReport) -> list:
    rows = []
    for name, fit in r.fits.items():
        verdict = r.verdicts[name].label if name in r.verdicts else ""
        for kind in ("full", "upper"):
            f = fit[kind]
            if f is None:
                rows.append([name, kind, "", "", "", "", verdict])
            else:
                rows.append([name, kind, f["range"][0], f["range"][1], float(f["slope"]), float(f["stderr"]), verdict])
    return rows


def report_to_dict(r: ResidualReport, p: PeriodicPotential, sd: SpectralData) -> dict:
    return {
        "potential": p.label,
        "alpha": r.alpha,
        "epsilon": r.epsilon,
        "predicted_class": {"s_pred": r.s_pred},
        "n": r.n.tolist(),
        "residuals": {
            "gap": r.gap_residual.tolist(),
            "midpoint": r.midpoint_residual.tolist(),
            "endpoint_minus": r.endpoint_minus_residual.tolist(),
            "endpoint_plus": r.endpoint_plus_residual.tolist(),
            "matched": r.matched_residual.tolist(),
            "matched_min_form": r.matched_residual_min_form.tolist(),
        },
        "omega": {"n": list(range(-r.omega.n_max, r.omega.n_max + 1)),
                  "re": r.omega.values.real.tolist(), "im": r.omega.values.imag.tolist()},
        "fits": r.fits,
        "verdicts": {k: v.to_dict() for k, v in r.verdicts.items()},
        "endpoint_table": two_term_endpoint_table(sd, p),
        "spectrum": spectrum_to_dict(sd),
    }


def report_files(r: ResidualReport, p: PeriodicPotential, sd: SpectralData, fmt_name: str) -> dict:
    """File name -> text for an asymptotics run."""
    if fmt_name == "json":
        return {"report.json": dumps(report_to_dict(r, p, sd))}
    table = two_term_endpoint_table(sd, p)
    return {
        "residuals.csv": csv_text(RESIDUAL_HEADER, residual_rows(r)),
        "omega.csv": csv_text(OMEGA_HEADER, omega_rows(r)),
        "fits.csv": csv_text(FITS_HEADER, fits_rows(r)),
        "endpoints.csv": csv_text(ENDPOINT_HEADER, [[row[h] for h in ENDPOINT_HEADER] for row in table]),
        "spectrum.csv": spectrum_csv(sd),
    }
