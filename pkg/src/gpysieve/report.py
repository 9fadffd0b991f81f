"""Plain-dict renderings of reports, plus the JSON/CSV writers used by the CLI.

Floats are rounded to 12 significant digits and non-finite values become
``null``, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from typing import Any, Iterable, Sequence

from gpysieve import __version__
from gpysieve.correlations import CorrelationReport, SieveParams
from gpysieve.f2 import BoundResult, F2Params, PositivityReport, SearchResult
from gpysieve.gallagher import GallagherReport, SubintervalConfig
from gpysieve.singular import SingularValue

SIG_DIGITS = 12


def num(x: float | int | None) -> float | int | None:
    if x is None or isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def clean(obj: Any) -> Any:
    """Recursively round floats and turn tuples into lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()  # numpy scalar
    if isinstance(obj, (float, int)) or obj is None:
        return num(obj)
    return obj


def singular_dict(sv: SingularValue, offsets: Sequence[int]) -> dict:
    lo, hi = sv.interval
    return {
        "set": list(offsets),
        "value": sv.value,
        "tail_bound": sv.tail_bound,
        "interval": [lo, hi],
        "cutoff": sv.cutoff,
        "admissible": sv.value > 0,
    }


def gallagher_dict(rep: GallagherReport, config: SubintervalConfig) -> dict:
    return {
        "h": rep.h,
        "parts": [{"B": p.B, "C": p.C, "k": p.k, "d": p.d} for p in config.parts],
        "exact_sum": rep.exact_sum,
        "predicted": rep.predicted,
        "ratio": rep.ratio,
        "tuple_count": rep.tuple_count,
        "distinct_unions": rep.distinct_unions,
        "error_bound": rep.error_bound,
        "cutoff": rep.cutoff,
    }


def sieve_dict(p: SieveParams) -> dict:
    return {"N": p.N, "theta_exponent": p.theta_exponent, "lambda": p.lambda_, "R": p.R, "h": p.h}


def correlation_dict(rep: CorrelationReport) -> dict:
    return {
        "mode": rep.mode,
        "empirical": rep.empirical,
        "main_term": rep.main_term,
        "ratio": rep.ratio,
        "main_band": list(rep.main_band),
        "u": rep.u,
        "v": rep.v,
        "sieve": sieve_dict(rep.params),
        "spec": rep.spec,
    }


def bound_dict(b: BoundResult) -> dict:
    return {
        "lambda": b.lambda_,
        "delta_prime": b.delta_prime,
        "bound": b.bound,
        "valid": b.valid,
        "radicand": b.radicand,
        "radicand_negative": b.radicand < 0,
    }


def f2_params_dict(p: F2Params) -> dict:
    return {"lambda": p.lambda_, "delta": p.delta, "k": p.k, "l": p.l, "theta": p.theta, "x": p.x}


def positivity_dict(rep: PositivityReport, breakdown: bool = False) -> dict:
    out = {
        "params": f2_params_dict(rep.params),
        "use_bound": rep.use_bound,
        "total_sign": rep.total_sign,
        "certified": rep.total_sign != "0",
        "log_magnitude": rep.log_magnitude,
        "shifted_total": rep.shifted_total,
        "shift": rep.shift,
        "tail_bound": rep.tail_bound,
        "rounding_bound": rep.rounding_bound,
        "r0": rep.r0,
        "argmax": rep.argmax,
        "window": list(rep.window),
        "terms": int(rep.r.size),
    }
    if breakdown:
        out["breakdown"] = [list(t) for t in rep.breakdown()]
    return out


def search_dict(res: SearchResult, schedule: dict) -> dict:
    return {
        "found": res.found,
        "k": res.k,
        "l": res.l,
        "theta": res.theta,
        "scanned": res.scanned,
        "futile": res.futile,
        "delta_prime": res.delta_prime,
        "schedule": schedule,
        "witness": positivity_dict(res.report) if res.report is not None else None,
    }


def with_provenance(report: dict, command: str, params: dict) -> dict:
    return {
        "report": report,
        "provenance": {"tool": "gpysieve", "version": __version__, "command": command, "params": params},
    }


def dumps(obj: Any) -> str:
    return json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v for v in clean(list(row))])
    return buf.getvalue()


def load_schema(name: str) -> dict:
    return json.loads(resources.files("gpysieve").joinpath("schemas", f"{name}.json").read_text())
