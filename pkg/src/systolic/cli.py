"""Command-line front end.

Every invocation is turned into a validated :class:`Scenario` and executed by
:func:`run`, which writes a versioned JSON (or CSV) report plus plot-data
files into the output directory and returns the process exit code:

0 success, 2 hypothesis violated, 3 search or degree budget exhausted,
4 input error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import (
    DegreeCapError,
    DomainError,
    HypothesisViolatedError,
    InputError,
    StarShapednessError,
    SystolicError,
    TRangeError,
)
from .geometry import ContactSurface, prop1_compare, resolve_convention, systolic_ratio
from .normalform import build_theorem_deformation, normal_form
from .serialize import SCHEMA, _json_default, hamiltonian_to_dict, load_jet, load_surface

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_BUDGET = 3
EXIT_INPUT = 4

COMMANDS = ("metrics", "orbits", "prop1", "normalform", "theorem", "sweep")


@dataclasses.dataclass
class Scenario:
    """One validated batch job."""

    command: str
    surface: str | None = None
    reference: str | None = None
    jet: str | None = None
    order: int | None = None
    samples: int = 16
    seed: int = 0
    tol_closure: float = 1e-8
    t_grid: str | None = None
    n: int = 2
    volume_method: str = "quadrature"
    max_period: float | None = None
    out: str = "."
    format: str = "json"

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise InputError("scenario must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise InputError(f"unknown scenario keys: {', '.join(unknown)}")
        if "command" not in d:
            raise InputError("scenario needs a 'command'")
        sc = cls(**d)
        sc.validate()
        return sc

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.command in ("metrics", "orbits", "prop1") and not self.surface:
            raise InputError(f"'{self.command}' needs a surface")
        if self.command in ("normalform", "theorem") and not self.jet:
            raise InputError(f"'{self.command}' needs a jet")
        for name in ("samples", "n"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InputError(f"'{name}' must be a positive integer")
        if self.order is not None and (not isinstance(self.order, int) or self.order < 1):
            raise InputError("'order' must be a positive integer")
        if not isinstance(self.seed, int):
            raise InputError("'seed' must be an integer")
        if not (isinstance(self.tol_closure, (int, float)) and self.tol_closure > 0):
            raise InputError("'tol_closure' must be positive")
        if self.format not in ("json", "csv"):
            raise InputError("'format' must be json or csv")
        if self.volume_method not in ("quadrature", "montecarlo", "both"):
            raise InputError("'volume_method' must be quadrature, montecarlo or both")
        if self.max_period is not None and not (isinstance(self.max_period, (int, float)) and self.max_period > 0):
            raise InputError("'max_period' must be positive")
        if self.t_grid is not None:
            parse_t_grid(self.t_grid)


def parse_t_grid(spec: str) -> np.ndarray:
    """``a:b:steps[:lin|log]`` to an array of ``steps`` values from a to b."""
    parts = str(spec).split(":")
    if len(parts) not in (3, 4):
        raise InputError(f"bad t-grid {spec!r}; expected a:b:steps[:lin|log]")
    try:
        a, b, k = float(Fraction(parts[0])), float(Fraction(parts[1])), int(parts[2])
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad t-grid {spec!r}") from exc
    mode = parts[3] if len(parts) == 4 else "lin"
    if k < 1 or mode not in ("lin", "log"):
        raise InputError(f"bad t-grid {spec!r}")
    if mode == "log":
        if a <= 0 or b <= 0:
            raise InputError("log t-grid needs positive end points")
        return np.geomspace(a, b, k)
    return np.linspace(a, b, k)


def resolve_surface(spec: str) -> ContactSurface:
    """A surface file, or a built-in ``ball:n`` / ``ellipsoid:a1,a2,...``."""
    if os.path.exists(spec):
        return load_surface(spec)
    kind, _, arg = spec.partition(":")
    try:
        if kind == "ball":
            return ContactSurface.ball(int(arg or 2))
        if kind == "ellipsoid":
            return ContactSurface.ellipsoid([Fraction(a) for a in arg.split(",")])
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad surface spec {spec!r}") from exc
    raise InputError(f"surface file not found: {spec}")


# -- report helpers ---------------------------------------------------------------


def _clean(obj):
    """Recursively convert to JSON-ready builtins (finite floats or None)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _timestamp() -> str:
    """UTC time, or ``SOURCE_DATE_EPOCH`` when set (for byte-identical reruns)."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        try:
            return datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc).isoformat()
        except ValueError:
            pass
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _report(sc: Scenario, body: dict, status: str) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": sc.command,
        "status": status,
        "scenario": dataclasses.asdict(sc),
        "convention": resolve_convention().to_dict(),
        "timestamp": _timestamp(),
        "result": body,
    }


def _write_report(sc: Scenario, report: dict, rows: list | None = None) -> str:
    """Main report (JSON, or CSV with ``format="csv"``); the table CSV is always written."""
    os.makedirs(sc.out, exist_ok=True)
    if rows:
        _write_rows(os.path.join(sc.out, f"{sc.command}_table.csv"), rows)
    if sc.format == "json" or not rows:
        path = os.path.join(sc.out, f"{sc.command}.json")
        with open(path, "w") as fh:
            json.dump(_clean(report), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    else:
        path = os.path.join(sc.out, f"{sc.command}.csv")
        _write_rows(path, rows)
    return path


def _write_rows(path: str, rows: list) -> None:
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in keys])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else v


def _write_plot(sc: Scenario, name: str, header: str, cols) -> None:
    os.makedirs(sc.out, exist_ok=True)
    with open(os.path.join(sc.out, name), "w") as fh:
        fh.write(f"# {header}\n")
        for row in zip(*cols):
            fh.write(" ".join("nan" if v is None else repr(float(v)) for v in row) + "\n")


# -- commands -----------------------------------------------------------------------


def _cmd_metrics(sc: Scenario):
    S = resolve_surface(sc.surface)
    m = systolic_ratio(S, volume_method=sc.volume_method, seeds=sc.samples, seed=sc.seed,
                       tol_closure=sc.tol_closure, max_period=sc.max_period)
    body = m.to_dict()
    body["census"] = S.tag
    status = "ok" if m.systole.known else "budget-exhausted"
    row = {k: body[k] for k in ("n", "volume", "volume_error", "systole", "certified", "ratio", "ratio_error")}
    _write_plot(sc, "action_spectrum.dat", "period action", ([o["period"] for o in body["orbits"]],
                                                             [o["action"] for o in body["orbits"]]))
    return body, status, [row], (EXIT_OK if m.systole.known else EXIT_BUDGET)


def _cmd_orbits(sc: Scenario):
    S = resolve_surface(sc.surface)
    from .geometry import surface_systole

    est = surface_systole(S, seeds=sc.samples, seed=sc.seed, tol_closure=sc.tol_closure,
                          max_period=sc.max_period)
    body = est.to_dict()
    _write_plot(sc, "action_spectrum.dat", "period action",
                ([o.period for o in est.orbits], [o.action for o in est.orbits]))
    rows = [{"index": i, "period": o.period, "action": o.action, "residual": o.closure_residual,
             "multiplicity_guard": o.multiplicity_guard, "source": o.source} for i, o in enumerate(est.orbits)]
    status = "ok" if est.known else "budget-exhausted"
    return body, status, rows, (EXIT_OK if est.known else EXIT_BUDGET)


def _cmd_prop1(sc: Scenario):
    S = resolve_surface(sc.surface)
    ref = resolve_surface(sc.reference) if sc.reference else None
    cert = prop1_compare(S, ref, seed=sc.seed, tol_closure=sc.tol_closure)
    body = cert.to_dict()
    status = "ok" if cert.certified else "uncertified"
    row = {k: body[k] for k in ("rho_min", "rho_max", "predicted_action", "measured_action",
                                "ratio_lower_bound", "ratio_error", "inequality_holds", "equality_case", "certified")}
    return body, status, [row], EXIT_OK


def _cmd_normalform(sc: Scenario):
    series = load_jet(sc.jet)
    jet, res, rep = normal_form(series, sc.order, samples=max(sc.samples, 200),
                                seed=sc.seed)
    body = {
        "order": rep.order,
        "E": [hamiltonian_to_dict(E) for E in res.terms],
        "W": [hamiltonian_to_dict(W) for W in jet.generators],
        "report": rep.to_dict(),
    }
    rows = [{"t": t, "residual": r} for t, r in zip(rep.ts, rep.residuals)]
    _write_plot(sc, "normalform_residual.dat", "t residual", (rep.ts, rep.residuals))
    return body, "ok", rows, EXIT_OK


def _cmd_theorem(sc: Scenario):
    series = load_jet(sc.jet)
    fam = build_theorem_deformation(series, sc.order, seed=sc.seed)
    ts = parse_t_grid(sc.t_grid or "0.01:0.2:5")
    n = fam.n
    points = []
    for t in ts:
        p = fam.metrics_at(float(t), seeds=sc.samples, seed=sc.seed)
        d = p.to_dict()
        d["jet_mismatch"] = fam.jet_mismatch(float(t))
        points.append(d)
    body = {"order": fam.N, "n": n, "t_max": fam.t_max, "reference_ratio": 1.0 / math.factorial(n),
            "E": [hamiltonian_to_dict(E) for E in fam.resonant.terms], "points": points,
            "all_hold": all(p["holds"] for p in points)}
    rows = [{k: p[k] for k in ("t", "volume", "systole", "ratio", "ratio_error", "jet_mismatch", "holds")}
            for p in points]
    _write_plot(sc, "theorem_ratio.dat", "t ratio ratio_error",
                ([p["t"] for p in points], [p["ratio"] for p in points], [p["ratio_error"] for p in points]))
    return body, "ok", rows, EXIT_OK


def _cmd_sweep(sc: Scenario):
    """Inequality audit over random circular domains at amplitudes from the t-grid."""
    from .generators import random_circular, rng_from_seed

    amps = parse_t_grid(sc.t_grid or "0.05:0.3:6")
    rng = rng_from_seed(sc.seed)
    rows = []
    for a in amps:
        H = random_circular(sc.n, rng, Fraction(float(a)).limit_denominator(10**6))
        S = ContactSurface.circular(H)
        cert = prop1_compare(S, seed=sc.seed, tol_closure=sc.tol_closure)
        m = systolic_ratio(S, seeds=8, seed=sc.seed, tol_closure=sc.tol_closure)
        rows.append({
            "amplitude": float(a), "rho_min": cert.rho_min, "rho_max": cert.rho_max,
            "ratio": m.systolic_ratio, "ratio_error": m.ratio_error, "lower_bound": cert.ratio_lower_bound,
            "reference": 1.0 / math.factorial(sc.n),
            "holds": bool(m.systolic_ratio is not None
                          and m.systolic_ratio >= 1.0 / math.factorial(sc.n) - m.ratio_error),
            "certified": cert.certified,
        })
    _write_plot(sc, "sweep_ratio.dat", "amplitude ratio", ([r["amplitude"] for r in rows], [r["ratio"] for r in rows]))
    return {"rows": rows, "all_hold": all(r["holds"] for r in rows)}, "ok", rows, EXIT_OK


_DISPATCH = {
    "metrics": _cmd_metrics,
    "orbits": _cmd_orbits,
    "prop1": _cmd_prop1,
    "normalform": _cmd_normalform,
    "theorem": _cmd_theorem,
    "sweep": _cmd_sweep,
}


def run(scenario: Scenario, stream=None) -> int:
    """Execute a scenario; returns the exit code and writes the artifacts."""
    stream = stream or sys.stdout
    sc = scenario
    try:
        sc.validate()
        body, status, rows, code = _DISPATCH[sc.command](sc)
    except HypothesisViolatedError as exc:
        body, status, rows, code = {"error": str(exc), "defect": exc.defect}, "hypothesis-violated", None, EXIT_HYPOTHESIS
    except DegreeCapError as exc:
        body, status, rows, code = {"error": str(exc)}, "budget-exhausted", None, EXIT_BUDGET
    except TRangeError as exc:
        body, status, rows, code = {"error": str(exc), "t_max": exc.t_max}, "input-error", None, EXIT_INPUT
    except (InputError, StarShapednessError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystolicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    path = _write_report(sc, _report(sc, body, status), rows)
    print(f"{sc.command}: {status} -> {path}", file=stream)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="systolic", description="Systolic quantities of star-shaped energy surfaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--surface", help="surface file, or ball:n / ellipsoid:a1,a2,...")
        sp.add_argument("--reference", help="round reference surface for prop1 (default: unit ball)")
        sp.add_argument("--jet", help="jet description file")
        sp.add_argument("--order", type=int, help="normal-form order N")
        sp.add_argument("--samples", type=int, default=16, help="orbit-search seeds / residual samples")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol-closure", type=float, default=1e-8)
        sp.add_argument("--t-grid", help="a:b:steps[:lin|log]")
        sp.add_argument("--n", type=int, default=2, help="dimension for generated surfaces (sweep)")
        sp.add_argument("--max-period", type=float, help="longest period searched for closed orbits")
        sp.add_argument("--volume-method", default="quadrature", choices=["quadrature", "montecarlo", "both"])
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--format", default="json", choices=["json", "csv"])

    for name in COMMANDS:
        common(sub.add_parser(name))
    rp = sub.add_parser("run", help="run a scenario JSON file")
    rp.add_argument("scenario")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            with open(args.scenario) as fh:
                sc = Scenario.from_dict(json.load(fh))
        else:
            d = {k: v for k, v in vars(args).items()}
            sc = Scenario(**d)
    except (OSError, json.JSONDecodeError, InputError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(sc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
