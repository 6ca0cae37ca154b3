"""Exact JSON descriptions of Hamiltonians, surfaces and jets.

A Hamiltonian description is a JSON object::

    {"schema": 1, "n": 2, "kind": "poly_over_h",
     "terms": [{"a": [1, 0], "b": [1, 0], "re": "1", "im": "0"}, ...]}

``kind`` is ``poly_over_h`` (half terms with ``a >= b``), ``quadratic``
(``"matrix"`` of rational strings) or ``radial`` (a ``poly_over_h`` term
list giving the positive boundary radius on the unit sphere). Rationals are
written as strings so that round trips are exact.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .errors import InputError
from .gaussq import GQ
from .hamcore import DeformationSeries, PolyOverH, Quadratic, Radial, hst

SCHEMA = 1


def _frac(s) -> Fraction:
    try:
        return Fraction(str(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {s!r}") from exc


def _terms_to_json(P: PolyOverH) -> list:
    return [
        {"a": list(a), "b": list(b), "re": str(c.re), "im": str(c.im)}
        for (a, b), c in P.terms()
    ]


def _terms_from_json(n: int, items) -> PolyOverH:
    if not isinstance(items, list):
        raise InputError("'terms' must be a list")
    terms = {}
    for t in items:
        if not isinstance(t, dict) or set(t) - {"a", "b", "re", "im"} or not {"a", "b"} <= set(t):
            raise InputError(f"bad term entry: {t!r}")
        key = (tuple(int(v) for v in t["a"]), tuple(int(v) for v in t["b"]))
        terms[key] = GQ(_frac(t.get("re", "0")), _frac(t.get("im", "0")))
    try:
        return PolyOverH(n, terms)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


class RadialPoly(Radial):
    """Radial Hamiltonian whose sphere profile is a ``PolyOverH`` element."""

    def __init__(self, profile_poly: PolyOverH):
        self.profile_poly = profile_poly
        super().__init__(profile_poly.n, profile=lambda U: profile_poly.evaluate(U), label="poly-profile")


def hamiltonian_to_dict(H) -> dict:
    if isinstance(H, RadialPoly):
        return {"schema": SCHEMA, "n": H.n, "kind": "radial", "terms": _terms_to_json(H.profile_poly)}
    if isinstance(H, Quadratic):
        return {"schema": SCHEMA, "n": H.n, "kind": "quadratic",
                "matrix": [[str(v) for v in row] for row in H.matrix]}
    if isinstance(H, PolyOverH):
        return {"schema": SCHEMA, "n": H.n, "kind": "poly_over_h", "terms": _terms_to_json(H)}
    raise InputError(f"cannot serialise {type(H).__name__}")


def hamiltonian_from_dict(d: dict):
    if not isinstance(d, dict):
        raise InputError("Hamiltonian description must be an object")
    if d.get("schema", SCHEMA) != SCHEMA:
        raise InputError(f"unsupported schema {d.get('schema')!r}")
    try:
        n = int(d["n"])
        kind = d["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("description needs integer 'n' and 'kind'") from exc
    if n < 1:
        raise InputError("n must be positive")
    if kind == "poly_over_h":
        return _terms_from_json(n, d.get("terms", []))
    if kind == "quadratic":
        try:
            return Quadratic([[_frac(v) for v in row] for row in d["matrix"]])
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"bad quadratic matrix: {exc}") from exc
    if kind == "radial":
        P = _terms_from_json(n, d.get("terms", []))
        return RadialPoly(P)
    raise InputError(f"unknown representation kind {kind!r}")


def surface_to_dict(S) -> dict:
    d = hamiltonian_to_dict(S.hamiltonian)
    d["census"] = S.tag
    if S.axes is not None:
        d["axes"] = [str(a) for a in S.axes]
    return d


def surface_from_dict(d: dict):
    from .geometry import ContactSurface

    tag = d.get("census", "generic")
    if tag == "ball" and "kind" not in d:
        return ContactSurface.ball(int(d["n"]))
    if tag == "ellipsoid" and "kind" not in d:
        return ContactSurface.ellipsoid([_frac(a) for a in d["axes"]])
    H = hamiltonian_from_dict(d)
    if tag == "ball":
        S = ContactSurface.ball(H.n)
        if not (isinstance(H, PolyOverH) and H == hst(H.n)):
            raise InputError("census tag 'ball' requires H = H_st")
        return S
    if tag == "ellipsoid":
        S = ContactSurface.ellipsoid([_frac(a) for a in d["axes"]])
        if S.hamiltonian != H:
            raise InputError("ellipsoid axes do not match the terms")
        return S
    if tag == "circular":
        return ContactSurface.circular(H)
    if tag == "generic":
        return ContactSurface.generic(H)
    raise InputError(f"unknown census tag {tag!r}")


def jet_to_dict(series: DeformationSeries) -> dict:
    return {"schema": SCHEMA, "n": series.n, "order": series.order,
            "jet": [hamiltonian_to_dict(h) for h in series.jet]}


def jet_from_dict(d: dict) -> DeformationSeries:
    try:
        n = int(d["n"])
        jet = [hamiltonian_from_dict(h) for h in d["jet"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad jet description: {exc}") from exc
    for h in jet:
        if isinstance(h, Radial):
            raise InputError("jet coefficients must be symbolic")
    if "order" in d and int(d["order"]) != len(jet):
        raise InputError("'order' does not match the number of jet coefficients")
    if not jet:
        raise InputError("empty jet")
    return DeformationSeries(hst(n), tuple(h.as_poly() for h in jet))


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def load_hamiltonian(path):
    return hamiltonian_from_dict(load_json(path))


def save_hamiltonian(H, path) -> None:
    dump_json(hamiltonian_to_dict(H), path)


def load_surface(path):
    return surface_from_dict(load_json(path))


def save_surface(S, path) -> None:
    dump_json(surface_to_dict(S), path)


def load_jet(path) -> DeformationSeries:
    return jet_from_dict(load_json(path))


def save_jet(series, path) -> None:
    dump_json(jet_to_dict(series), path)
