"""JSON instance formats.

Complex numbers are written as ``[re, im]``; plain numbers are accepted on
input.  Every document carries a ``"schema"`` tag.  Relative file references
are resolved against the referring file, then against ``TORSION_DATA_DIR``,
then against the bundled ``data`` directory.
"""
from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .complex_core import ChiralityOperator, CochainComplex, validate_chirality, validate_complex
from .contact_model import ResonanceModel, random_resonance_model
from .errors import SchemaError
from .morse_turaev import CWData, EulerChain, Incidence, LocalSystem
from .zeta_orbits import RepOnMappingTorus, SuspensionSystem

__all__ = [
    "encode_complex",
    "decode_complex",
    "decode_matrix",
    "encode_matrix",
    "resolve_path",
    "load_json",
    "load_complex",
    "dump_complex",
    "load_resonance_model",
    "load_cw",
    "dump_cw",
    "load_rep",
    "load_torus_rep",
    "load_euler",
    "dump_euler",
    "load_spectrum",
]


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise SchemaError(f"cannot read {x!r} as a complex number")


def decode_matrix(rows, shape=None) -> np.ndarray:
    if not isinstance(rows, list):
        raise SchemaError("matrix must be a list of rows")
    M = np.array([[decode_complex(v) for v in row] for row in rows], dtype=complex)
    if shape is not None:
        if M.size == 0:
            return np.zeros(shape, dtype=complex)
        if M.shape != tuple(shape):
            raise SchemaError(f"matrix has shape {M.shape}, expected {tuple(shape)}")
    return M


def encode_matrix(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[encode_complex(v) for v in row] for row in M]


def data_dirs() -> list[Path]:
    dirs = []
    env = os.environ.get("TORSION_DATA_DIR")
    if env:
        dirs.extend(Path(p) for p in env.split(os.pathsep) if p)
    dirs.append(Path(str(resources.files("torsion") / "data")))
    return dirs


def resolve_path(name: str | os.PathLike, relative_to: Path | None = None) -> Path:
    p = Path(name)
    candidates = [p] if p.is_absolute() else ([relative_to / p] if relative_to else []) + [p] + [d / p for d in data_dirs()]
    for c in candidates:
        if c.is_file():
            return c
    raise SchemaError(f"file not found: {name}")


def load_json(path, schema: str | None = None) -> tuple[dict, Path]:
    p = resolve_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise SchemaError(f"{p}: top level must be an object")
    if schema is not None and data.get("schema") != schema:
        raise SchemaError(f"{p}: expected schema {schema!r}, found {data.get('schema')!r}")
    return data, p


def _require(data: dict, *keys):
    missing = [k for k in keys if k not in data]
    if missing:
        raise SchemaError(f"missing fields {missing}")


# --------------------------------------------------------------------------
# complex.v1
# --------------------------------------------------------------------------


def complex_from_dict(data: dict) -> tuple[CochainComplex, ChiralityOperator | None]:
    _require(data, "dims", "differentials")
    dims = [int(d) for d in data["dims"]]
    if "n" in data and int(data["n"]) != len(dims) - 1:
        raise SchemaError("n disagrees with the number of dimensions")
    if len(data["differentials"]) != len(dims) - 1:
        raise SchemaError("one differential per consecutive pair of degrees is required")
    mats = [decode_matrix(M, (dims[k + 1], dims[k])) for k, M in enumerate(data["differentials"])]
    C = validate_complex(mats, dims=dims, tol=float(data.get("tol", 1e-12)))
    G = None
    if data.get("chirality") is not None:
        blocks = [decode_matrix(B, (dims[len(dims) - 1 - k], dims[k])) for k, B in enumerate(data["chirality"])]
        G = validate_chirality(C, blocks)
    return C, G


def load_complex(path) -> tuple[CochainComplex, ChiralityOperator | None]:
    data, _ = load_json(path, "complex.v1")
    return complex_from_dict(data)


def dump_complex(C: CochainComplex, G: ChiralityOperator | None = None) -> dict:
    out = {"schema": "complex.v1", "n": C.n, "dims": list(C.dims),
           "differentials": [encode_matrix(C.d(k)) if C.d(k).size else [] for k in range(C.n)]}
    if G is not None:
        out["chirality"] = [encode_matrix(B) if B.size else [] for B in G.blocks]
    return out


# --------------------------------------------------------------------------
# resonance_model.v1
# --------------------------------------------------------------------------


def resonance_model_from_dict(data: dict) -> ResonanceModel:
    _require(data, "r", "s0")
    profile = data.get("profile")
    factors = data.get("scalar_factors")
    return random_resonance_model(
        int(data["r"]), int(data.get("W_dim", 1)), decode_complex(data["s0"]),
        int(data.get("nilpotent_depth", 0)), int(data.get("seed", 0)),
        profile=tuple(profile) if profile is not None else None,
        scalar_factors=[tuple(f) for f in factors] if factors is not None else None,
    )


def load_resonance_model(path) -> ResonanceModel:
    data, _ = load_json(path, "resonance_model.v1")
    return resonance_model_from_dict(data)


# --------------------------------------------------------------------------
# cw.v1, rep.v1, euler.v1
# --------------------------------------------------------------------------


def _path(raw) -> tuple:
    try:
        return tuple((str(e), int(s)) for e, s in raw)
    except (TypeError, ValueError):
        raise SchemaError(f"bad edge path {raw!r}") from None


def cw_from_dict(data: dict) -> CWData:
    _require(data, "cells", "incidence", "basepoint")
    cells = tuple(tuple(str(a) for a in names) for names in data["cells"])
    basepoint = str(data["basepoint"])
    base = {a: basepoint for names in cells for a in names}
    base.update({v: v for v in cells[0]})
    base.update({str(k): str(v) for k, v in data.get("base", {}).items()})
    inc = {}
    for a, terms in data["incidence"].items():
        inc[str(a)] = tuple(Incidence(str(t["face"]), int(t["sign"]), _path(t.get("path", []))) for t in terms)
    att = {str(a): _path(w) for a, w in data.get("attaching", {}).items()}
    return CWData(cells, inc, base, att, tuple(str(e) for e in data.get("tree", [])), basepoint,
                  str(data.get("name", ""))).validate()


def dump_cw(cw: CWData) -> dict:
    return {
        "schema": "cw.v1",
        "name": cw.name,
        "cells": [list(c) for c in cw.cells],
        "basepoint": cw.basepoint,
        "base": {a: v for a, v in cw.base.items() if cw.dim_of(a) > 0},
        "tree": list(cw.tree),
        "incidence": {a: [{"face": t.face, "sign": t.sign, "path": [list(s) for s in t.path]} for t in terms]
                      for a, terms in cw.incidence.items()},
        "attaching": {a: [list(s) for s in w] for a, w in cw.attaching.items()},
    }


def load_cw(path) -> CWData:
    data, _ = load_json(path, "cw.v1")
    return cw_from_dict(data)


def rep_from_dict(data: dict, cw: CWData | None = None) -> LocalSystem:
    if "cyclotomic" in data:
        cyc = data["cyclotomic"]
        _require(cyc, "p", "exponents")
        if cw is None:
            p = int(cyc["p"])
            exps = {e: int(a) % p for e, a in cyc["exponents"].items()}
            hol = {e: np.array([[np.exp(2j * np.pi * a / p)]]) for e, a in exps.items()}
            return LocalSystem(1, hol, (p, exps))
        return LocalSystem.character(cw, int(cyc["p"]), cyc["exponents"])
    _require(data, "edges")
    return LocalSystem.from_matrices({e: decode_matrix(M) for e, M in data["edges"].items()})


def load_rep(path, cw: CWData | None = None) -> LocalSystem:
    data, _ = load_json(path, "rep.v1")
    return rep_from_dict(data, cw)


def torus_rep_from_dict(data: dict, system: SuspensionSystem) -> RepOnMappingTorus:
    """Representation of a mapping torus from a ``rep.v1`` document.

    Accepted forms: ``{"monodromy": [re, im]}``, ``{"induced": {"p", "w", "u"}}``,
    ``{"t", "e1", "e2"}`` matrices, or ``{"sum": [..]}`` of these.
    """
    if "sum" in data:
        parts = [torus_rep_from_dict(d, system) for d in data["sum"]]
        out = parts[0]
        for p in parts[1:]:
            out = out.direct_sum(p)
        return out.validate(system)
    if "monodromy" in data:
        return RepOnMappingTorus.monodromy(decode_complex(data["monodromy"]))
    if "induced" in data:
        ind = data["induced"]
        return RepOnMappingTorus.induced(system, int(ind["p"]), tuple(ind.get("w", (1, 0))),
                                         decode_complex(ind.get("u", 1.0))).validate(system)
    _require(data, "t", "e1", "e2")
    return RepOnMappingTorus(decode_matrix(data["t"]), decode_matrix(data["e1"]),
                             decode_matrix(data["e2"])).validate(system)


def load_torus_rep(path, system: SuspensionSystem) -> RepOnMappingTorus:
    data, _ = load_json(path, "rep.v1")
    return torus_rep_from_dict(data, system)


def euler_from_dict(data: dict, cw: CWData) -> EulerChain:
    _require(data, "chain")
    e = EulerChain({str(k): int(v) for k, v in data["chain"].items() if int(v)},
                   {str(k): int(v) for k, v in data.get("divisor", {}).items() if int(v)})
    return e.check(cw)


def dump_euler(e: EulerChain) -> dict:
    return {"schema": "euler.v1", "chain": dict(e.chain), "divisor": dict(e.divisor)}


def load_euler(path, cw: CWData) -> EulerChain:
    data, _ = load_json(path, "euler.v1")
    return euler_from_dict(data, cw)


# --------------------------------------------------------------------------
# spectrum.v1
# --------------------------------------------------------------------------


def load_spectrum(path, rng_seed: int = 0):
    """Resonance spectrum from a ``spectrum.v1`` document.

    ``entries`` items are ``{"model": <file or inline resonance_model.v1>}``
    or ``{"zero": {"dims": [...], "seed": int, "nilpotent": bool}}``.
    ``zeta`` is ``{"kind": "synthetic", "poly": [...], "factors": [...]}``
    (resonance orders are appended automatically unless
    ``"include_resonances": false``) or ``{"kind": "suspension", "matrix": [...], "u": ...}``.
    """
    from .dyntorsion import ResonanceSpectrum, ResonantComplex, SuspensionZeta, SyntheticZeta, zero_resonance

    data, p = load_json(path, "spectrum.v1")
    _require(data, "entries", "zeta")
    entries = []
    for item in data["entries"]:
        if "model" in item:
            ref = item["model"]
            if isinstance(ref, str):
                mdata, _ = load_json(resolve_path(ref, p.parent), "resonance_model.v1")
            else:
                mdata = ref
            entries.append(ResonantComplex.from_model(resonance_model_from_dict(mdata)))
        elif "zero" in item:
            z = item["zero"]
            entries.append(zero_resonance(z["dims"], int(z.get("seed", 0)), bool(z.get("nilpotent", False))))
        else:
            raise SchemaError("spectrum entries need a 'model' or 'zero' field")
    q = int(data.get("q", entries[0].r if entries else 1))
    zd = data["zeta"]
    kind = zd.get("kind")
    if kind == "synthetic":
        factors = [(decode_complex(f["s0"]), int(f["order"])) for f in zd.get("factors", [])]
        if zd.get("include_resonances", True):
            factors = [(e.s0, e.order(q)) for e in entries] + factors
        zeta = SyntheticZeta(tuple(decode_complex(c) for c in zd.get("poly", [])), tuple(factors))
    elif kind == "suspension":
        zeta = SuspensionZeta(SuspensionSystem.from_entries([int(v) for v in zd["matrix"]]),
                              decode_complex(zd.get("u", 1.0)))
    else:
        raise SchemaError(f"unknown zeta kind {kind!r}")
    return ResonanceSpectrum.build(entries, zeta, q, rng=rng_seed)


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)
