"""Versioned JSON documents for tensors, gate programs and reports.

Complex arrays are nested lists with each entry an ``[re, im]`` pair.
Python's float ``repr`` is shortest-round-trip, so a dump/load cycle is
bit-exact at double precision.  Every document carries a ``schema`` tag
``"sptmbqc.<kind>/<version>"``; documents from a newer version are refused.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from . import cohomology as coh
from .errors import SchemaError
from .mbqc import GateProgram, MeasurementBasis
from .mps import MPSTensor

VERSIONS = {"tensor": 1, "program": 1, "report": 1, "config": 1}


def schema_tag(kind: str) -> str:
    return f"sptmbqc.{kind}/{VERSIONS[kind]}"


def check_schema(doc: dict, kind: str) -> int:
    tag = doc.get("schema") if isinstance(doc, dict) else None
    if not isinstance(tag, str) or not tag.startswith(f"sptmbqc.{kind}/"):
        raise SchemaError(f"expected a {kind} document, got schema tag {tag!r}")
    try:
        version = int(tag.rsplit("/", 1)[1])
    except ValueError:
        raise SchemaError(f"malformed schema tag {tag!r}") from None
    if version > VERSIONS[kind]:
        raise SchemaError(f"{kind} schema version {version} is newer than supported ({VERSIONS[kind]})")
    return version


def encode_complex(a) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def decode_complex(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (2,):
        raise SchemaError("complex entries must be [re, im] pairs")
    out = np.empty(arr.shape[:-1], dtype=complex)
    # assign parts separately so signed zeros survive
    out.real, out.imag = arr[..., 0], arr[..., 1]
    return out


def config_hash(obj: Any) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- tensors


def tensor_to_dict(t: MPSTensor) -> dict:
    doc: dict[str, Any] = {
        "schema": schema_tag("tensor"),
        "phys_dim": t.phys_dim,
        "bond_dim": t.bond_dim,
        "matrices": encode_complex(t.matrices),
        "names": list(t.names) if t.names else None,
    }
    if t.factorized:
        doc["factorization"] = {
            "logical_dim": t.logical_dim,
            "junk_dim": t.junk_dim,
            "logical": encode_complex(t.logical),
            "junk": encode_complex(t.junk),
        }
    o = t.ops
    if o is not None and o.characters is not None and o.irrep is not None:
        g = o.irrep.group
        doc["symmetry"] = {
            "group": list(g.factor_orders),
            "cocycle": {"numerators": o.irrep.cocycle.numerators.tolist(), "denominator": o.irrep.cocycle.denominator},
            "characters": [list(c.exponents) for c in o.characters],
            "elements": [list(h) for h in o.elements],
            "weyl_exponents": [list(e) for e in o.weyl_exponents] if o.weyl_exponents else None,
        }
    return doc


def tensor_from_dict(doc: dict) -> MPSTensor:
    check_schema(doc, "tensor")
    try:
        mats = decode_complex(doc["matrices"])
        fac = doc.get("factorization")
        sym = doc.get("symmetry")
        names = tuple(doc["names"]) if doc.get("names") else None
    except (KeyError, TypeError) as e:
        raise SchemaError(f"malformed tensor document: {e}") from None
    if fac is None:
        return MPSTensor(mats, mats.shape[1], 1, names=names)
    logical = decode_complex(fac["logical"])
    junk = decode_complex(fac["junk"])
    ops = None
    if sym is not None:
        g = coh.FiniteAbelianGroup(tuple(sym["group"]))
        cocycle = coh.Cocycle(g, np.array(sym["cocycle"]["numerators"]), int(sym["cocycle"]["denominator"]))
        irrep = coh.projective_irrep(g, cocycle)
        chars = tuple(coh.Character(g, tuple(c)) for c in sym["characters"])
        elems = tuple(tuple(h) for h in sym["elements"])
        labels = tuple(tuple(e) for e in sym["weyl_exponents"]) if sym.get("weyl_exponents") else None
        ops = coh.LogicalOps(int(fac["logical_dim"]), tuple(logical), labels, chars, elems, irrep)
    return MPSTensor(mats, int(fac["logical_dim"]), int(fac["junk_dim"]), logical, junk, ops, names)


def dump_tensor(t: MPSTensor, path) -> None:
    with open(path, "w") as f:
        json.dump(tensor_to_dict(t), f)


def load_tensor(path) -> MPSTensor:
    with open(path) as f:
        return tensor_from_dict(json.load(f))


# ---------------------------------------------------------------- programs


def program_to_dict(p: GateProgram) -> dict:
    bases, ms = [], []
    index: dict[int, int] = {}
    for b, m in p.steps:
        if id(b) not in index:
            index[id(b)] = len(bases)
            bases.append({"vectors": encode_complex(b.vectors), "labels": list(b.labels), "name": b.name})
        ms.append([index[id(b)], m])
    return {
        "schema": schema_tag("program"),
        "pair": list(p.pair),
        "phi": p.phi,
        "theta": p.theta,
        "N": p.N,
        "m": p.m,
        "dtheta": p.dtheta,
        "phys_phi": p.phys_phi,
        "epsilon": p.epsilon,
        "cost": p.cost,
        "bases": bases,
        "steps": ms,
    }


def program_from_dict(doc: dict) -> GateProgram:
    check_schema(doc, "program")
    try:
        bases = [MeasurementBasis(decode_complex(b["vectors"]), tuple(b["labels"]), b.get("name", ""))
                 for b in doc["bases"]]
        steps = tuple((bases[k], int(m)) for k, m in doc["steps"])
        return GateProgram(tuple(doc["pair"]), doc["phi"], doc["theta"], int(doc["N"]), int(doc["m"]),
                           doc["dtheta"], doc["phys_phi"], steps, doc.get("epsilon"))
    except (KeyError, TypeError, IndexError) as e:
        raise SchemaError(f"malformed program document: {e}") from None


def report(kind: str, body: dict, config: dict | None = None) -> dict:
    from . import __version__

    return {"schema": schema_tag("report"), "kind": kind, "version": __version__,
            "config_hash": config_hash(config or {}), **body}
