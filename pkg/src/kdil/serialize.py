"""JSON encoding of instances and results.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
lists.  :func:`parse_instance` validates a whole file and reports every
problem it finds at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import (
    FiniteCStarAlgebra,
    StarInvolutiveAutomorphism,
    alpha_from_expectation,
    inner_alpha_matrix,
    permutation_alpha_matrix,
    verify_automorphism,
)
from .covariant import FiniteGroup, PseudoUnitaryRep, rep_report
from .errors import DimensionError, KdilError, SchemaError
from .hmodule import FreeHilbertModule, ModuleAction, make_action
from .krein import KreinSpace, verify_fundamental_symmetry
from .maps import AlphaCPMap, PhiMap, phi_map_from_factorization
from .numkit import TolerancePolicy

# encoding -------------------------------------------------------------------------


def _real(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0.0 else x  # drop negative zeros


def encode_complex(z) -> list:
    z = complex(z)
    return [_real(z.real), _real(z.imag)]


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[encode_complex(z) for z in row] for row in m]


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v, dtype=complex).ravel()]


def encode_table(t) -> list:
    return [encode_matrix(m) for m in np.asarray(t, dtype=complex)]


def _is_leaf(obj) -> bool:
    if isinstance(obj, (list, tuple)):
        return all(not isinstance(o, dict) and _is_leaf(o) for o in obj)
    return not isinstance(obj, dict)


def dumps(obj: Any, indent: int = 0) -> str:
    """Stable JSON: objects one key per line, numeric arrays kept on one line."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if _is_leaf(obj):
            return json.dumps(_plain(obj), separators=(", ", ": "), allow_nan=False)
        if not obj:
            return "[]"
        items = [f"{pad}  {dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return json.dumps(_plain(obj), allow_nan=False)


def _plain(obj):
    if isinstance(obj, (list, tuple)):
        return [_plain(o) for o in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return _real(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# decoding -------------------------------------------------------------------------

def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise SchemaError(f"{where}: non-finite value {x!r}")
    return float(x)


def decode_complex(x, where: str = "value") -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise SchemaError(f"{where}: complex numbers are [re, im] pairs")
        return complex(_number(x[0], where), _number(x[1], where))
    return complex(_number(x, where), 0.0)


def decode_matrix(m, where: str = "matrix", square: bool = False, shape=None) -> np.ndarray:
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise SchemaError(f"{where}: expected a non-empty list of rows")
    width = len(m[0])
    if any(len(r) != width for r in m):
        raise DimensionError(f"{where}: ragged rows")
    out = np.array([[decode_complex(z, where) for z in row] for row in m], dtype=complex)
    if square and out.shape[0] != out.shape[1]:
        raise DimensionError(f"{where}: expected a square matrix, got {out.shape[0]}x{out.shape[1]}")
    if shape is not None and out.shape != tuple(shape):
        raise DimensionError(f"{where}: expected shape {tuple(shape)}, got {out.shape}")
    return out


def decode_vector(v, where: str = "vector", length: int | None = None) -> np.ndarray:
    if not isinstance(v, list):
        raise SchemaError(f"{where}: expected a list")
    out = np.array([decode_complex(z, where) for z in v], dtype=complex)
    if length is not None and out.shape != (length,):
        raise DimensionError(f"{where}: expected {length} entries, got {out.shape[0]}")
    return out


def _count(x, where: str, minimum: int = 1) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < minimum:
        raise SchemaError(f"{where}: expected an integer >= {minimum}, got {x!r}")
    return x


# instances ------------------------------------------------------------------------

@dataclass
class Instance:
    raw: dict
    algebra: FiniteCStarAlgebra
    alpha: StarInvolutiveAutomorphism
    h1: KreinSpace
    phi: AlphaCPMap
    module: FreeHilbertModule | None = None
    Phi: PhiMap | None = None
    h2_dim: int | None = None
    samples: list = field(default_factory=list)
    group: FiniteGroup | None = None
    action: ModuleAction | None = None
    u: PseudoUnitaryRep | None = None
    uprime: PseudoUnitaryRep | None = None
    tol: dict = field(default_factory=dict)
    seed: int | None = None

    def phi_map(self, tol=None) -> PhiMap:
        """The given Phi, or one factored from the module Gram when the file has none."""
        if self.Phi is not None:
            return self.Phi
        if self.module is None:
            raise SchemaError("instance has no module; a phi-map needs one")
        kw = {} if tol is None else {"tol": tol}
        return phi_map_from_factorization(self.phi, self.module, self.h2_dim, **kw)


def alpha_matrix_from_spec(spec, algebra: FiniteCStarAlgebra, where: str = "alpha") -> np.ndarray:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError(f"{where}: expected an object with a 'kind'")
    kind = spec["kind"]
    n = algebra.dim
    if kind == "identity":
        return np.eye(n, dtype=complex)
    if kind == "permutation":
        perm = spec.get("perm")
        if not isinstance(perm, list) or not all(isinstance(p, int) and not isinstance(p, bool) for p in perm):
            raise SchemaError(f"{where}.perm: expected a list of indices")
        if len(perm) != n:
            raise DimensionError(f"{where}.perm: expected {n} entries, got {len(perm)}")
        if sorted(perm) != list(range(n)):
            raise SchemaError(f"{where}.perm: not a permutation of 0..{n - 1}")
        return permutation_alpha_matrix(algebra, perm)
    if kind == "inner":
        us = spec.get("unitaries")
        if not isinstance(us, list) or len(us) != len(algebra.block_sizes):
            raise DimensionError(f"{where}.unitaries: need one unitary per block")
        mats = [decode_matrix(u, f"{where}.unitaries[{b}]", shape=(nb, nb))
                for b, (u, nb) in enumerate(zip(us, algebra.block_sizes))]
        return inner_alpha_matrix(algebra, mats)
    if kind == "matrix":
        return decode_matrix(spec.get("matrix"), f"{where}.matrix", shape=(n, n))
    if kind == "expectation":
        return decode_matrix(spec.get("P"), f"{where}.P", shape=(n, n))
    raise SchemaError(f"{where}.kind: unknown kind {kind!r}")


class _Collector:
    def __init__(self):
        self.errors: list[KdilError] = []

    def run(self, fn, *args, default=None):
        try:
            return fn(*args)
        except (SchemaError, DimensionError) as exc:
            self.errors.append(exc)
            return default

    def raise_if_any(self):
        if not self.errors:
            return
        msg = "; ".join(str(e) for e in self.errors)
        cls = DimensionError if all(isinstance(e, DimensionError) for e in self.errors) else SchemaError
        exc = cls(msg)
        exc.errors = list(self.errors)
        raise exc


def _get(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in d:
        raise SchemaError(f"{where}: missing key {key!r}")
    return d[key]


def parse_instance(source, tol: TolerancePolicy | None = None) -> Instance:
    """Validate and build an instance from a path, a JSON string, or a dict.

    Schema problems raise SchemaError, inconsistent sizes DimensionError.
    Mathematical failures (alpha not an automorphism, J not a symmetry) are
    also schema errors here: a file that fails them cannot be built at all.
    """
    if isinstance(source, dict):
        raw = source
    else:
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise SchemaError(f"cannot read {source}: {exc}") from exc
        try:
            raw = json.loads(text, parse_constant=lambda c: float("nan"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("instance must be a JSON object")
    tol = tol or TolerancePolicy()
    col = _Collector()

    alg_spec = col.run(_get, raw, "algebra", "instance")
    algebra = None
    if alg_spec is not None:
        blocks = col.run(_get, alg_spec, "blocks", "algebra")
        if blocks is not None:
            if not isinstance(blocks, list) or not blocks or not all(
                    isinstance(b, int) and not isinstance(b, bool) and b >= 1 for b in blocks):
                col.errors.append(SchemaError("algebra.blocks: expected a list of positive integers"))
            else:
                algebra = FiniteCStarAlgebra(blocks)
    alpha = None
    if algebra is not None:
        spec = alg_spec.get("alpha", {"kind": "identity"})
        mat = col.run(alpha_matrix_from_spec, spec, algebra, "algebra.alpha")
        if mat is not None:
            try:
                if spec.get("kind") == "expectation":
                    alpha = alpha_from_expectation(mat, algebra, tol)
                else:
                    alpha = verify_automorphism(mat, algebra, tol)
            except KdilError as exc:
                col.errors.append(SchemaError(f"algebra.alpha: {exc}"))

    h1 = None
    h1_spec = col.run(_get, raw, "h1", "instance")
    if h1_spec is not None:
        d = col.run(lambda: _count(_get(h1_spec, "dim", "h1"), "h1.dim"))
        if d is not None:
            if "J" in h1_spec:
                j = col.run(lambda: decode_matrix(h1_spec["J"], "h1.J", square=True))
                if j is not None and j.shape[0] != d:
                    col.errors.append(DimensionError(f"h1.J: expected {d}x{d}, got {j.shape[0]}x{j.shape[1]}"))
                elif j is not None:
                    try:
                        h1 = verify_fundamental_symmetry(j, tol)
                    except KdilError as exc:
                        col.errors.append(SchemaError(f"h1.J: {exc}"))
            else:
                h1 = KreinSpace.hilbert(d)

    h2_dim = None
    if "h2" in raw:
        h2_dim = col.run(lambda: _count(_get(raw["h2"], "dim", "h2"), "h2.dim"))

    module = None
    if "module" in raw and algebra is not None:
        k = col.run(lambda: _count(_get(raw["module"], "rank", "module"), "module.rank"))
        if k is not None:
            module = FreeHilbertModule(algebra, k)

    phi = None
    phi_spec = col.run(_get, raw, "phi", "instance")
    if phi_spec is not None and algebra is not None and h1 is not None:
        vals = col.run(lambda: _get(phi_spec, "values", "phi"))
        if vals is not None:
            if not isinstance(vals, list) or len(vals) != algebra.dim:
                col.errors.append(DimensionError(
                    f"phi.values: expected {algebra.dim} matrices, got {len(vals) if isinstance(vals, list) else vals!r}"))
            else:
                mats = [col.run(decode_matrix, v, f"phi.values[{i}]", False, (h1.dim, h1.dim))
                        for i, v in enumerate(vals)]
                if all(m is not None for m in mats) and alpha is not None:
                    phi = AlphaCPMap(algebra, alpha, h1, np.array(mats))

    Phi = None
    if "Phi" in raw:
        if module is None:
            col.errors.append(SchemaError("Phi given without a module"))
        elif phi is not None:
            vals = col.run(lambda: _get(raw["Phi"], "values", "Phi"))
            if vals is not None:
                if not isinstance(vals, list) or len(vals) != module.dim:
                    col.errors.append(DimensionError(f"Phi.values: expected {module.dim} matrices"))
                else:
                    d2 = h2_dim
                    mats = []
                    for m, v in enumerate(vals):
                        mat = col.run(decode_matrix, v, f"Phi.values[{m}]")
                        if mat is not None:
                            if d2 is None:
                                d2 = mat.shape[0]
                            if mat.shape != (d2, h1.dim):
                                col.errors.append(DimensionError(
                                    f"Phi.values[{m}]: expected shape {(d2, h1.dim)}, got {mat.shape}"))
                                mat = None
                        mats.append(mat)
                    if all(m is not None for m in mats):
                        h2_dim = d2
                        Phi = PhiMap(module, phi, KreinSpace.hilbert(d2), np.array(mats))

    samples = []
    for i, s in enumerate(raw.get("samples", []) or []):
        if algebra is not None:
            v = col.run(decode_vector, s, f"samples[{i}]", algebra.dim)
            if v is not None:
                samples.append(v)

    group = action = u = uprime = None
    if "group" in raw:
        table = col.run(lambda: _get(raw["group"], "table", "group"))
        if table is not None:
            try:
                group = FiniteGroup(table)
            except KdilError as exc:
                col.errors.append(SchemaError(f"group.table: {exc}"))
            except (ValueError, TypeError):
                col.errors.append(SchemaError("group.table: expected a square array of indices"))
    if group is not None and algebra is not None:
        n = group.order
        beta = None
        if "beta" in raw:
            specs = raw["beta"]
            if not isinstance(specs, list) or len(specs) != n:
                col.errors.append(DimensionError(f"beta: expected {n} entries"))
            else:
                beta = [col.run(alpha_matrix_from_spec, b, algebra, f"beta[{t}]") for t, b in enumerate(specs)]
                if any(b is None for b in beta):
                    beta = None
        eta = None
        if module is not None:
            if "eta" in raw:
                specs = raw["eta"]
                if not isinstance(specs, list) or len(specs) != n:
                    col.errors.append(DimensionError(f"eta: expected {n} matrices"))
                else:
                    eta = [col.run(decode_matrix, e, f"eta[{t}]", True, (module.dim, module.dim))
                           for t, e in enumerate(specs)]
                    if any(e is None for e in eta):
                        eta = None
            elif beta is not None:
                eta = [module.componentwise(b) for b in beta]
            if eta is not None:
                try:
                    action = make_action(group, module, eta, beta)
                except KdilError as exc:
                    col.errors.append(SchemaError(f"eta/beta: {exc}"))
        if h1 is not None:
            u = col.run(_parse_rep, raw, "u", group, h1, tol)
        if h2_dim is not None:
            uprime = col.run(_parse_rep, raw, "uprime", group, KreinSpace.hilbert(h2_dim), tol)

    tol_over = {}
    if "tolerance" in raw:
        t = raw["tolerance"]
        if not isinstance(t, dict):
            col.errors.append(SchemaError("tolerance: expected an object"))
        else:
            for key in ("abs_tol", "rel_tol", "rank_cutoff"):
                if key in t:
                    v = col.run(_number, t[key], f"tolerance.{key}")
                    if v is not None:
                        if not 0 < v < 1:
                            col.errors.append(SchemaError(f"tolerance.{key}: must lie in (0, 1)"))
                        else:
                            tol_over[key] = v
    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        col.errors.append(SchemaError("seed: expected an integer"))
        seed = None

    col.raise_if_any()
    return Instance(raw, algebra, alpha, h1, phi, module, Phi, h2_dim, samples, group, action, u, uprime,
                    tol_over, seed)


def _parse_rep(raw, key, group, space, tol):
    if key not in raw:
        return None
    mats = raw[key]
    if not isinstance(mats, list) or len(mats) != group.order:
        raise DimensionError(f"{key}: expected {group.order} matrices")
    us = [decode_matrix(m, f"{key}[{t}]", square=True, shape=(space.dim, space.dim)) for t, m in enumerate(mats)]
    rep = rep_report(us, group, space, tol)
    return PseudoUnitaryRep(group, space, tuple(us),
                            rep["rep_unitary"].passed and rep["rep_commutes_J"].passed, rep)


def _canonical_alpha_spec(spec: dict) -> dict:
    kind = spec["kind"]
    if kind == "permutation":
        return {"kind": kind, "perm": [int(i) for i in spec["perm"]]}
    if kind == "inner":
        return {"kind": kind, "unitaries": [encode_matrix(decode_matrix(u)) for u in spec["unitaries"]]}
    if kind == "matrix":
        return {"kind": kind, "matrix": encode_matrix(decode_matrix(spec["matrix"]))}
    if kind == "expectation":
        return {"kind": kind, "P": encode_matrix(decode_matrix(spec["P"]))}
    return {"kind": kind}


def instance_to_dict(inst: Instance) -> dict:
    """Canonical dict for a parsed instance; ``dumps`` of it is a fixed point of parse."""
    raw = inst.raw
    out: dict = {"algebra": {"blocks": list(inst.algebra.block_sizes),
                             "alpha": _canonical_alpha_spec(raw["algebra"].get("alpha", {"kind": "identity"}))}}
    out["h1"] = {"dim": inst.h1.dim}
    if "J" in raw["h1"]:
        out["h1"]["J"] = encode_matrix(inst.h1.J)
    if inst.h2_dim is not None:
        out["h2"] = {"dim": inst.h2_dim}
    if inst.module is not None:
        out["module"] = {"rank": inst.module.rank}
    out["phi"] = {"values": encode_table(inst.phi.values)}
    if inst.Phi is not None:
        out["Phi"] = {"values": encode_table(inst.Phi.values)}
    if inst.samples:
        out["samples"] = [encode_vector(s) for s in inst.samples]
    if inst.group is not None:
        out["group"] = {"table": [list(r) for r in inst.group.table]}
        if "beta" in raw:
            out["beta"] = [_canonical_alpha_spec(b) for b in raw["beta"]]
        if "eta" in raw and inst.action is not None:
            out["eta"] = [encode_matrix(e) for e in inst.action.eta]
        for key, rep in (("u", inst.u), ("uprime", inst.uprime)):
            if rep is not None:
                out[key] = [encode_matrix(x) for x in rep.u]
    if inst.tol:
        out["tolerance"] = {k: inst.tol[k] for k in ("abs_tol", "rel_tol", "rank_cutoff") if k in inst.tol}
    if inst.seed is not None:
        out["seed"] = inst.seed
    return out


# results --------------------------------------------------------------------------

def dilation_to_dict(dil, report=None) -> dict:
    out = {
        "K1": {"dim": dil.K1.dim, "J3": encode_matrix(dil.K1.J)},
        "K2": {"dim": dil.K2.dim},
        "pi_phi": encode_table(dil.pi_phi),
        "pi_X": encode_table(dil.pi_X),
        "V": encode_matrix(dil.V),
        "W": encode_matrix(dil.W),
        "minimal": bool(dil.minimal),
    }
    if report is not None:
        out["residuals"] = {k: _plain(v) for k, v in report.residuals().items()}
        out["report"] = report.to_dict()
    return out


def dilation_from_dict(d: dict):
    from .ksgns import KsgnsDilation

    try:
        K1 = verify_fundamental_symmetry(decode_matrix(d["K1"]["J3"], "K1.J3", square=True))
        s = _count(d["K2"]["dim"], "K2.dim", 0)
        pi_phi = np.array([decode_matrix(m, "pi_phi") for m in d["pi_phi"]])
        pi_x = np.array([decode_matrix(m, "pi_X") for m in d["pi_X"]]) if s else \
            np.zeros((len(d["pi_X"]), 0, K1.dim), complex)
        V = decode_matrix(d["V"], "V")
        W = decode_matrix(d["W"], "W") if s else np.zeros((0, len(d["W"][0]) if d["W"] else 0), complex)
    except KeyError as exc:
        raise SchemaError(f"dilation dump: missing key {exc}") from exc
    return KsgnsDilation(None, K1, KreinSpace.hilbert(s), pi_phi, pi_x, V, W, bool(d.get("minimal", True)))


def error_to_dict(exc: KdilError) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    if exc.residual is not None:
        out["residual"] = _plain(float(exc.residual))
    if exc.witness is not None:
        out["witness"] = _plain(exc.witness) if not isinstance(exc.witness, str) else exc.witness
    if hasattr(exc, "axiom"):
        out["axiom"] = exc.axiom
    return out

