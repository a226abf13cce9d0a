"""Command line front end: ``kdil <command> [file] [options]``.

Exit codes: 0 when every hard check passes, 1 on a verification failure,
2 on malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .covariant import covariance_report, covariant_construct, verify_rep
from .crossed import induce_crossed_maps, phi_map_identity_naive, phi_map_identity_table
from .errors import DimensionError, KdilError, SchemaError
from .fixtures import PRESETS, preset
from .hmodule import action_report
from .ksgns import conjugate_dilation, construct_ksgns, random_unitary, unitary_equivalence, verify_ksgns
from .maps import verify_alpha_cp, verify_phi_map
from .numkit import TolerancePolicy, opnorms
from .report import Report, emit_report
from .serialize import (
    dilation_from_dict,
    dilation_to_dict,
    dumps,
    encode_matrix,
    encode_table,
    error_to_dict,
    instance_to_dict,
    parse_instance,
)

EXIT_PASS, EXIT_FAIL, EXIT_MALFORMED = 0, 1, 2
COMMANDS = ("verify", "dilate", "equiv", "covariant", "crossed", "gen")


class _Malformed(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kdil", description="Krein-space dilations of alpha-CP maps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", nargs="?", help="instance JSON (a directory for verify)")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--preset", help="gen: one of " + ", ".join(list(PRESETS) + ["random"]))
    p.add_argument("--against", help="equiv: dilation dump to compare with (default: a seeded conjugate)")
    return p


def _tolerance(args, raw: dict | None = None) -> TolerancePolicy:
    over = {}
    if raw and isinstance(raw.get("tolerance"), dict):
        over.update({k: v for k, v in raw["tolerance"].items() if k in ("abs_tol", "rel_tol", "rank_cutoff")})
    if args.tol_abs is not None:
        over["abs_tol"] = args.tol_abs
    if args.tol_rel is not None:
        over["rel_tol"] = args.tol_rel
    try:
        return TolerancePolicy.from_env(**over)
    except (ValueError, TypeError) as exc:
        raise _Malformed(f"bad tolerance: {exc}") from exc


def _load(args, path: str | None = None):
    path = path or args.file
    if not path:
        raise _Malformed(f"{args.command} needs an instance file")
    try:
        raw = json.loads(Path(path).read_text(), parse_constant=lambda c: float("nan"))
    except OSError as exc:
        raise _Malformed(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _Malformed(f"{path}: invalid JSON: {exc}") from exc
    tol = _tolerance(args, raw if isinstance(raw, dict) else None)
    return parse_instance(raw, tol), tol


def _verify_report(inst, tol: TolerancePolicy) -> Report:
    rep = Report()
    rep.extend(verify_alpha_cp(inst.phi, inst.samples, tol))
    if inst.Phi is not None:
        rep.extend(verify_phi_map(inst.Phi, tol))
    if inst.action is not None:
        rep.extend(action_report(inst.action, tol))
    for key, r in (("u_", inst.u), ("uprime_", inst.uprime)):
        if r is None:
            continue
        for c in r.report.checks:
            # simultaneity is a property, not a requirement, for u
            if key == "u_" and c.name in ("rep_unitary", "rep_commutes_J"):
                continue
            rep.add(_renamed(c, key + c.name))
        rep.info[key + "simultaneous"] = bool(r.simultaneous)
    if inst.Phi is not None and inst.action is not None and inst.u is not None and inst.uprime is not None:
        rep.extend(covariance_report(inst.Phi, inst.action, inst.u, inst.uprime, tol))
    return rep


def _renamed(c, name):
    return replace(c, name=name)


def _error_out(exc: KdilError, **extra) -> dict:
    return {"status": "fail", **extra, "error": error_to_dict(exc)}


def _dilation(inst, tol):
    """Build and check the dilation; returns (payload, passed)."""
    pre = verify_alpha_cp(inst.phi, inst.samples, tol)
    if not pre.passed:
        return {"status": "fail", "stage": "alpha_cp", "report": pre.to_dict()}, False, None, None
    Phi = inst.phi_map(tol)
    dil = construct_ksgns(Phi, tol)
    rep = verify_ksgns(dil, Phi, tol)
    out = {"status": rep.status, **dilation_to_dict(dil, rep)}
    return out, rep.passed, dil, Phi


def cmd_verify(args) -> tuple[dict | str, int]:
    target = Path(args.file) if args.file else None
    if target is not None and target.is_dir():
        files = sorted(target.glob("*.json"))
        results, code = {}, EXIT_PASS
        for f in files:
            try:
                inst, tol = _load(args, str(f))
                rep = _verify_report(inst, tol)
                results[f.name] = rep.to_dict()
                code = max(code, EXIT_PASS if rep.passed else EXIT_FAIL)
            except (_Malformed, SchemaError, DimensionError) as exc:
                results[f.name] = {"status": "malformed", "error": str(exc)}
                code = EXIT_MALFORMED
        status = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_MALFORMED: "malformed"}[code]
        return {"status": status, "files": results}, code
    inst, tol = _load(args)
    rep = _verify_report(inst, tol)
    if args.format == "text":
        return emit_report(rep, "text"), EXIT_PASS if rep.passed else EXIT_FAIL
    return rep.to_dict(), EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_dilate(args):
    inst, tol = _load(args)
    out, ok, _, _ = _dilation(inst, tol)
    return out, EXIT_PASS if ok else EXIT_FAIL


def cmd_equiv(args):
    inst, tol = _load(args)
    out, ok, d1, Phi = _dilation(inst, tol)
    if not ok:
        return out, EXIT_FAIL
    if args.against:
        try:
            d2 = dilation_from_dict(json.loads(Path(args.against).read_text()))
        except (OSError, json.JSONDecodeError, TypeError, IndexError) as exc:
            raise _Malformed(f"{args.against}: {exc}") from exc
    else:
        rng = np.random.default_rng(args.seed)
        d2 = conjugate_dilation(d1, random_unitary(d1.K1.dim, rng), random_unitary(d1.K2.dim, rng))
    eq = unitary_equivalence(d1, d2, Phi, tol)
    return {"status": eq.report.status, "U1": encode_matrix(eq.U1), "U2": encode_matrix(eq.U2),
            "residuals": eq.report.residuals(), "report": eq.report.to_dict()}, EXIT_PASS


def _covariant(inst, tol):
    if inst.action is None or inst.u is None or inst.uprime is None:
        raise _Malformed("covariant data (group, beta or eta, u, uprime) missing")
    Phi = inst.phi_map(tol)
    u = verify_rep(inst.u.u, inst.group, inst.h1, tol=tol)
    up = verify_rep(inst.uprime.u, inst.group, Phi.h2, require_simultaneous=True, tol=tol)
    act_rep = action_report(inst.action, tol)
    act_rep.require()
    return Phi, u, up, covariant_construct(Phi, inst.action, u, up, tol)


def _covariant_dict(c) -> dict:
    out = {"status": c.report.status, **dilation_to_dict(c.base)}
    out["v"] = [encode_matrix(x) for x in c.v.u]
    out["v_prime"] = [encode_matrix(x) for x in c.v_prime.u]
    out["residuals"] = c.report.residuals()
    out["report"] = c.report.to_dict()
    return out


def cmd_covariant(args):
    inst, tol = _load(args)
    _, _, _, c = _covariant(inst, tol)
    return _covariant_dict(c), EXIT_PASS if c.report.passed else EXIT_FAIL


def cmd_crossed(args):
    inst, tol = _load(args)
    Phi, u, up, c = _covariant(inst, tol)
    maps = induce_crossed_maps(c, Phi, inst.action, u, up, tol)
    lhs, rhs = phi_map_identity_naive(Phi, u, maps.module)
    naive = opnorms(lhs - rhs)
    table = phi_map_identity_table(maps)
    maps.report.info["identity_residual_naive"] = float(naive.max())
    maps.report.info["identity_table_vs_naive"] = float(np.max(np.abs(naive - table)))
    out = {
        "status": maps.report.status,
        "crossed_dim": maps.algebra.dim,
        "phi_tilde": encode_table(maps.phi_tilde.values),
        "Phi_tilde": encode_table(maps.Phi_tilde.values),
        "pi_hat_phi": encode_table(maps.pi_hat_phi),
        "pi_hat_X": encode_table(maps.pi_hat_X),
        "residuals": maps.report.residuals(),
        "report": maps.report.to_dict(),
    }
    return out, EXIT_PASS if maps.report.passed else EXIT_FAIL


def cmd_gen(args):
    if args.preset:
        try:
            inst = preset(args.preset, args.seed)
        except KeyError as exc:
            raise _Malformed(str(exc.args[0])) from exc
        return inst, EXIT_PASS
    if args.file:
        inst, _ = _load(args)
        return instance_to_dict(inst), EXIT_PASS
    raise _Malformed("gen needs --preset or an instance file")


HANDLERS = {
    "verify": cmd_verify,
    "dilate": cmd_dilate,
    "equiv": cmd_equiv,
    "covariant": cmd_covariant,
    "crossed": cmd_crossed,
    "gen": cmd_gen,
}


def _render(payload, fmt: str) -> str:
    if isinstance(payload, str):
        return payload
    if fmt == "text" and isinstance(payload, dict) and "report" in payload:
        head = [f"status: {payload.get('status')}"]
        for key in ("K1", "K2"):
            if key in payload:
                head.append(f"dim {key}: {payload[key]['dim']}")
        rep = payload["report"]
        lines = [f"  [{c['status']:4}] {c['name']}  {c['residual']:.3e}  {c['anchor']}" for c in rep["checks"]]
        return "\n".join(head + lines) + "\n"
    return dumps(payload) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload, code = HANDLERS[args.command](args)
    except (_Malformed, SchemaError, DimensionError) as exc:
        print(f"kdil: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except KdilError as exc:
        payload, code = _error_out(exc), EXIT_FAIL
    text = _render(payload, args.format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
