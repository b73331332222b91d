"""Command-line experiment runner.

Every subcommand reads an optional JSON config, merges it over built-in
defaults, applies ``--seed``/``--jobs``/``--tol`` overrides, runs, and
writes ``<name>.csv`` plus a ``<name>.json`` summary into ``--out``.

Exit codes: 0 success, 2 configuration error (the message names the
offending key), 3 numerical failure or failed acceptance check.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from . import suite as suite_mod
from .bergman import (
    BergmanFunction,
    PreconditionError,
    Polystrip,
    bergman_norm_report,
    inclusion_verify,
    interior_sup_bound,
    ode_closedness_demo,
    real_defect,
)
from .catalog import Profile
from .continuity import probe_corpus, run_corpus
from .flow import AdmissibilityError, FlowError, det_jacobian_min, field_from_config, flow_residual, solve_flow
from .group import (
    DiffeoRep,
    InversionError,
    RangeError,
    SegmentError,
    compose,
    invert,
    is_member,
    polygon_generator,
    refine_polygon,
)
from .jets import MajorantOverflowError, childress_check, fit_majorant_constants
from .sequences import WeightSequence, quasianalyticity_diagnostic, regularity_report
from .spaces import GridSpec, SampledFunction, evaluate_seminorm

NUMERICAL_ERRORS = (
    FlowError,
    AdmissibilityError,
    InversionError,
    RangeError,
    SegmentError,
    PreconditionError,
    MajorantOverflowError,
    ArithmeticError,
    np.linalg.LinAlgError,
    ValueError,
)


class ConfigError(Exception):
    """Invalid configuration; ``path`` locates the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- schema ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 0}
_P = {"anyOf": [{"type": "number", "minimum": 1}, {"enum": ["inf"]}]}
_GRID = {
    "type": "object",
    "properties": {
        "d": {"type": "integer", "minimum": 1},
        "extent": _POS,
        "n": {"type": "integer", "minimum": 2},
        "quadrature": {"enum": ["trapezoid", "simpson", "gauss-legendre"]},
    },
    "additionalProperties": False,
}
_PROFILE = {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}}
_FIELD = {"type": "object"}
_SEQ = {
    "anyOf": [
        {"type": "array", "items": _POS, "minItems": 1},
        {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "generator": {"enum": ["constant", "gevrey", "custom"]},
                "s": _NUM,
                "N": _INT,
                "values": {"type": "array", "items": _POS},
            },
            "additionalProperties": False,
        },
    ]
}
_NAMED_PROFILE = {
    "type": "object",
    "required": ["profile"],
    "properties": {"name": {"type": "string"}, "profile": _PROFILE, "order": _INT},
    "additionalProperties": False,
}

COMMON = {
    "subcommand": {"type": "string"},
    "seed": _INT,
    "jobs": {"type": "integer", "minimum": 1},
    "tol": {"type": "object", "additionalProperties": _POS},
}

SCHEMAS = {
    "jets": {
        "compose": {
            "type": "object",
            "properties": {
                "pairs": _INT,
                "d_max": {"type": "integer", "minimum": 1},
                "degree_max": {"type": "integer", "minimum": 1},
                "K_max": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "sequences": {"type": "array", "items": _SEQ},
        "childress_n": {"type": "integer", "minimum": 1},
        "majorant": {
            "type": "object",
            "properties": {"A": _POS, "m": {"type": "integer", "minimum": 1},
                           "n": {"type": "integer", "minimum": 1}, "max_order": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
    },
    "sequences": {"sequences": {"type": "array", "items": _SEQ}},
    "norms": {
        "grid": _GRID,
        "functions": {"type": "array", "items": _NAMED_PROFILE},
        "seminorms": {"type": "array", "items": {"type": "object", "required": ["family"]}},
    },
    "flow": {
        "grid": _GRID,
        "order": _INT,
        "times": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "fields": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["field"],
                "properties": {"name": {"type": "string"}, "field": _FIELD},
                "additionalProperties": False,
            },
        },
        "solver": {
            "type": "object",
            "properties": {
                "rho": {"anyOf": [_POS, {"enum": ["auto"]}]},
                "K_max": _INT,
                "n_t": {"type": "integer", "minimum": 2},
                "max_iter": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "group": {
        "action": {"enum": ["verify", "invert", "generate"]},
        "grid": _GRID,
        "order": {"type": "integer", "minimum": 1},
        "margin": _POS,
        "diffeos": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"name": {"type": "string"}, "profile": _PROFILE, "json": {"type": "string"}},
                "additionalProperties": False,
            },
        },
    },
    "continuity": {
        "probes": {"anyOf": [{"type": "null"}, {"type": "array", "items": {"type": "string"}}]},
        "n_times": {"type": "integer", "minimum": 2},
    },
    "bergman": {
        "action": {"enum": ["norms", "verify-inclusion", "ode-demo"]},
        "r": _POS,
        "p": _P,
        "sigma": _POS,
        "rho": _POS,
        "K_max": {"type": "integer", "minimum": 1},
        "K": {"type": "integer", "minimum": 1},
        "ny": {"type": "integer", "minimum": 2},
        "x_grid": _GRID,
        "functions": {"type": "array", "items": _PROFILE},
        "field": _FIELD,
        "levels": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    },
    "suite": {"criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 11}}},
}


def schema_for(sub: str) -> dict:
    return {"type": "object", "properties": {**COMMON, **SCHEMAS[sub]}, "additionalProperties": False}


DEFAULTS = {
    "jets": {
        "compose": {"pairs": 50, "d_max": 3, "degree_max": 5, "K_max": 6},
        "sequences": [{"name": "one", "generator": "constant"}, {"name": "gevrey1", "generator": "gevrey", "s": 1.0}],
        "childress_n": 8,
        "majorant": {"A": 1.0, "m": 1, "n": 1, "max_order": 6},
        "tol": {"fdb": 1e-10},
    },
    "sequences": {
        "sequences": [
            {"name": "one", "generator": "constant"},
            {"name": "gevrey1", "generator": "gevrey", "s": 1.0},
            {"name": "gevrey2", "generator": "gevrey", "s": 2.0},
        ],
    },
    "norms": {
        "grid": {"d": 1, "extent": 8.0, "n": 257, "quadrature": "simpson"},
        "functions": [
            {"name": "gauss", "profile": {"kind": "gaussian"}, "order": 4},
            {"name": "x_gauss", "profile": {"kind": "x_gauss"}, "order": 4},
        ],
        "seminorms": [
            {"family": "Wkp", "k": 0, "p": 2},
            {"family": "Wkp", "k": 2, "p": 2},
            {"family": "Wkp", "k": 1, "p": "inf"},
            {"family": "BM", "sigma": 1.0, "K_max": 4},
            {"family": "WMp", "sigma": 1.0, "p": 2, "K_max": 4},
            {"family": "GelfandShilov", "sigma": 1.0, "p_max": 3, "K_max": 4},
        ],
    },
    "flow": {
        "grid": {"d": 1, "extent": 3.0, "n": 21, "quadrature": "trapezoid"},
        "order": 1,
        "times": [0.0, 0.25, 0.5, 0.75, 1.0],
        "fields": [{"name": "sin", "field": {"kind": "separable", "profile": {"kind": "sin"}}}],
        "solver": {"rho": "auto", "K_max": 4, "n_t": 12},
        "tol": {"flow": 1e-10},
    },
    "group": {
        "action": "verify",
        "grid": {"d": 1, "extent": 6.0, "n": 121, "quadrature": "simpson"},
        "order": 2,
        "margin": 1e-8,
        "diffeos": [
            {"name": "gauss", "profile": {"kind": "gaussian", "amplitude": 0.3}},
            {"name": "tanh", "profile": {"kind": "tanh", "amplitude": 0.5}},
        ],
        "tol": {"group": 1e-8},
    },
    "continuity": {"probes": None, "n_times": 16},
    "bergman": {
        "action": "norms",
        "r": 1.0,
        "p": 2,
        "sigma": 0.5,
        "rho": 2.0,
        "K_max": 60,
        "K": 12,
        "ny": 16,
        "functions": [{"kind": "gaussian", "width": w} for w in (0.6, 0.8, 1.0, 1.4, 2.0)],
        "field": {"kind": "separable", "profile": {"kind": "sin_gauss", "amplitude": 0.3},
                  "time": {"kind": "cosine", "c0": 1.0, "c1": 0.5}},
        "levels": [2, 4, 8, 16],
        "tol": {"tail": 1e-10},
    },
    "suite": {"criteria": list(range(1, 12))},
}


def _key_path(err: jsonschema.ValidationError) -> str:
    parts = ["$"] + [f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path]
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            parts.append(f".{extra[0]}")
    return "".join(parts)


def validate(sub: str, cfg: dict) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema_for(sub)).iter_errors(cfg),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise ConfigError(_key_path(e), e.message)
    if cfg.get("subcommand", sub) != sub:
        raise ConfigError("$.subcommand", f"config is for {cfg['subcommand']!r}, not {sub!r}")


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "tol":
            out[k] = _deep_merge(out[k], v)
        elif k == "tol" and isinstance(v, dict):
            out[k] = {**out.get(k, {}), **v}
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_tol(items: list[str] | None) -> dict:
    """``--tol 1e-9`` sets ``default``; ``--tol name=1e-9`` sets one named tolerance."""
    out = {}
    for item in items or []:
        name, _, value = item.rpartition("=")
        try:
            out[name or "default"] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {item}", "expected NUMBER or NAME=NUMBER") from None
        if not out[name or "default"] > 0:
            raise ConfigError(f"--tol {item}", "tolerances must be positive")
    return out


def resolve_config(sub: str, file_cfg: dict | None, seed: int | None, jobs: int | None,
                   tol: dict, action: str | None = None) -> dict:
    file_cfg = file_cfg or {}
    validate(sub, file_cfg)
    cfg = _deep_merge(DEFAULTS[sub], file_cfg)
    cfg.setdefault("seed", 0)
    cfg.setdefault("jobs", 1)
    if seed is not None:
        cfg["seed"] = seed
    if jobs is not None:
        cfg["jobs"] = jobs
    if action is not None:
        cfg["action"] = action
    if tol:
        cfg["tol"] = {**cfg.get("tol", {}), **tol}
    cfg.pop("subcommand", None)
    validate(sub, cfg)
    return cfg


def config_hash(sub: str, cfg: dict) -> str:
    blob = json.dumps({"subcommand": sub, **cfg}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _tol(cfg: dict, name: str, fallback: float) -> float:
    t = cfg.get("tol", {})
    return float(t.get(name, t.get("default", fallback)))


def _p(value) -> float:
    return math.inf if value == "inf" else float(value)


def _grid(cfg: dict, key: str = "grid") -> GridSpec:
    try:
        return GridSpec.from_config(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"$.{key}", str(exc)) from None


def _profile(spec: dict, path: str, d: int | None = None) -> Profile:
    spec = dict(spec)
    if d is not None:
        spec.setdefault("d", d)
    try:
        return Profile.from_config(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"bad profile: {exc}") from None


def _sequence(spec, path: str) -> tuple[str, WeightSequence]:
    try:
        if isinstance(spec, list):
            return "custom", WeightSequence.from_config(spec)
        spec = dict(spec)
        name = spec.pop("name", None)
        M = WeightSequence.from_config(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"bad sequence: {exc}") from None
    return name or f"{M.generator}{json.dumps(M.params, sort_keys=True)}", M


def _field(spec: dict, path: str):
    try:
        return field_from_config(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"bad field: {exc}") from None


# -- runners -------------------------------------------------------------------------
# Each returns (rows, summary, meta); meta is appended to every row.


def run_jets(cfg: dict):
    c = cfg["compose"]
    tol = _tol(cfg, "fdb", 1e-10)
    seqs = [_sequence(s, f"$.sequences[{i}]") for i, s in enumerate(cfg["sequences"])]
    rows = []
    cases = suite_mod.random_polynomial_pairs(c["pairs"], cfg["seed"], c["d_max"], c["degree_max"], c["K_max"])
    for i, (g, f, x0, K) in enumerate(cases):
        err = suite_mod.fdb_pair_error(g, f, x0, K)
        rows.append({"check": "compose", "case": i, "sequence": "", "d": len(x0), "m": len(g), "K": K,
                     "value": err, "holds": err <= tol})
    n_max = cfg["childress_n"]
    maj = cfg["majorant"]
    for name, M in seqs:
        for n in range(1, min(n_max, M.N) + 1):
            res = childress_check(M, n)
            rows.append({"check": "childress", "case": n, "sequence": name, "value": res.lhs, "holds": res.holds})
        fit = fit_majorant_constants(M, maj["A"], maj["m"], maj["n"], min(maj["max_order"], M.N))
        rows.append({"check": "majorant_B", "case": fit.max_order, "sequence": name, "value": fit.B, "holds": True})
        rows.append({"check": "majorant_C", "case": fit.max_order, "sequence": name, "value": fit.C, "holds": True})
    summary = {"all_hold": all(r["holds"] for r in rows)}
    if any(r["check"] == "compose" for r in rows):
        summary["max_compose_err"] = max(r["value"] for r in rows if r["check"] == "compose")
    return rows, summary, {"K_max": c["K_max"], "grid": "", "tol": tol}


def run_sequences(cfg: dict):
    rows = []
    for i, spec in enumerate(cfg["sequences"]):
        name, M = _sequence(spec, f"$.sequences[{i}]")
        rep = regularity_report(M)
        qa = quasianalyticity_diagnostic(M)
        rows.append({
            "sequence": name, "N": M.N, "regular": rep.regular, "strictly_regular": rep.strictly_regular,
            "normalized": rep.normalized, "nondecreasing": rep.nondecreasing, "log_convex": rep.log_convex,
            "log_convex_violation": rep.log_convex_violation, "moderate_growth": rep.moderate_growth,
            "derivation_closed": rep.derivation_closed, "quasianalytic_trend": rep.quasianalytic_trend,
            "partial_sum": qa.partial_sum, "tail_exponent": qa.tail_exponent,
        })
    K = max((r["N"] for r in rows), default=0)
    return rows, {"sequences": len(rows)}, {"K_max": K, "grid": "", "tol": ""}


def run_norms(cfg: dict):
    grid = _grid(cfg)
    rows = []
    K_max = 0
    for i, fn in enumerate(cfg["functions"]):
        prof = _profile(fn["profile"], f"$.functions[{i}].profile", grid.d)
        order = fn.get("order", 4)
        f = SampledFunction.from_closed_form(grid, prof, order)
        for j, sn in enumerate(cfg["seminorms"]):
            params = {k: v for k, v in sn.items() if k != "family"}
            try:
                rep = evaluate_seminorm(f, sn["family"], **params)
            except KeyError as exc:
                raise ConfigError(f"$.seminorms[{j}]", f"missing parameter {exc}") from None
            K_max = max(K_max, rep.K_max or 0)
            row = {"function": fn.get("name", prof.kind), **rep.row()}
            row.pop("grid")
            row["K"] = row.pop("K_max")
            rows.append(row)
    return rows, {"evaluations": len(rows)}, {"K_max": K_max, "grid": json.dumps(grid.to_config()), "tol": ""}


def _flow_one(args):
    name, fcfg, grid_cfg, order, times, solver = args
    grid = GridSpec.from_config(grid_cfg)
    traj = solve_flow(field_from_config(fcfg), grid.points(), order, **solver)
    rows = [{"field": name, **r} for r in traj.rows(times)]
    info = {"field": name, "windows": len(traj.windows), "min_det": det_jacobian_min(traj),
            "residual": flow_residual(traj)}
    return rows, info


def run_flow(cfg: dict):
    grid = _grid(cfg)
    solver = dict(cfg["solver"])
    if solver.get("rho", "auto") != "auto":
        solver["rho"] = float(solver["rho"])
    solver["tol"] = _tol(cfg, "flow", 1e-10)
    jobs = []
    for i, item in enumerate(cfg["fields"]):
        _field(item["field"], f"$.fields[{i}].field")
        jobs.append((item.get("name", f"field{i}"), item["field"], grid.to_config(), cfg["order"],
                     cfg["times"], solver))
    results = _pmap(_flow_one, jobs, cfg["jobs"])
    rows = [r for rs, _ in results for r in rs]
    infos = [info for _, info in results]
    summary = {"fields": infos, "min_det": min((i["min_det"] for i in infos), default=None)}
    return rows, summary, {"K_max": solver.get("K_max", 4), "grid": json.dumps(grid.to_config()),
                           "tol": solver["tol"]}


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _diffeos(cfg: dict, grid: GridSpec) -> list[tuple[str, DiffeoRep]]:
    out = []
    for i, item in enumerate(cfg["diffeos"]):
        path = f"$.diffeos[{i}]"
        if ("profile" in item) == ("json" in item):
            raise ConfigError(path, "give exactly one of 'profile' or 'json'")
        if "json" in item:
            try:
                P = DiffeoRep.from_json(Path(item["json"]).read_text())
            except OSError as exc:
                raise ConfigError(f"{path}.json", str(exc)) from None
            out.append((item.get("name", Path(item["json"]).stem), P))
        else:
            prof = _profile(item["profile"], f"{path}.profile", grid.d)
            out.append((item.get("name", prof.kind), DiffeoRep.from_profile(grid, prof, cfg["order"])))
    return out


def run_group(cfg: dict, out_dir: Path | None = None):
    grid = _grid(cfg)
    action = cfg["action"]
    tol = _tol(cfg, "group", 1e-8)
    rows = []
    for name, P in _diffeos(cfg, grid):
        mem = is_member(P, cfg["margin"])
        row = {"diffeo": name, "member": mem.member, "det_min": mem.det_min,
               "argmin": json.dumps(mem.argmin), "dphi_sup": P.dphi_sup()}
        if action == "invert":
            inv = invert(P, cfg["margin"])
            err = float(np.max(np.abs(compose(inv, P).phi.values)))
            row.update(roundtrip_err=err, holds=err <= tol)
            if out_dir is not None:
                (out_dir / f"{name}.inverse.json").write_text(inv.to_json())
        elif action == "generate":
            verts = [DiffeoRep.identity(P.grid, P.order)] + refine_polygon(P)
            pts = P.points
            reached = solve_flow(polygon_generator(verts), pts, 0).flow(1.0)
            err = float(np.max(np.abs(reached - P(pts))))
            row.update(vertices=len(verts), flow_err=err, holds=err <= tol)
        else:
            row["holds"] = mem.member
        rows.append(row)
    summary = {"action": action, "all_hold": all(r["holds"] for r in rows)}
    return rows, summary, {"K_max": cfg["order"], "grid": json.dumps(grid.to_config()), "tol": tol}


def run_continuity(cfg: dict):
    probes = probe_corpus(cfg["seed"])
    if cfg["probes"] is not None:
        known = {p.name for p in probes}
        for i, n in enumerate(cfg["probes"]):
            if n not in known:
                raise ConfigError(f"$.probes[{i}]", f"unknown probe {n!r}; known: {sorted(known)}")
        probes = [p for p in probes if p.name in set(cfg["probes"])]
    results = run_corpus(probes, jobs=cfg["jobs"], n_times=cfg["n_times"])
    rows = []
    for pr, res in zip(probes, results):
        row = res.row()
        row["grid"] = json.dumps(pr.grid.to_config())
        rows.append(row)
    failed = [r["probe"] for r in rows if not r["holds"]]
    summary = {"probes": len(rows), "failed": failed}
    K = max((r["k"] for r in rows), default=0)
    return rows, summary, {"K_max": K + 1, "tol": ""}


def run_bergman(cfg: dict):
    action = cfg["action"]
    r, p = float(cfg["r"]), _p(cfg["p"])
    x_grid = _grid(cfg, "x_grid") if "x_grid" in cfg else None
    profiles = [_profile(s, f"$.functions[{i}]") for i, s in enumerate(cfg["functions"])]
    tol = _tol(cfg, "tail", 1e-10)
    if action == "norms":
        rows = []
        for prof in profiles:
            strip = Polystrip(prof.d, r, replace(x_grid, d=prof.d) if x_grid else None, cfg["ny"])
            try:
                F = BergmanFunction.from_profile(strip, prof)
            except ValueError as exc:
                raise ConfigError("$.functions", str(exc)) from None
            rep = bergman_norm_report(F, p, tol=tol)
            inner = interior_sup_bound(F, r / 2, p)
            rows.append({"function": _tag(prof), "r": r, "p": cfg["p"], "norm": rep.value, "edge": rep.edge,
                         "tail_warning": rep.tail_warning, "real_defect": real_defect(F),
                         "sup_inner": inner.sup_inner, "inner_ratio": inner.ratio,
                         "mean_value_C": inner.C_mean_value})
            grid_meta = json.dumps(strip.x.to_config())
        summary = {"functions": len(rows), "tail_warnings": sum(r_["tail_warning"] for r_ in rows)}
        meta = {"K_max": "", "grid": grid_meta if rows else "", "tol": tol}
    elif action == "verify-inclusion":
        strip = Polystrip(1, r, x_grid, cfg["ny"]) if x_grid else None
        rep = inclusion_verify(profiles, r, p, float(cfg["sigma"]), float(cfg["rho"]), cfg["K_max"], strip)
        rows = [row.row() for row in rep.rows]
        summary = {"C_S": rep.C_S, "C_R": rep.C_R, "max_ratio_S": rep.max_ratio_S,
                   "max_ratio_R": rep.max_ratio_R, "bounded": rep.bounded}
        meta = {"K_max": cfg["K_max"], "grid": json.dumps((strip or Polystrip(1, r)).x.to_config()), "tol": ""}
    else:
        u = _field(cfg["field"], "$.field")
        kw = {"grid": x_grid} if x_grid else {}
        rep = ode_closedness_demo(u, r, p, sigma=float(cfg["sigma"]), K=cfg["K"], levels=tuple(cfg["levels"]),
                                  ny=min(cfg["ny"], 8), **kw)
        rows = [{"t": row.t, "norm": row.norm, "tail": row.tail} for row in rep.rows]
        summary = {"r_prime": rep.r_prime, "finite": rep.finite, "shrinking": rep.shrinking,
                   "max_tail": rep.max_tail, "steps": [[n, v] for n, v in rep.steps]}
        meta = {"K_max": cfg["K"], "grid": json.dumps((x_grid or GridSpec(1, 6.0, 61, "gauss-legendre")).to_config()),
                "tol": ""}
    summary["action"] = action
    return rows, summary, meta


def _tag(prof: Profile) -> str:
    extra = ",".join(f"{k}={v}" for k, v in sorted(prof.params.items()))
    return f"{prof.kind}({extra})" if extra else prof.kind


def run_suite(cfg: dict, log=None):
    checks = suite_mod.run_suite(cfg["criteria"], seed=cfg["seed"], jobs=cfg["jobs"], tol=cfg.get("tol"), log=log)
    rows = [c.row() for c in checks]
    failed = [c.criterion for c in checks if not c.passed]
    summary = {"criteria": len(rows), "failed": failed}
    if failed:
        summary["status"] = "failed"
    return rows, summary, {"K_max": "", "grid": "", "tol": json.dumps(cfg.get("tol", {}), sort_keys=True)}


# -- output ----------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, sort_keys=True)
    return v


def _json_safe(v):
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_csv(rows: list[dict], meta: dict) -> str:
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    cols += [k for k in ("K_max", "grid", "tol") if k not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        full = {**{k: v for k, v in meta.items() if k not in r}, **r}
        w.writerow({k: _cell(full.get(k, "")) for k in cols})
    return buf.getvalue()


def write_reports(out: Path, name: str, rows: list[dict], summary: dict, meta: dict, cfg: dict, sub: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.csv").write_text(render_csv(rows, meta))
    doc = {
        "subcommand": sub,
        "config_hash": config_hash(sub, cfg),
        "config": cfg,
        "seed": cfg["seed"],
        "rows": len(rows),
        "meta": meta,
        "summary": summary,
    }
    (out / f"{name}.json").write_text(json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n")


RUNNERS = {
    "jets": run_jets,
    "sequences": run_sequences,
    "norms": run_norms,
    "flow": run_flow,
    "group": run_group,
    "continuity": run_continuity,
    "bergman": run_bergman,
    "suite": run_suite,
}

ACTIONS = {"group": ["verify", "invert", "generate"], "bergman": ["norms", "verify-inclusion", "ode-demo"]}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jetflow", description=__doc__.splitlines()[0])
    subs = ap.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        sp = subs.add_parser(name)
        if name in ACTIONS:
            sp.add_argument("action", nargs="?", choices=ACTIONS[name])
        sp.add_argument("--config", type=Path, help="JSON config merged over the defaults")
        sp.add_argument("--out", type=Path, default=Path("reports"), help="report directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--tol", action="append", metavar="[NAME=]VALUE",
                        help="override a tolerance; repeatable")
        sp.add_argument("--quiet", action="store_true")
    return ap


def load_config(path: Path | None) -> dict | None:
    if path is None:
        return None
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("$", "config must be a JSON object")
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    say = (lambda s: None) if args.quiet else (lambda s: print(s, flush=True))
    try:
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed", "must be >= 0")
        cfg = resolve_config(sub, load_config(args.config), args.seed, args.jobs, parse_tol(args.tol),
                             getattr(args, "action", None))
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 2
    name = sub if "action" not in cfg else f"{sub}-{cfg['action']}"
    try:
        if sub == "group":
            args.out.mkdir(parents=True, exist_ok=True)
            rows, summary, meta = run_group(cfg, args.out)
        elif sub == "suite":
            rows, summary, meta = run_suite(cfg, log=say)
        else:
            rows, summary, meta = RUNNERS[sub](cfg)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure in {sub}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    write_reports(args.out, name, rows, summary, meta, cfg, sub)
    say(f"{name}: {len(rows)} rows -> {args.out / (name + '.csv')}")
    if summary.get("status") == "failed":
        print(f"acceptance checks failed: {summary['failed']}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
