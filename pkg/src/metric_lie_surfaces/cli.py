"""Command line front end (``mls``).

Subcommands: classify, analyze, reconstruct, correspond, special.

Exit codes: 0 success, 1 parse error, 2 data integrity problem,
3 failed mathematical precondition, 4 integration failure.
All numbers are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .correspondences import CorrespondenceError, daniel_transform, twin_s3
from .model_core import Family, ModelDomainError, UnsupportedSignatureError, model_from_spec
from .reconstruction import (HypothesisError, IntegrationError, build_M_from_T, reconstruct_dim4,
                             reconstruct_from_angles, reconstruct_from_T)
from .special_surfaces import (FlowDomainError, SpecialSurfaceError, constant_angle_set, integral_surface,
                               totally_geodesic, vertical_cylinder)
from .surface_geometry import (DegenerateMetricError, FundamentalData, GridSurface, GridTooSmallError,
                               IntrinsicGeometry, compatibility_residuals, companion_residual, derived_fields,
                               dim4_residuals, extract_fundamental_data, interior, mean_curvature)

EXIT_OK, EXIT_PARSE, EXIT_DATA, EXIT_MATH, EXIT_INTEGRATION = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_PARSE, message)


def fmt(x) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# model flags
# ---------------------------------------------------------------------------

def _floats(text: str, n: int, what: str) -> List[float]:
    try:
        vals = [float(t) for t in str(text).split(",")]
    except ValueError:
        raise CliError(EXIT_PARSE, f"cannot parse {what} {text!r}")
    if len(vals) != n:
        raise CliError(EXIT_PARSE, f"{what} needs {n} comma-separated numbers, got {text!r}")
    return vals


def _add_model_flags(p):
    p.add_argument("--c", help="structure constants c1,c2,c3")
    p.add_argument("--eps", default="1,1,1", help="signs eps1,eps2,eps3 (default 1,1,1)")
    p.add_argument("--family", choices=[f.value for f in Family], help="E(kappa,tau) family instead of --c")
    p.add_argument("--kappa", type=float)
    p.add_argument("--tau", type=float)


def _model_spec_from_args(args) -> Optional[dict]:
    if getattr(args, "family", None):
        if args.kappa is None or args.tau is None:
            raise CliError(EXIT_PARSE, "--family needs --kappa and --tau")
        return {"family": args.family, "kappa": args.kappa, "tau": args.tau}
    if getattr(args, "c", None):
        return {"c": _floats(args.c, 3, "--c"), "eps": _floats(args.eps, 3, "--eps")}
    return None


def build_model(spec: Optional[dict]):
    if spec is None:
        raise CliError(EXIT_PARSE, "no model given (use --c/--eps or --family/--kappa/--tau)")
    try:
        return model_from_spec(spec)
    except (ValueError, KeyError, TypeError, UnsupportedSignatureError) as exc:
        raise CliError(EXIT_PARSE, f"invalid model: {exc}")


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

SURFACE_COLUMNS = ["u", "v", "x", "y", "z"]
DATA_COLUMNS = (["u", "v", "eh1", "eh2", "eh3", "F11", "F12", "F21", "F22", "S11", "S12", "S21", "S22"]
                + [f"T{i}_{a}" for i in (1, 2, 3) for a in (1, 2)]
                + ["nu1", "nu2", "nu3", "H", "K", "x", "y", "z"])


def _read_rows(path: Path, required: Sequence[str]):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot open {path}: {exc}")
    with fh:
        numbered = [(n, line) for n, line in enumerate(fh, start=1) if not line.startswith("#")]
        reader = csv.reader(line for _, line in numbered)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CliError(EXIT_DATA, f"{path}: empty file")
        missing = [c for c in required if c not in header]
        if missing:
            raise CliError(EXIT_DATA, f"{path}: missing columns {missing}")
        rows = []
        lines = []
        for i, row in enumerate(reader):
            if not row:
                continue
            where = f"data row {i} (line {numbered[i + 1][0]})"
            if len(row) != len(header):
                raise CliError(EXIT_DATA, f"{path}: {where} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise CliError(EXIT_DATA, f"{path}: {where} has a non-numeric field")
            lines.append(numbered[i + 1][0])
    if not rows:
        raise CliError(EXIT_DATA, f"{path}: no data rows")
    return header, np.array(rows), lines


def _grid_from_rows(path, header, table, lines, columns: Sequence[str], allow_nan: Sequence[str] = ()):
    """Arrange rows (any order) on the (u, v) grid; returns u, v and a dict of column grids."""
    check = [header.index(c) for c in columns if c not in allow_nan]
    bad = np.argwhere(~np.isfinite(table[:, check]))
    if len(bad):
        r, c = bad[0]
        raise CliError(EXIT_DATA, f"{path}: non-finite value in data row {r} (line {lines[r]}, "
                                  f"column {header[check[c]]})")
    u = np.unique(table[:, header.index("u")])
    v = np.unique(table[:, header.index("v")])
    if len(u) * len(v) != len(table):
        raise CliError(EXIT_DATA, f"{path}: rows do not form a full grid ({len(u)} x {len(v)} != {len(table)})")
    order = np.lexsort((table[:, header.index("v")], table[:, header.index("u")]))
    table = table[order]
    uu = table[:, header.index("u")].reshape(len(u), len(v))
    vv = table[:, header.index("v")].reshape(len(u), len(v))
    if not (np.allclose(uu, u[:, None]) and np.allclose(vv, v[None, :])):
        raise CliError(EXIT_DATA, f"{path}: rows do not form a full grid")
    for vals, name in ((u, "u"), (v, "v")):
        if len(vals) > 1:
            d = np.diff(vals)
            if np.max(np.abs(d - d[0])) > 1e-9 * max(1.0, abs(d[0])):
                raise CliError(EXIT_DATA, f"{path}: {name} values are not uniformly spaced")
    grids = {c: table[:, header.index(c)].reshape(len(u), len(v)) for c in header}
    return u, v, grids


def read_surface_csv(path):
    header, table, lines = _read_rows(Path(path), SURFACE_COLUMNS)
    u, v, g = _grid_from_rows(path, header, table, lines, SURFACE_COLUMNS)
    return u, v, np.stack([g["x"], g["y"], g["z"]], axis=-1)


def write_surface_csv(path, u, v, P) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SURFACE_COLUMNS)
        # rows of constant v, u varying fastest
        for j, vj in enumerate(v):
            for i, ui in enumerate(u):
                w.writerow([fmt(ui), fmt(vj)] + [fmt(x) for x in P[i, j]])


def write_data_csv(path, data: FundamentalData) -> None:
    n_u, n_v = data.shape
    F = data.F if data.F is not None else np.full((n_u, n_v, 2, 2), np.nan)
    P = data.positions if data.positions is not None else np.full((n_u, n_v, 3), np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATA_COLUMNS)
        for j in range(n_v):
            for i in range(n_u):
                row = [data.u[i], data.v[j], *data.eh, *F[i, j].ravel(), *data.S[i, j].ravel(),
                       *data.T[i, j].ravel(), *data.nu[i, j], data.H[i, j], data.K[i, j], *P[i, j]]
                w.writerow([fmt(x) for x in row])


@dataclass
class DataFile:
    u: np.ndarray
    v: np.ndarray
    eh: tuple
    F: np.ndarray
    S: np.ndarray
    T: np.ndarray
    nu: np.ndarray
    H: np.ndarray
    K: np.ndarray
    positions: Optional[np.ndarray]

    def geometry(self) -> IntrinsicGeometry:
        return IntrinsicGeometry(self.u, self.v, self.F, self.eh)


def read_data_csv(path, need: Sequence[str]) -> DataFile:
    """Read fundamental data; only the columns in ``need`` must be finite."""
    header, table, lines = _read_rows(Path(path), DATA_COLUMNS)
    allow = [c for c in DATA_COLUMNS if c not in need]
    u, v, g = _grid_from_rows(path, header, table, lines, DATA_COLUMNS, allow_nan=allow)
    eh = tuple(float(g[f"eh{a}"][0, 0]) for a in (1, 2, 3))
    for a in (1, 2, 3):
        if not np.all(g[f"eh{a}"] == eh[a - 1]):
            raise CliError(EXIT_DATA, f"{path}: surface signs change along the grid")
    F = np.stack([np.stack([g["F11"], g["F12"]], -1), np.stack([g["F21"], g["F22"]], -1)], -2)
    S = np.stack([np.stack([g["S11"], g["S12"]], -1), np.stack([g["S21"], g["S22"]], -1)], -2)
    T = np.stack([np.stack([g[f"T{i}_1"], g[f"T{i}_2"]], -1) for i in (1, 2, 3)], -2)
    nu = np.stack([g["nu1"], g["nu2"], g["nu3"]], -1)
    P = np.stack([g["x"], g["y"], g["z"]], -1)
    return DataFile(u, v, eh, F, S, T, nu, g["H"], g["K"], P if np.all(np.isfinite(P)) else None)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    inputs: List[Path]
    group: Optional[dict]
    tol: Optional[float] = None
    output: Optional[Path] = None
    options: Dict[str, object] = field(default_factory=dict)


def load_manifest(command: str, args) -> RunManifest:
    """Merge a JSON manifest (if given) with command-line flags; flags win."""
    raw: dict = {}
    base = Path.cwd()
    if getattr(args, "manifest", None):
        mpath = Path(args.manifest)
        try:
            raw = json.loads(mpath.read_text())
        except OSError as exc:
            raise CliError(EXIT_PARSE, f"cannot read manifest {mpath}: {exc}")
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_PARSE, f"manifest {mpath} is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise CliError(EXIT_PARSE, "manifest must be a JSON object")
        base = mpath.parent
    resolve = lambda p: None if p is None else (Path(p) if Path(p).is_absolute() else base / p)
    flag_group = _model_spec_from_args(args)
    group = flag_group or raw.get("group")
    inp = args.input if args.input else raw.get("input")
    if inp is None:
        raise CliError(EXIT_PARSE, "no input file given (--in or manifest 'input')")
    inputs = [Path(args.input)] if args.input else [resolve(inp)]
    for p in inputs:
        if not p.exists():
            raise CliError(EXIT_PARSE, f"input file {p} does not exist")
    out = Path(args.out) if args.out else resolve(raw.get("output"))
    tol = args.tol if args.tol is not None else raw.get("tol", raw.get("tolerances", {}).get("condition"))
    opts = {k: v for k, v in raw.items() if k not in ("group", "input", "output", "tol", "tolerances")}
    if "H_sign" in opts:
        opts["h_sign"] = opts.pop("H_sign")
    for key in ("mode", "theta", "h_sign", "q0", "target_family"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return RunManifest(command, inputs, group, None if tol is None else float(tol), out, opts)


def _q0(opts, data: Optional[DataFile]) -> np.ndarray:
    if "q0" in opts and opts["q0"] is not None:
        q = opts["q0"]
        return np.array(_floats(q, 3, "q0") if isinstance(q, str) else [float(x) for x in q])
    if data is not None and data.positions is not None:
        return data.positions[0, 0].copy()
    return np.zeros(3)


def _print_diagnostics(diag: dict, out) -> None:
    for key in ("darboux", "path_gap", "frame_path_gap", "group_defect", "det_defect", "killing_row_error"):
        if key in diag:
            print(f"{key} {fmt(diag[key])}", file=out)
    for key, val in diag.get("residuals", {}).items():
        print(f"residual {key} {fmt(val)}", file=out)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_classify(args, out) -> int:
    model = build_model(_model_spec_from_args(args))
    if getattr(model, "product_limit", False):
        info = {"group_type": None, "product_limit": True, "family": model.family.value, "kappa": model.kappa,
                "tau": 0.0, "eps": list(model.eps)}
        line = f"product-limit {model.family.value} kappa={fmt(model.kappa)} tau=0"
    else:
        fam = model.family
        info = {"group_type": model.group_type.value, "iso_dim": model.iso_dim, "global": model.is_global,
                "c": list(model.c), "eps": list(model.eps), "mu": list(model.mu), "a": list(model.a),
                "family": None if fam is None else {"family": fam.family.value, "kappa": fam.kappa,
                                                    "tau": fam.tau, "killing_index": fam.killing_index + 1}}
        line = f"{model.group_type.value} iso_dim={model.iso_dim} global={'true' if model.is_global else 'false'}"
    if args.json:
        print(json.dumps(info, sort_keys=True), file=out)
        return EXIT_OK
    print(line, file=out)
    if not getattr(model, "product_limit", False):
        print("c " + " ".join(fmt(x) for x in model.c), file=out)
        print("eps " + " ".join(str(x) for x in model.eps), file=out)
        print("mu " + " ".join(fmt(x) for x in model.mu), file=out)
        print("a " + " ".join(fmt(x) for x in model.a), file=out)
        fam = model.family
        if fam is not None:
            print(f"family {fam.family.value} kappa={fmt(fam.kappa)} tau={fmt(fam.tau)} "
                  f"killing_index={fam.killing_index + 1}", file=out)
    return EXIT_OK


def cmd_analyze(args, out) -> int:
    model = build_model(_model_spec_from_args(args))
    if not args.input:
        raise CliError(EXIT_PARSE, "analyze needs --in")
    u, v, P = read_surface_csv(args.input)
    try:
        grid = GridSurface.from_points(model, u, v, P)
        data = extract_fundamental_data(grid)
    except GridTooSmallError as exc:
        raise CliError(EXIT_DATA, str(exc))
    except DegenerateMetricError as exc:
        idx = np.atleast_2d(np.asarray(exc.indices)) if exc.indices is not None else np.zeros((0, 2), int)
        pts = "; ".join(f"(u={fmt(u[i])}, v={fmt(v[j])})" for i, j in idx[:10])
        raise CliError(EXIT_DATA, f"{exc}; degenerate points: {pts}")
    except ModelDomainError as exc:
        raise CliError(EXIT_DATA, f"surface leaves the model domain: {exc}")
    rep = compatibility_residuals(data)
    print(f"grid {len(u)}x{len(v)} hu={fmt(u[1] - u[0])} hv={fmt(v[1] - v[0])}", file=out)
    print("signs " + " ".join(str(int(x)) for x in data.eh), file=out)
    for name, (mx, rms) in rep.summary().items():
        print(f"residual {name} max={fmt(mx)} rms={fmt(rms)}", file=out)
    if getattr(model, "product_limit", False) or getattr(model, "family", None) is not None:
        for name, (mx, rms) in dim4_residuals(data).summary().items():
            print(f"dim4 {name} max={fmt(mx)} rms={fmt(rms)}", file=out)
    H = interior(data.H)
    print(f"H mean={fmt(np.mean(H))} min={fmt(np.min(H))} max={fmt(np.max(H))}", file=out)
    if not getattr(model, "product_limit", False):
        df = derived_fields(data)
        z, p = interior(df.zeta), interior(df.psi)
        print(f"zeta min={fmt(np.min(z))} max={fmt(np.max(z))}", file=out)
        print(f"psi min={fmt(np.min(p))} max={fmt(np.max(p))}", file=out)
        if np.min(np.abs(H)) > 1e-8:
            cr = interior(companion_residual(data))
            print(f"companion max={fmt(np.nanmax(cr))}", file=out)
    if args.out:
        write_data_csv(args.out, data)
    if args.tol is not None and not rep.worst <= args.tol:
        print(f"error: compatibility residual {fmt(rep.worst)} exceeds tolerance {fmt(args.tol)}", file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


_NEEDS = {
    "from_T": [f"T{i}_{a}" for i in (1, 2, 3) for a in (1, 2)],
    "from_angles": ["nu1", "nu2", "nu3"],
    "dim4": ["S11", "S12", "S21", "S22"],
}


def _killing_columns(model) -> List[str]:
    k = model.family.killing_index + 1
    return [f"T{k}_1", f"T{k}_2", f"nu{k}"]


def cmd_reconstruct(args, out) -> int:
    man = load_manifest("reconstruct", args)
    model = build_model(man.group)
    mode = man.options.get("mode", "from_T")
    if mode not in _NEEDS:
        raise CliError(EXIT_PARSE, f"unknown reconstruction mode {mode!r} (from_T, from_angles, dim4)")
    need = ["F11", "F12", "F21", "F22"] + _NEEDS[mode]
    if mode == "dim4":
        if getattr(model, "family", None) is None or getattr(model, "product_limit", False):
            raise CliError(EXIT_MATH, "dim4 reconstruction needs a Lie group with four-dimensional isometry group")
        need += _killing_columns(model)
    data = read_data_csv(man.inputs[0], need)
    geo = data.geometry()
    q0 = _q0(man.options, data)
    if mode == "from_T":
        rec = reconstruct_from_T(model, geo, data.T, q0, tol=man.tol)
    elif mode == "from_angles":
        h_sign = float(man.options.get("h_sign", 1.0))
        rec = reconstruct_from_angles(model, geo, data.nu, q0, h_sign, tol=man.tol)
    else:
        k = model.family.killing_index
        M0 = None
        if np.all(np.isfinite(data.T[0, 0])):
            M0 = build_M_from_T(data.T[:1, :1], np.asarray(model.eps, float), data.eh)[0].M[0, 0]
        rec = reconstruct_dim4(model, geo, data.S, data.T[..., k, :], data.nu[..., k], q0, M0, tol=man.tol)
    _print_diagnostics(rec.diagnostics, out)
    if man.output is not None:
        write_surface_csv(man.output, data.u, data.v, rec.positions)
    return EXIT_OK


def cmd_correspond(args, out) -> int:
    man = load_manifest("correspond", args)
    model = build_model(man.group)
    mode = man.options.get("mode", "daniel")
    data_file = read_data_csv(man.inputs[0], ["F11", "F12", "F21", "F22", "S11", "S12", "S21", "S22"])
    T = data_file.T
    nu = data_file.nu
    src = FundamentalData(model, data_file.u, data_file.v, data_file.eh, data_file.S, T, nu,
                          mean_curvature(data_file.S, data_file.eh), data_file.K, None, data_file.F,
                          data_file.positions)
    q0 = _q0(man.options, None)
    if mode == "twin":
        if not np.all(np.isfinite(T)):
            raise CliError(EXIT_DATA, "twin correspondence needs all tangent projections T1, T2, T3")
        tw, theta = twin_s3(src)
        print(f"theta {fmt(theta)}", file=out)
        print(f"H {fmt(np.mean(interior(src.H)))} -> {fmt(np.mean(interior(tw.H)))}", file=out)
        rec = reconstruct_from_T(model, src.geometry, tw.T, q0, tol=man.tol)
        target = model
    elif mode == "daniel":
        if "theta" not in man.options:
            raise CliError(EXIT_PARSE, "daniel correspondence needs theta")
        tf, params = daniel_transform(src, float(man.options["theta"]))
        want = man.options.get("target_family", "auto")
        if want not in ("auto", params.family.value):
            raise CliError(EXIT_MATH, f"the correspondence stays in the family {params.family.value}, not {want}")
        print(f"theta {fmt(params.theta)}", file=out)
        print(f"family {params.family.value}", file=out)
        print(f"source kappa={fmt(params.source_kappa)} tau={fmt(params.source_tau)} H={fmt(params.source_H)}",
              file=out)
        print(f"target kappa={fmt(params.target_kappa)} tau={fmt(params.target_tau)} H={fmt(params.target_H)}",
              file=out)
        print(f"invariant {fmt(params.invariant)}", file=out)
        target = tf.model
        for name, (mx, _) in dim4_residuals(tf).summary().items():
            print(f"target {name} max={fmt(mx)}", file=out)
        if getattr(target, "product_limit", False):
            print("target is a product limit (tau = 0): no Lie group model, surface not integrated", file=out)
            if man.options.get("data_output"):
                write_data_csv(man.options["data_output"], tf)
            return EXIT_OK
        k = target.family.killing_index
        rec = reconstruct_dim4(target, tf.geometry, tf.S, tf.T[..., k, :], tf.nu[..., k], q0, tol=man.tol)
    else:
        raise CliError(EXIT_PARSE, f"unknown correspondence mode {mode!r} (daniel, twin)")
    _print_diagnostics(rec.diagnostics, out)
    if man.output is not None:
        write_surface_csv(man.output, data_file.u, data_file.v, rec.positions)
    return EXIT_OK


def cmd_special(args, out) -> int:
    model = build_model(_model_spec_from_args(args))
    kind = args.kind
    if kind == "constant-angle":
        sol = constant_angle_set(model, args.eh3)
        print(f"kind {sol.kind}", file=out)
        if sol.kind in ("points", "curves"):
            print("x_start " + " ".join(fmt(x) for x in sol.x_start), file=out)
            print("x_end " + " ".join(fmt(x) for x in sol.x_end), file=out)
            for nu in sol.sample(args.n):
                print("nu " + " ".join(fmt(x) for x in nu), file=out)
        return EXIT_OK
    if kind == "totally-geodesic":
        res = totally_geodesic(model)
        print(f"kind {res.kind}", file=out)
        for d in res.distributions:
            print("span " + " ".join(fmt(x) for x in d.Y1) + " | " + " ".join(fmt(x) for x in d.Y2)
                  + " nu " + " ".join(fmt(x) for x in d.nu), file=out)
        return EXIT_OK
    if kind == "cylinder":
        if args.r is None:
            raise CliError(EXIT_PARSE, "cylinder needs --r")
        cyl = vertical_cylinder(model, args.r, tuple(_floats(args.domain, 4, "--domain")))
        print(f"H {fmt(cyl.H)}", file=out)
        print(f"conformal_factor {fmt(cyl.conformal_factor)}", file=out)
        patch, comp = cyl.patch, cyl.companion
    elif kind == "integral":
        if args.nu is None:
            raise CliError(EXIT_PARSE, "integral needs --nu")
        q0 = np.array(_floats(args.q0, 3, "--q0")) if args.q0 else np.zeros(3)
        patch = integral_surface(model, _floats(args.nu, 3, "--nu"), q0, args.extent)
        print(f"commutativity_defect {fmt(patch.commutativity_defect)}", file=out)
        comp = None
    else:
        raise CliError(EXIT_PARSE, f"unknown generator {kind!r}")
    us, vs = patch.grid(args.n, args.n)
    U, V = np.meshgrid(us, vs, indexing="ij")
    if args.out:
        write_surface_csv(args.out, us, vs, patch(U, V))
    if comp is not None and args.companion_out:
        write_surface_csv(args.companion_out, us, vs, comp(U, V))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mls", description="Surfaces in three-dimensional unimodular metric Lie groups")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="classify a metric Lie group")
    _add_model_flags(c)
    c.add_argument("--json", action="store_true")

    a = sub.add_parser("analyze", help="fundamental data and compatibility residuals of a surface grid")
    _add_model_flags(a)
    a.add_argument("--in", dest="input", help="surface grid CSV (u,v,x,y,z)")
    a.add_argument("--out", help="write the fundamental data CSV here")
    a.add_argument("--tol", type=float, help="fail (exit 3) if a residual exceeds this")
    a.add_argument("--h", type=float, help="unused for gridded input; kept for symmetry with generators")

    for name, helptext in (("reconstruct", "rebuild a surface from fundamental data"),
                           ("correspond", "Daniel correspondence or twin immersion")):
        r = sub.add_parser(name, help=helptext)
        _add_model_flags(r)
        r.add_argument("manifest", nargs="?", help="JSON run manifest")
        r.add_argument("--in", dest="input", help="fundamental data CSV")
        r.add_argument("--out", help="surface grid CSV to write")
        r.add_argument("--tol", type=float)
        r.add_argument("--mode")
        r.add_argument("--q0")
        if name == "reconstruct":
            r.add_argument("--h-sign", dest="h_sign", type=float)
        else:
            r.add_argument("--theta", type=float)
            r.add_argument("--target-family", dest="target_family")

    s = sub.add_parser("special", help="explicit surface generators")
    s.add_argument("kind", choices=["constant-angle", "totally-geodesic", "cylinder", "integral"])
    _add_model_flags(s)
    s.add_argument("--eh3", type=float, default=1.0, help="sign of the unit normal (constant-angle)")
    s.add_argument("--r", type=float, help="cylinder radius")
    s.add_argument("--domain", default="0,1,0,1", help="u0,u1,v0,v1 for the cylinder chart")
    s.add_argument("--nu", help="constant angles nu1,nu2,nu3 (integral)")
    s.add_argument("--q0", help="base point x,y,z (integral)")
    s.add_argument("--extent", type=float, default=0.5)
    s.add_argument("--n", type=int, default=50, help="samples per direction")
    s.add_argument("--out")
    s.add_argument("--companion-out", dest="companion_out")
    return p


_COMMANDS = {"classify": cmd_classify, "analyze": cmd_analyze, "reconstruct": cmd_reconstruct,
             "correspond": cmd_correspond, "special": cmd_special}


def _thread_limit():
    raw = os.environ.get("MLS_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise CliError(EXIT_PARSE, f"MLS_THREADS must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        with _thread_limit():
            return _COMMANDS[args.command](args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (HypothesisError, CorrespondenceError, SpecialSurfaceError) as exc:
        cond = getattr(exc, "condition", "")
        print(f"error: {exc}" + (f" [condition: {cond}]" if cond else ""), file=sys.stderr)
        return EXIT_MATH
    except (IntegrationError, FlowDomainError) as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (DegenerateMetricError, ModelDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
