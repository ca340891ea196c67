"""Command-line verification harness.

Subcommands::

    check      run every applicable invariant suite on a catalog manifold
    curvature  curvature variants for given or random tangent triples
    geodesic   geodesic tables on a t-grid
    jacobi     Jacobi fields on a t-grid: closed form / variation FD / ODE
    natmetric  Christoffel components of the natural metrics on TM and HM

Every report is a JSON document ``{meta, checks, tables}`` (or CSV tables)
whose bytes depend only on the configuration and the seed.  Exit codes:
0 all checks pass, 1 some check failed, 2 invalid configuration or inputs.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import __version__
from . import bundles as bd
from . import natmetric as nm
from .ambient import christoffel, inner, metric_compatibility_residual, norm, structure_invariants
from .curvature import VARIANTS, curvature_embedded, gauss_codazzi_check
from .errors import AmbientRiemannError, IntegrationError, MembershipError, OffManifoldError
from .jacobi import (GeodesicSpec, JacobiInit, geodesic, integrate_geodesic, jacobi_fd,
                     jacobi_grassmann, jacobi_horizontal_from_Q, jacobi_naturally_reductive,
                     jacobi_ode, jacobi_ode_horizontal, jacobi_son)
from .manifolds import CATALOG, CatalogEntry, build
from .submersion import (curvature_submersed, gamma_h, oneil_A, oneil_A_via_bracket,
                         random_vertical, sectional_numerator_h)

SEED_ENV = "AMBIENT_RIEMANN_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "manifold": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "p": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "partition": {"type": "array", "items": {"type": "integer", "minimum": 1},
                      "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 0},
        "random": {"type": "integer", "minimum": 0},
        "tol": {"anyOf": [{"type": "number", "exclusiveMinimum": 0},
                          {"type": "object",
                           "additionalProperties": {"type": "number", "exclusiveMinimum": 0}}]},
        "steps": {"type": "integer", "minimum": 1},
        "horizon": {"type": "number"},
        "t_grid": {"type": "array", "items": {"type": "number"}},
        "init": {"enum": ["random", "velocity", "scaled_velocity"]},
        "metric": {"enum": sorted(nm.PRESETS)},
        "inputs": {"type": "string"},
        "out": {"type": "string"},
        "format": {"enum": ["json", "csv"]},
    },
}

# default tolerance of every check (overridable through ``tol``)
TOLERANCES = {
    "ambient.membership": 1e-10,
    "ambient.g_symmetry": 1e-10,
    "ambient.g_positive": 0.0,
    "ambient.proj_idempotent": 1e-10,
    "ambient.gP_selfadjoint": 1e-10,
    "ambient.gamma_symmetry": 1e-7,
    "ambient.gamma_tangent_metric": 1e-6,
    "curvature.variants": 1e-6,
    "curvature.closed_form": 1e-6,
    "curvature.skew_symmetry": 1e-6,
    "curvature.sectional_unit": 1e-8,
    "curvature.gauss_codazzi": 1e-7,
    "submersion.cursubmer_vs_oneil13": 1e-6,
    "submersion.cursubmer2_vs_cursubmer": 1e-6,
    "submersion.closed_form": 1e-6,
    "submersion.natret": 1e-10,
    "submersion.oneil_antisymmetry": 1e-10,
    "submersion.oneil_closed_form": 1e-10,
    "submersion.oneil_bracket": 1e-7,
    "submersion.sectional_numerator_grassmann": 1e-8,
    "bundles.flip_membership": 1e-8,
    "bundles.connection_roundtrip": 1e-8,
    "bundles.ttQ_idempotent": 1e-10,
    "bundles.jH_involution": 1e-10,
    "bundles.b_map_Q_part": 1e-8,
    "bundles.CQ_compatibility": 1e-7,
    "jacobi.closed_vs_fd": 1e-4,
    "jacobi.closed_vs_ode": 1e-4,
    "jacobi.fd_vs_ode": 1e-4,
    "natmetric.kernel_orthogonality": 1e-9,
    "natmetric.G_positive": 0.0,
    "natmetric.GQ_positive": 0.0,
}


class UsageError(Exception):
    """Invalid configuration or inputs: exit code 2."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# configuration


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
        cfg = json.loads(text)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"malformed config: {exc.message}") from exc


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        seed = int(raw)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc
    if seed < 0:
        raise UsageError(f"{SEED_ENV} must be non-negative")
    return seed


def manifold_params(cfg) -> dict:
    name = cfg["manifold"]
    keys = {"sphere": ("n",), "so_n": ("n",), "sasaki_sphere_tangent": ("n",),
            "stiefel": ("n", "p", "alpha"), "grassmann": ("n", "p"),
            "flag": ("n", "partition")}[name]
    params = {k: cfg[k] for k in keys if cfg.get(k) is not None}
    if "partition" in params:
        params["partition"] = tuple(params["partition"])
    return params


def build_entry(cfg) -> CatalogEntry:
    name = cfg.get("manifold")
    if name not in CATALOG:
        raise UsageError(f"unknown manifold {name!r}; choose from {', '.join(sorted(CATALOG))}")
    try:
        return build(name, **manifold_params(cfg))
    except AmbientRiemannError as exc:
        raise UsageError(f"invalid parameters for {name}: {exc}") from exc


def tolerance(cfg, name) -> float:
    tol = cfg.get("tol")
    if isinstance(tol, dict):
        return float(tol.get(name, TOLERANCES[name]))
    if tol is not None:
        return float(tol)
    return TOLERANCES[name]


# ---------------------------------------------------------------------------
# report assembly and serialization


class Report:
    def __init__(self, cfg, entry: CatalogEntry, command: str):
        self.cfg = cfg
        self.entry = entry
        self.command = command
        self.checks = []
        self.tables = {}

    def check(self, name, sample, residual):
        tol = tolerance(self.cfg, name)
        residual = float(residual)
        ok = bool(np.isfinite(residual) and residual <= tol)
        self.checks.append({"name": name, "sample": int(sample), "residual": residual,
                            "tol": tol, "pass": ok})

    def add_row(self, table, row):
        self.tables.setdefault(table, []).append(row)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def as_dict(self) -> dict:
        params = {k: (list(v) if isinstance(v, tuple) else v)
                  for k, v in self.entry.params.items()}
        meta = {"command": self.command, "manifold": self.entry.name, "params": params,
                "seed": self.cfg["seed"], "version": __version__}
        checks = sorted(self.checks, key=lambda c: (c["name"], c["sample"]))
        return {"meta": meta, "checks": checks, "tables": self.tables}


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = f"{x:.17g}"
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(json.dumps(str(k)) + ":" + dumps(v) for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _num(v).strip('"')
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(a) for a in np.ravel(np.asarray(v, dtype=float)))
    return str(v)


def to_csv(report: dict) -> str:
    """One CSV section per table (``# table <name>`` header), checks first."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    sections = [("checks", report["checks"])] + sorted(report["tables"].items())
    for name, rows in sections:
        buf.write(f"# table {name}\n")
        cols = []
        for r in rows:
            cols.extend(k for k in r if k not in cols)
        cols = sorted(cols)
        if cols:
            w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# inputs


def _parse_csv_blocks(text) -> list:
    """Blocks ``# <key>`` followed by matrix rows; a repeated key starts a new sample."""
    samples, cur, key, rows = [], {}, None, []

    def flush():
        nonlocal key, rows
        if key is not None:
            cur[key] = np.array(rows, dtype=float) if rows else np.zeros(0)
        key, rows = None, []

    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            flush()
            k = s[1:].strip()
            if k in cur:
                samples.append(cur)
                cur = {}
            key = k
        elif s:
            rows.append([float(a) for a in s.split(",")])
    flush()
    if cur:
        samples.append(cur)
    # single-row blocks describe vectors
    return [{k: (v[0] if v.ndim == 2 and v.shape[0] == 1 else v) for k, v in s.items()}
            for s in samples]


def load_inputs(path, required) -> list:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read inputs {path}: {exc}") from exc
    try:
        if str(path).endswith(".csv"):
            samples = _parse_csv_blocks(text)
        else:
            data = json.loads(text)
            samples = data["samples"] if isinstance(data, dict) else data
            samples = [{k: np.asarray(v, dtype=float) for k, v in s.items()} for s in samples]
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed inputs {path}: {exc}") from exc
    for i, s in enumerate(samples):
        missing = [k for k in required if k not in s]
        if missing:
            raise UsageError(f"inputs sample {i} lacks {missing}")
    return samples


def _validate_point(entry, x, i):
    S = entry.structure
    if np.shape(x) != S.shape:
        raise UsageError(f"sample {i}: point has shape {np.shape(x)}, expected {S.shape}")
    r = S.membership_residual(x)
    if not np.isfinite(r) or r > 1e-8:
        raise UsageError(f"sample {i}: point is off the manifold",
                         {"sample": i, "membership_residual": r})


def _validate_tangent(entry, x, w, i, label, horizontal=False):
    S = entry.structure
    if np.shape(w) != S.shape:
        raise UsageError(f"sample {i}: {label} has shape {np.shape(w)}, expected {S.shape}")
    r = S.tangency_residual(x, w)
    if horizontal and entry.submersed is not None:
        r = max(r, entry.submersed.vertical_residual(x, w))
    if not np.isfinite(r) or r > 1e-8 * (1 + norm(w)):
        kind = "horizontal" if horizontal else "tangent"
        raise UsageError(f"sample {i}: {label} is not {kind}",
                         {"sample": i, "vector": label, "residual": r})


def _samples(cfg, entry, keys, rng, horizontal=False):
    """Validated samples from the inputs file, or ``random`` seeded draws."""
    if cfg.get("inputs"):
        out = load_inputs(cfg["inputs"], ["x"] + list(keys))
        for i, s in enumerate(out):
            _validate_point(entry, s["x"], i)
            for k in keys:
                _validate_tangent(entry, s["x"], s[k], i, k, horizontal)
        return out
    k = cfg.get("random")
    k = cfg.get("samples", 3) if k is None else k
    out = []
    for _ in range(k):
        x = entry.random_point(rng)
        draw = (entry.random_horizontal if horizontal else entry.random_tangent)
        out.append({"x": x, **{key: draw(rng, x) for key in keys}})
    return out


# ---------------------------------------------------------------------------
# check suites


def _positive_residual(M) -> float:
    """0 when the symmetric matrix M is positive definite, else 1 - min eigenvalue."""
    lam = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())
    return 0.0 if lam > 0 else 1.0 - lam


def suite_ambient(rep, entry, rng, k):
    S = entry.structure
    for i in range(k):
        x = entry.random_point(rng)
        xi, eta = entry.random_tangent(rng, x), entry.random_tangent(rng, x)
        inv = structure_invariants(S, x)
        rep.check("ambient.membership", i, S.membership_residual(x))
        rep.check("ambient.g_symmetry", i, inv["g_symmetry"])
        rep.check("ambient.g_positive", i, 0.0 if inv["g_min_eig"] > 0 else 1 - inv["g_min_eig"])
        rep.check("ambient.proj_idempotent", i, inv["proj_idempotent"])
        rep.check("ambient.gP_selfadjoint", i, inv["gP_selfadjoint"])
        rep.check("ambient.gamma_symmetry", i,
                  norm(christoffel(S, x, xi, eta) - christoffel(S, x, eta, xi)))
        rep.check("ambient.gamma_tangent_metric", i,
                  metric_compatibility_residual(S, x, xi, eta))


def suite_curvature(rep, entry, rng, k):
    S = entry.structure
    closed = entry.closed.get("curvature")
    for i in range(k):
        x = entry.random_point(rng)
        xi, eta, phi, psi = (entry.random_tangent(rng, x) for _ in range(4))
        R = {v: curvature_embedded(S, x, xi, eta, phi, v) for v in VARIANTS}
        rep.check("curvature.variants", i, max(norm(R[a] - R[b]) for a in VARIANTS
                                               for b in VARIANTS))
        rep.check("curvature.skew_symmetry", i,
                  abs(inner(R["rc1"], S.g(x, psi))
                      + inner(curvature_embedded(S, x, xi, eta, psi), S.g(x, phi))))
        if closed is not None and entry.submersed is None:
            rep.check("curvature.closed_form", i, norm(R["rc1"] - closed(x, xi, eta, phi)))
        if entry.name == "sphere":
            e1 = xi
            e2 = eta - inner(eta, e1) * e1
            e2 = e2 / norm(e2)
            num = inner(curvature_embedded(S, x, e1, e2, e1), e2)
            rep.check("curvature.sectional_unit", i, abs(num - 1.0))
        if S.gamma_E is not None:
            rep.check("curvature.gauss_codazzi", i,
                      gauss_codazzi_check(S, x, xi, eta, phi)["residual"])


def suite_submersion(rep, entry, rng, k):
    T = entry.submersed
    C = entry.closed
    for i in range(k):
        x = entry.random_point(rng)
        xi, eta, phi = (entry.random_horizontal(rng, x) for _ in range(3))
        R = curvature_submersed(T, x, xi, eta, phi, "cursubmer")
        rep.check("submersion.cursubmer_vs_oneil13", i,
                  norm(R - curvature_submersed(T, x, xi, eta, phi, "oneil13")))
        rep.check("submersion.cursubmer2_vs_cursubmer", i,
                  norm(R - curvature_submersed(T, x, xi, eta, phi, "cursubmer2")))
        if "curvature" in C:
            rep.check("submersion.closed_form", i, norm(R - C["curvature"](x, xi, eta, phi)))
        if "curvature_natret" in C:
            rep.check("submersion.natret", i,
                      norm(C["curvature"](x, xi, eta, phi) - C["curvature_natret"](x, xi, eta, phi)))
        A = oneil_A(T, x, xi, eta)
        rep.check("submersion.oneil_antisymmetry", i, norm(A + oneil_A(T, x, eta, xi)))
        rep.check("submersion.oneil_bracket", i, norm(A - oneil_A_via_bracket(T, x, xi, eta)))
        if "oneil_A" in C:
            rep.check("submersion.oneil_closed_form", i, norm(A - C["oneil_A"](x, xi, eta)))
        if "sectional_numerator" in C:
            # the squared-norm expression in the (Y_perp | Y) frame is twice <R xi, eta>
            Yp = C["complement"](x, rng)
            B1, B2 = Yp.T @ xi, Yp.T @ eta
            num = sectional_numerator_h(T, x, xi, eta)
            rep.check("submersion.sectional_numerator_grassmann", i,
                      abs(num - 0.5 * C["sectional_numerator"](B1, B2)))


def suite_bundles(rep, entry, rng, k):
    S, T = entry.structure, entry.submersed
    for i in range(k):
        x = entry.random_point(rng)
        q = bd.random_double_tangent(S, rng, x)
        rep.check("bundles.flip_membership", i,
                  bd.is_double_tangent(S, bd.canonical_flip(q, S))["max"])
        dc = bd.connection_map(S, q)
        back = bd.connection_map_inverse(S, q.x, q.v, q.dm, dc)
        rep.check("bundles.connection_roundtrip", i, back.distance(q))
        if T is None:
            continue
        qh = bd.random_THM(T, rng, x)
        Q = bd.ttQ_project(T, qh)
        rep.check("bundles.ttQ_idempotent", i, bd.ttQ_project(T, Q).distance(Q))
        qq = bd.random_THM(T, rng, x, horizontal_dm=True)
        rep.check("bundles.jH_involution", i,
                  bd.horizontal_flip(T, bd.horizontal_flip(T, qq)).distance(qq))
        eps = random_vertical(T, rng, x)
        Qb, _ = bd.decompose_THM(T, bd.b_map(T, x, qq.v, eps))
        rep.check("bundles.b_map_Q_part", i, max(norm(Qb.dm), norm(Qb.dt)))
        lifted = bd.DoubleTangent(x, qq.v, qq.dm, qq.dt)
        rep.check("bundles.CQ_compatibility", i,
                  norm(bd.connection_map_Q(T, lifted)
                       - T.ttH(x, bd.connection_map(S, lifted, check=False))))


def _jacobi_paths(cfg, entry, x, v, dm, dt, t):
    """{path: J(t)} for the closed form (if any), variation FD and ODE."""
    S, T, C = entry.structure, entry.submersed, entry.closed
    steps = cfg.get("steps")
    out = {}
    if T is None:
        spec = GeodesicSpec(S, x, v, closed_form=C.get("geodesic"), steps=steps)
        if entry.name == "so_n":
            out["closed"] = jacobi_son(x, v, dm, dt, t)
        out["fd"] = jacobi_fd(spec, JacobiInit(x, v, dm, dt), t)
        out["ode"] = jacobi_ode(spec, JacobiInit(x, v, dm, dt), t)
        return out
    if entry.name == "grassmann":
        out["closed"] = jacobi_grassmann(x, v, dm, dt, t)
    elif entry.liedata is not None:
        L = entry.liedata
        A, Cm = x.T @ v, x.T @ dm
        E = x.T @ (dt + gamma_h(T, x, v, dm))
        out["closed"] = jacobi_naturally_reductive(L, A, Cm, E, t, U=x)
    out["fd"] = jacobi_horizontal_from_Q(T, x, dm, v, dt, t, closed_form=C.get("geodesic"),
                                         steps=steps)
    out["ode"] = jacobi_ode_horizontal(T, x, dm, v, dt, t, steps=steps)
    return out


def _jacobi_init(entry, rng, x, v, kind):
    """Initial data (dm, dt): TTM data for embedded, QHM data for submersions."""
    S, T = entry.structure, entry.submersed
    if kind == "velocity":
        return v.copy(), -christoffel(S, x, v, v)
    if kind == "scaled_velocity":
        return np.zeros_like(v), v.copy()
    if T is None:
        dm = entry.random_tangent(rng, x)
        return dm, entry.random_tangent(rng, x) + S.DP(x, dm, v)
    dm = entry.random_horizontal(rng, x)
    return dm, entry.random_horizontal(rng, x) + T.DttH(x, v, dm)


def _deviations(paths):
    names = sorted(paths)
    return {f"{a}_vs_{b}": norm(paths[a] - paths[b])
            for ia, a in enumerate(names) for b in names[ia + 1:]}


def suite_jacobi(rep, cfg, entry, rng, k):
    if entry.name == "sasaki_sphere_tangent":
        return          # FD-assembled metric: the three paths are too slow for a suite
    horizontal = entry.submersed is not None
    for i in range(k):
        x = entry.random_point(rng)
        v = (entry.random_horizontal if horizontal else entry.random_tangent)(rng, x)
        dm, dt = _jacobi_init(entry, rng, x, v, "random")
        for pair_name, dev in _deviations(_jacobi_paths(cfg, entry, x, v, dm, dt, 1.0)).items():
            rep.check(f"jacobi.{pair_name}", i, dev)


def suite_natmetric(rep, entry, rng, k):
    S, T = entry.structure, entry.submersed
    for name in sorted(nm.PRESETS):
        ab = nm.preset(name)
        for i in range(k):
            x = entry.random_point(rng)
            v = entry.random_tangent(rng, x, normalize=False)
            xi, eta = entry.random_tangent(rng, x), entry.random_tangent(rng, x)
            rep.check("natmetric.kernel_orthogonality", i,
                      nm.kernel_orthogonality(S, ab, x, v, xi, eta))
            rep.check("natmetric.G_positive", i, _positive_residual(nm.build_G(S, ab, x, v)))
            if T is not None:
                vh = entry.random_horizontal(rng, x, normalize=False)
                GQ = nm.build_GQ(T, ab, x, vh)
                # G_Q is positive definite on the fibre ttH E x ttH E
                Hm = nm.horizontal_bundle_metric(T, ab, x, vh).projection_matrix()
                basis = _range_basis(Hm)
                rep.check("natmetric.GQ_positive", i, _positive_residual(basis.T @ GQ @ basis))


def _range_basis(Pm, tol=1e-8):
    u, s, _ = np.linalg.svd(Pm)
    return u[:, s > tol]


# ---------------------------------------------------------------------------
# commands


def run_check(cfg) -> Report:
    entry = build_entry(cfg)
    rep = Report(cfg, entry, "check")
    k = cfg.get("samples", 3)
    rng = np.random.default_rng(cfg["seed"])
    suite_ambient(rep, entry, rng, k)
    suite_curvature(rep, entry, rng, k)
    if entry.submersed is not None:
        suite_submersion(rep, entry, rng, k)
    suite_bundles(rep, entry, rng, k)
    suite_jacobi(rep, cfg, entry, rng, k)
    suite_natmetric(rep, entry, rng, k)
    return rep


def run_curvature(cfg) -> Report:
    entry = build_entry(cfg)
    rep = Report(cfg, entry, "curvature")
    rng = np.random.default_rng(cfg["seed"])
    S = entry.structure
    closed = entry.closed.get("curvature") if entry.submersed is None else None
    for i, s in enumerate(_samples(cfg, entry, ("xi", "eta", "phi"), rng)):
        x, xi, eta, phi = s["x"], s["xi"], s["eta"], s["phi"]
        R = {v: curvature_embedded(S, x, xi, eta, phi, v) for v in VARIANTS}
        row = {"sample": i, "R": R["rc1"],
               "sectional_numerator": inner(curvature_embedded(S, x, xi, eta, xi), S.g(x, eta))}
        row.update({f"dev_{a}_{b}": norm(R[a] - R[b]) for a in VARIANTS for b in VARIANTS
                    if a < b})
        rep.check("curvature.variants", i, max(norm(R[a] - R[b]) for a in VARIANTS
                                               for b in VARIANTS))
        if closed is not None:
            d = norm(R["rc1"] - closed(x, xi, eta, phi))
            row["dev_closed"] = d
            rep.check("curvature.closed_form", i, d)
        rep.add_row("curvature", row)
    rep.tables.setdefault("curvature", [])
    return rep


def _t_grid(cfg):
    grid = cfg.get("t_grid")
    return [0.0, 0.25, 0.5, 0.75, 1.0] if grid is None else [float(t) for t in grid]


def _orthonormality(g):
    if g.ndim != 2:
        return None
    return norm(g.T @ g - np.eye(g.shape[1]))


def run_geodesic(cfg) -> Report:
    entry = build_entry(cfg)
    rep = Report(cfg, entry, "geodesic")
    rng = np.random.default_rng(cfg["seed"])
    S, T = entry.structure, entry.submersed
    horizontal = T is not None
    closed = entry.closed.get("geodesic")
    project = T.ttH if horizontal else None
    rep.tables["geodesic"] = []
    for i, s in enumerate(_samples(cfg, entry, ("v",), rng, horizontal)):
        x, v = s["x"], s["v"]
        for t in _t_grid(cfg):
            g, u = integrate_geodesic(S, x, v, t, cfg.get("steps"), project)
            row = {"sample": i, "t": t, "rk4": g, "membership_residual": S.membership_residual(g)}
            orth = _orthonormality(g)
            if orth is not None:
                row["orthonormality_residual"] = orth
            if closed is not None:
                gc, _ = closed(x, v, t)
                row["closed"] = gc
                row["closed_vs_rk4"] = norm(gc - g)
                if orth is not None:
                    row["orthonormality_residual"] = _orthonormality(gc)
            rep.add_row("geodesic", row)
    return rep


def run_jacobi(cfg) -> Report:
    entry = build_entry(cfg)
    rep = Report(cfg, entry, "jacobi")
    rng = np.random.default_rng(cfg["seed"])
    horizontal = entry.submersed is not None
    kind = cfg.get("init", "random")
    rep.tables["jacobi"] = []
    grid = _t_grid(cfg)
    for i, s in enumerate(_samples(cfg, entry, ("v",), rng, horizontal)):
        x, v = s["x"], s["v"]
        if "dm" in s and "dt" in s:
            dm, dt = s["dm"], s["dt"]
            if horizontal:
                r = bd.is_QHM(entry.submersed, (x, v, dm, dt))
            else:
                r = bd.is_double_tangent(entry.structure, (x, v, dm, dt))
            if not r["passed"]:
                raise UsageError(f"sample {i}: initial data is not a double tangent",
                                 {"sample": i, **{k: r[k] for k in r if k != "passed"}})
        else:
            dm, dt = _jacobi_init(entry, rng, x, v, kind)
        for t in grid:
            paths = _jacobi_paths(cfg, entry, x, v, dm, dt, t)
            devs = _deviations(paths)
            row = {"sample": i, "t": t, **paths, **devs,
                   "max_deviation": max(devs.values()) if devs else 0.0}
            if kind in ("velocity", "scaled_velocity"):
                spec = GeodesicSpec(entry.structure, x, v, closed_form=entry.closed.get("geodesic"),
                                    steps=cfg.get("steps"),
                                    project=entry.submersed.ttH if horizontal else None)
                _, u = geodesic(spec, t)
                target = u if kind == "velocity" else t * u
                row["exact"] = target
                row["fd_vs_exact"] = norm(paths["fd"] - target)
            rep.add_row("jacobi", row)
            for name, dev in devs.items():
                rep.check(f"jacobi.{name}", i, dev)
    return rep


def run_natmetric(cfg) -> Report:
    entry = build_entry(cfg)
    rep = Report(cfg, entry, "natmetric")
    rng = np.random.default_rng(cfg["seed"])
    S, T = entry.structure, entry.submersed
    ab = nm.preset(cfg.get("metric", "sasaki"))
    horizontal = T is not None
    rep.tables["gamma_G"] = []
    if horizontal:
        rep.tables["gamma_HQ"] = []
    for i, s in enumerate(_samples(cfg, entry, ("v", "xi", "eta"), rng, horizontal)):
        x, v, xi, eta = s["x"], s["v"], s["xi"], s["eta"]
        lx = dict(zip("hv", nm.lifts(S, x, v, xi)))
        le = dict(zip("hv", nm.lifts(S, x, v, eta)))
        for part in nm.PARTS:
            gm, gt = nm.split(nm.gamma_G(S, ab, x, v, lx[part[0]], le[part[1]]))
            rep.add_row("gamma_G", {"sample": i, "part": part, "m": gm, "t": gt})
        rep.check("natmetric.kernel_orthogonality", i, nm.kernel_orthogonality(S, ab, x, v, xi, eta))
        if horizontal:
            qx = dict(zip("hv", nm.lifts_Q(T, x, v, xi)))
            qe = dict(zip("hv", nm.lifts_Q(T, x, v, eta)))
            for part in nm.PARTS:
                gm, gt = nm.split(nm.gamma_HQ(T, ab, x, v, qx[part[0]], qe[part[1]]))
                rep.add_row("gamma_HQ", {"sample": i, "part": part, "m": gm, "t": gt})
    return rep


COMMANDS = {"check": run_check, "curvature": run_curvature, "geodesic": run_geodesic,
            "jacobi": run_jacobi, "natmetric": run_natmetric}


def render(report: Report, fmt: str) -> str:
    d = report.as_dict()
    return to_csv(d) if fmt == "csv" else dumps(d) + "\n"


def execute(command: str, cfg: dict) -> tuple:
    """Run ``command`` on a merged configuration; returns (exit code, text)."""
    cfg = dict(cfg)
    if cfg.get("seed") is None:
        cfg["seed"] = default_seed()
    validate_config(cfg)
    report = COMMANDS[command](cfg)
    return (EXIT_OK if report.passed else EXIT_FAIL), render(report, cfg.get("format", "json"))


# ---------------------------------------------------------------------------
# click front-end


def _parse_grid(text):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(a) for a in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed t-grid {text!r}") from exc


def _options(fn):
    opts = [
        click.option("--manifold", type=str, help="catalog name: " + ", ".join(sorted(CATALOG))),
        click.option("--n", "n", type=int),
        click.option("--p", "p", type=int),
        click.option("--alpha", type=float, help="Stiefel metric parameter"),
        click.option("--partition", type=str, help="flag block sizes, e.g. 2,2,1"),
        click.option("--seed", type=int, help=f"RNG seed (default ${SEED_ENV} or 0)"),
        click.option("--samples", type=int),
        click.option("--random", "random_", type=int, help="number of random samples"),
        click.option("--tol", type=float, help="override every check tolerance"),
        click.option("--steps", type=int, help="RK4 steps per unit time"),
        click.option("--t-grid", "t_grid", type=str, help="comma-separated times"),
        click.option("--init", type=click.Choice(["random", "velocity", "scaled_velocity"])),
        click.option("--metric", type=click.Choice(sorted(nm.PRESETS))),
        click.option("--inputs", type=click.Path(), help="JSON or CSV-block input file"),
        click.option("--out", type=click.Path(), help="write the report here"),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"])),
        click.option("--config", "config", type=click.Path(), help="JSON config file"),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _merge(config, flags) -> dict:
    cfg = load_config(config) if config else {}
    for key, val in flags.items():
        if val is None:
            continue
        if key == "partition":
            try:
                val = [int(a) for a in val.split(",")]
            except ValueError as exc:
                raise UsageError(f"malformed partition {val!r}") from exc
        elif key == "t_grid":
            val = _parse_grid(val)
        cfg[key] = val
    cfg.setdefault("manifold", None)
    return cfg


def _run(command, config, **flags):
    flags["random"] = flags.pop("random_")
    flags["format"] = flags.pop("fmt")
    try:
        cfg = _merge(config, flags)
        if cfg["manifold"] is None:
            raise UsageError("no manifold given (--manifold or config)")
        code, text = execute(command, cfg)
    except UsageError as exc:
        msg = {"error": str(exc), "diagnostics": exc.diagnostics}
        click.echo(dumps(msg), err=True)
        sys.exit(EXIT_USAGE)
    except (OffManifoldError, MembershipError) as exc:
        click.echo(dumps({"error": str(exc)}), err=True)
        sys.exit(EXIT_USAGE)
    except IntegrationError as exc:
        click.echo(dumps({"error": str(exc)}), err=True)
        sys.exit(EXIT_FAIL)
    out = cfg.get("out")
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Numerical Riemannian geometry verification harness."""


def _make(name, doc):
    @_options
    def cmd(config, **flags):
        _run(name, config, **flags)
    cmd.__doc__ = doc
    return main.command(name)(cmd)


_make("check", "Run all applicable invariant suites.")
_make("curvature", "Curvature variants on given or random tangent triples.")
_make("geodesic", "Geodesic table on a t-grid.")
_make("jacobi", "Jacobi fields on a t-grid (closed form / FD / ODE).")
_make("natmetric", "Christoffel components of the natural metrics.")


if __name__ == "__main__":  # pragma: no cover
    main()
