"""Command-line pipeline: generate, approximate, solve, pack, uniformize.

One flat JSON config per run.  Artifacts are JSON (plus OFF meshes and CSV
companions) written atomically into the output directory; floats are
serialized at fixed precision so identical config + seed reproduces every
report byte for byte.  Wall-clock numbers live in a separate timings file
that is deliberately excluded from that guarantee.

Exit codes: 0 success, 2 bad configuration, 3 missing/ill-formed data,
4 numerical failure.  Every nonzero exit prints one machine-readable JSON
error object to stdout.
"""

import argparse
import json
import math
import os
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import (
    BadAlpha,
    BadRadius,
    ConfigInvalid,
    EmptyGraph,
    FileMissing,
    LevelTooDeep,
    MetricSphereError,
    NonManifoldEdge,
    NotASphereMesh,
    NotATriangulation,
    NotConnected,
    UnknownVertex,
)
from .approx import (
    ApproximationLadder,
    build_approximation,
    complex_approximation,
    approximation_to_json,
    mesh_size,
    vertex_set_of,
)
from .modulus import mod_q
from .packing import check_packing, pack_triangulation
from .spaces import (
    alpha_patch_sphere,
    bilipschitz_warp,
    read_off,
    round_sphere,
    snowball,
    snowball_mesh,
    snowball_space,
    snowball_to_json,
    write_off,
)
from .uniformize import distortion_fit, suff_condition_scan, uniformize_level

_DATA_ERRORS = (FileMissing, NotASphereMesh, NonManifoldEdge,
                NotATriangulation, UnknownVertex, LevelTooDeep, EmptyGraph,
                NotConnected, BadAlpha, BadRadius)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Flat per-run configuration; unknown keys are rejected on load."""

    space: dict
    levels: tuple = (1, 2)
    q: float = 2.0
    lam: float = 2.0
    seed: int = 0
    tol: float = 1e-7
    out: str = "run"
    pairs: int = 4
    ball_count: int = 6
    tuples: int = 400

    def validate(self):
        if not isinstance(self.space, dict) or (
                "generator" not in self.space and "mesh" not in self.space):
            raise ConfigInvalid("space needs a 'generator' or a 'mesh' path")
        a, b = self.levels
        if not (isinstance(a, int) and isinstance(b, int) and 0 <= a <= b):
            raise ConfigInvalid(f"levels must be integers 0 <= a <= b, got {self.levels}")
        if not self.q >= 1.0:
            raise ConfigInvalid(f"exponent q must be >= 1, got {self.q}")
        if not self.lam > 1.0:
            raise ConfigInvalid(f"dilation lambda must exceed 1, got {self.lam}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigInvalid(f"seed must be a nonnegative integer, got {self.seed}")
        if not 0.0 < self.tol < 1.0:
            raise ConfigInvalid(f"tol must lie in (0, 1), got {self.tol}")
        for name in ("pairs", "ball_count"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ConfigInvalid(f"{name} must be a positive integer, got {v}")
        if not (isinstance(self.tuples, int) and self.tuples >= 16):
            raise ConfigInvalid(f"tuples must be an integer >= 16, got {self.tuples}")
        _validate_space(self.space)
        return self

    def echo(self):
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["levels"] = list(self.levels)
        doc["lambda"] = doc.pop("lam")
        return doc


_SPACE_KEYS = {
    "round_sphere": set(),
    "snowball": set(),
    "alpha_patch_sphere": {"alpha", "cap_radius"},
    "bilipschitz_warp": {"L", "bumps"},
}


def _validate_space(sp):
    if "mesh" in sp:
        extra = set(sp) - {"mesh"}
        if extra:
            raise ConfigInvalid(f"unknown space keys {sorted(extra)}")
        return
    gen = sp["generator"]
    if gen not in _SPACE_KEYS:
        raise ConfigInvalid(f"unknown generator {gen!r}; "
                            f"choose from {sorted(_SPACE_KEYS)}")
    extra = set(sp) - {"generator", "cover_factor"} - _SPACE_KEYS[gen]
    if extra:
        raise ConfigInvalid(f"unknown keys {sorted(extra)} for generator {gen}")
    if gen == "alpha_patch_sphere" and "alpha" not in sp:
        raise ConfigInvalid("alpha_patch_sphere needs 'alpha'")
    if gen == "bilipschitz_warp" and "L" not in sp:
        raise ConfigInvalid("bilipschitz_warp needs 'L'")


def parse_levels(text):
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise ConfigInvalid(f"levels must look like 'a..b', got {text!r}")


def load_config(path, overrides=None):
    """Read, override, and validate a run configuration file."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise FileMissing(f"config file {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid("config must be a JSON object")
    if "lambda" in doc:
        doc["lam"] = doc.pop("lambda")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
    if "space" not in doc:
        raise ConfigInvalid("config needs a 'space' entry")
    if "levels" in doc:
        lv = doc["levels"]
        if isinstance(lv, str):
            doc["levels"] = parse_levels(lv)
        elif isinstance(lv, (list, tuple)) and len(lv) == 2:
            doc["levels"] = (lv[0], lv[1])
        else:
            raise ConfigInvalid(f"levels must be [a, b] or 'a..b', got {lv!r}")
    cfg = RunConfig(**doc)
    for key, val in (overrides or {}).items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg.validate()


# --------------------------------------------------------------------------
# serialization helpers
# --------------------------------------------------------------------------

def _fixed(obj):
    """Recursively canonicalize for byte-stable JSON: floats at 12
    significant digits, numpy converted, non-finite values as strings."""
    if isinstance(obj, dict):
        return {str(k): _fixed(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fixed(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_fixed(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if not math.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return float(f"{x:.12g}") + 0.0
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _atomic_text(path, text):
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path, obj):
    _atomic_text(path, json.dumps(_fixed(obj), sort_keys=True,
                                  separators=(",", ":"), allow_nan=False) + "\n")


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for c in row:
            if isinstance(c, (float, np.floating)):
                cells.append("" if not math.isfinite(c) else f"{float(c):.12g}")
            else:
                cells.append("" if c is None else str(c))
        lines.append(",".join(cells))
    _atomic_text(path, "\n".join(lines) + "\n")


def _stamp(cfg):
    from metricsphere import __version__

    return {"version": __version__, "seed": cfg.seed, "config": cfg.echo()}


# --------------------------------------------------------------------------
# space bundles
# --------------------------------------------------------------------------

@dataclass
class SpaceBundle:
    """Everything a pipeline stage needs: the sample space, a per-level
    approximation builder, and the finest triangulation for packing."""

    kind: str
    space: object
    build: object              # level -> KApproximation
    finest_triangles: np.ndarray
    mesh: object = None
    extra_artifacts: dict = field(default_factory=dict)


def make_bundle(cfg):
    sp = cfg.space
    a, b = cfg.levels
    cf = sp.get("cover_factor")

    if "mesh" in sp:
        mesh = read_off(sp["mesh"])
        Z = mesh.space()
        if b > mesh.levels:
            raise ConfigInvalid(f"mesh file has levels 0..{mesh.levels}")
        kw = {"cover_factor": cf} if cf else {}
        return SpaceBundle("off", Z,
                           lambda lv: build_approximation(mesh, lv, space=Z, **kw),
                           mesh.triangles(b), mesh=mesh)

    gen = sp["generator"]
    if gen == "round_sphere":
        mesh = round_sphere(b)
        Z = mesh.space()
        kw = {"cover_factor": cf} if cf else {}
        return SpaceBundle("round", Z,
                           lambda lv: build_approximation(mesh, lv, space=Z, **kw),
                           mesh.triangles(b), mesh=mesh)

    if gen == "bilipschitz_warp":
        mesh = bilipschitz_warp(round_sphere(b), float(sp["L"]),
                                seed=cfg.seed, bumps=int(sp.get("bumps", 4)))
        Z = mesh.space()
        kw = {"cover_factor": cf} if cf else {}
        return SpaceBundle("warp", Z,
                           lambda lv: build_approximation(mesh, lv, space=Z, **kw),
                           mesh.triangles(b), mesh=mesh)

    if gen == "alpha_patch_sphere":
        aps = alpha_patch_sphere(float(sp["alpha"]), b,
                                 cap_radius=float(sp.get("cap_radius", 0.6)))
        kw = {"cover_factor": cf} if cf else {"cover_factor": 1.6}
        return SpaceBundle("alpha", aps.space,
                           lambda lv: build_approximation(aps.mesh, lv,
                                                          space=aps.space, **kw),
                           aps.mesh.triangles(b), mesh=aps.mesh)

    cx = snowball(b)
    sample = snowball_space(cx)
    smesh = snowball_mesh(cx)
    kw = {"cover_factor": cf} if cf else {}
    return SpaceBundle("snowball", sample.space,
                       lambda lv: complex_approximation(cx, lv, sample, **kw),
                       smesh.triangles(), mesh=smesh,
                       extra_artifacts={"snowball.json": snowball_to_json(cx)})


def make_ladder(cfg, bundle):
    a, b = cfg.levels
    return ApproximationLadder([bundle.build(lv) for lv in range(a, b + 1)])


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_gen(cfg, out):
    bundle = make_bundle(cfg)
    Z = bundle.space
    mesh = bundle.mesh
    off_path = out / "mesh.off"
    tmp = off_path.with_name(".mesh.off.tmp")
    write_off(tmp, mesh.coords, bundle.finest_triangles)
    os.replace(tmp, off_path)
    for name, text in bundle.extra_artifacts.items():
        _atomic_text(out / name, text + "\n")
    write_json(out / "space.json", {
        "stamp": _stamp(cfg), "kind": bundle.kind, "n_points": Z.n,
        "diameter": Z.diam, "mesh_file": "mesh.off",
        "n_triangles": int(len(bundle.finest_triangles)),
        "extra": sorted(bundle.extra_artifacts),
    })
    return 0


def cmd_approx(cfg, out):
    bundle = make_bundle(cfg)
    ladder = make_ladder(cfg, bundle)
    a, _ = cfg.levels
    summary = []
    for off, A in enumerate(ladder.levels):
        write_json(out / f"approx_{a + off}.json",
                   json.loads(approximation_to_json(A)))
        summary.append({"level": a + off, "n_vertices": A.graph.n,
                        "k": A.k_report, "mesh": mesh_size(A),
                        "max_valence": A.graph.max_valence})
    write_json(out / "k_report.json",
               {"stamp": _stamp(cfg), "levels": summary,
                "k_bound": ladder.k_bound})
    return 0


def _sample_ball_pairs(cfg, Z, finest):
    """Seeded far-apart ball pairs at twice the finest mesh scale."""
    rng = np.random.default_rng(cfg.seed)
    radius = 2.0 * mesh_size(finest)
    base = np.asarray(finest.p, dtype=int)
    out = []
    for _ in range(cfg.pairs):
        a = int(base[rng.integers(len(base))])
        d = Z.dist_row(a)
        cands = base[rng.integers(len(base), size=16)]
        b = int(cands[np.argmax(d[cands])])
        out.append((a, b, Z.near(a, radius), Z.near(b, radius)))
    return radius, out


def cmd_modulus(cfg, out):
    bundle = make_bundle(cfg)
    ladder = make_ladder(cfg, bundle)
    Z = bundle.space
    a0, _ = cfg.levels
    radius, ball_pairs = _sample_ball_pairs(cfg, Z, ladder.levels[-1])
    table = []
    for idx, (a, b, E, F) in enumerate(ball_pairs):
        for off, A in enumerate(ladder.levels):
            row = {"pair": idx, "center_a": a, "center_b": b,
                   "level": a0 + off}
            VE, VF = vertex_set_of(E, A), vertex_set_of(F, A)
            if len(VE) == 0 or len(VF) == 0 or len(np.intersect1d(VE, VF)):
                row.update(status="unresolved", value=None,
                           lower_bound=None, rounds=0)
            else:
                r = mod_q(A.graph, VE, VF, cfg.q, tol=cfg.tol)
                row.update(status=r.status,
                           value=(None if not math.isfinite(r.value)
                                  else r.value),
                           lower_bound=r.lower_bound, rounds=r.rounds)
            table.append(row)
    scan = suff_condition_scan(Z, ladder, cfg.lam, ball_count=cfg.ball_count,
                               seed=cfg.seed, q=cfg.q)
    write_json(out / "modulus.json", {
        "stamp": _stamp(cfg), "q": cfg.q, "lambda": cfg.lam,
        "ball_radius": radius, "table": table,
        "scan": {"c_hat": scan.c_hat,
                 "flagged_fraction": scan.flagged_fraction,
                 "traces": [{"center": t.center, "radius": t.radius,
                             "values": t.values, "resolved": t.resolved,
                             "flagged": t.flagged,
                             "last_over_first": t.last_over_first}
                            for t in scan.traces]},
    })
    write_csv(out / "modulus.csv",
              ["pair", "level", "status", "value", "lower_bound", "rounds"],
              [(r["pair"], r["level"], r["status"], r["value"],
                r["lower_bound"], r["rounds"]) for r in table])
    write_csv(out / "annulus_traces.csv",
              ["center", "radius", "level_offset", "value", "resolved"],
              [(t.center, t.radius, j, v, int(ok))
               for t in scan.traces
               for j, (v, ok) in enumerate(zip(t.values, t.resolved))])
    return 0


def cmd_pack(cfg, out):
    bundle = make_bundle(cfg)
    P = pack_triangulation(bundle.finest_triangles, tol=min(cfg.tol, 1e-9))
    tangency, overlap = check_packing(P)
    write_json(out / "packing.json", {
        "stamp": _stamp(cfg), "n_caps": P.n,
        "centers": P.centers, "radii": P.radii,
        "triangles": bundle.finest_triangles,
        "tangency_residual": tangency, "max_overlap": overlap,
        "meta": {k: v for k, v in P.meta.items()
                 if isinstance(v, (int, float, str))},
    })
    return 0


def _uniformize_source(cfg, bundle):
    """Finest approximation that carries a triangulation.

    Snowball ladders live on the square-adjacency graph, so the map is
    built from the center-split mesh of the same sample instead.
    """
    if bundle.kind == "snowball":
        return build_approximation(bundle.mesh, bundle.mesh.levels,
                                   space=bundle.space, cover_factor=1.6,
                                   verify=False)
    return bundle.build(cfg.levels[1])


def cmd_uniformize(cfg, out):
    bundle = make_bundle(cfg)
    A = _uniformize_source(cfg, bundle)
    dm, P = uniformize_level(A, tol=min(cfg.tol, 1e-9))
    rep = distortion_fit(dm, tuples=cfg.tuples, seed=cfg.seed)
    write_json(out / "map.json", {
        "stamp": _stamp(cfg), "level": cfg.levels[1],
        "triple": list(dm.triple), "mesh_bound": dm.mesh_bound,
        "packing_residual": P.tangency_residual,
        "domain": dm.domain, "images": dm.images,
    })
    ex, ey = rep.envelope
    bx, by = rep.envelope_back
    qx, qy = rep.qs_envelope
    write_json(out / "distortion.json", {
        "stamp": _stamp(cfg), "n_tuples": rep.n_tuples,
        "envelope": {"t": ex, "value": ey},
        "envelope_back": {"t": bx, "value": by},
        "qs_envelope": {"t": qx, "value": qy},
        "identity_gap_mid": rep.identity_gap(0.1, 10.0),
    })
    write_csv(out / "crossratios.csv", ["cr_in", "cr_out"],
              list(zip(rep.cr_in, rep.cr_out)))
    return 0


def cmd_verify(cfg, out):
    bundle = make_bundle(cfg)
    Z = bundle.space
    suites = {}

    rng = np.random.default_rng(cfg.seed)
    m = min(Z.n, 64)
    ids = rng.choice(Z.n, size=m, replace=False)
    D = Z.cross_dists(ids, ids)
    tri_slack = float((D[:, :, None] + D[None, :, :] - D[:, None, :]).min())
    suites["metric"] = {"ok": bool(tri_slack >= -1e-9),
                        "triangle_slack": tri_slack,
                        "symmetric": bool(np.allclose(D, D.T, atol=1e-12))}

    try:
        ladder = make_ladder(cfg, bundle)
        suites["approximation"] = {
            "ok": True,
            "k": [A.k_report for A in ladder.levels],
            "mesh_sizes": ladder.mesh_sizes()}
    except MetricSphereError as exc:
        ladder = None
        suites["approximation"] = {"ok": False, "error": type(exc).__name__,
                                   "message": str(exc)}

    try:
        P = pack_triangulation(bundle.finest_triangles, tol=1e-9)
        tangency, overlap = check_packing(P)
        suites["packing"] = {"ok": bool(tangency <= 1e-5
                                        and overlap <= 1e-7
                                        and P.radii.max() < np.pi / 2),
                             "tangency_residual": tangency,
                             "max_overlap": overlap,
                             "max_radius": float(P.radii.max())}
    except MetricSphereError as exc:
        suites["packing"] = {"ok": False, "error": type(exc).__name__,
                             "message": str(exc)}

    if ladder is not None:
        try:
            dm, _ = uniformize_level(_uniformize_source(cfg, bundle),
                                     tol=1e-9)
            rep = distortion_fit(dm, tuples=min(cfg.tuples, 400),
                                 seed=cfg.seed)
            ex, ey = rep.envelope
            dominated = bool(np.all(
                rep.cr_out <= np.interp(rep.cr_in, ex, ey) + 1e-9))
            suites["distortion"] = {"ok": dominated and bool(
                np.all(np.diff(ey) >= -1e-15)),
                "n_tuples": rep.n_tuples}
        except MetricSphereError as exc:
            suites["distortion"] = {"ok": False, "error": type(exc).__name__,
                                    "message": str(exc)}

    all_ok = all(s.get("ok") for s in suites.values())
    write_json(out / "verify.json", {"stamp": _stamp(cfg), "ok": all_ok,
                                     "suites": suites})
    if not all_ok:
        failing = sorted(k for k, s in suites.items() if not s.get("ok"))
        print(json.dumps({"error": "VerifyFailed", "exit_code": 4,
                          "message": f"failing suites: {', '.join(failing)}"},
                         sort_keys=True))
        return 4
    return 0


_REPORT_PARTS = ("space.json", "k_report.json", "modulus.json",
                 "packing.json", "map.json", "distortion.json", "verify.json")


def cmd_report(cfg, out):
    parts = {}
    for name in _REPORT_PARTS:
        path = out / name
        if path.exists():
            doc = json.loads(path.read_text())
            doc.pop("stamp", None)
            parts[name.removesuffix(".json")] = doc
    write_json(out / "report.json", {
        "stamp": _stamp(cfg), "stages": parts,
        "timings_file": "timings.json",
    })
    return 0


_DISPATCH = {
    "gen": cmd_gen, "approx": cmd_approx, "modulus": cmd_modulus,
    "pack": cmd_pack, "uniformize": cmd_uniformize, "verify": cmd_verify,
    "report": cmd_report,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(
        prog="msphere",
        description="Metric-sphere approximation, modulus, and packing "
                    "pipeline.")
    ap.add_argument("verb", choices=sorted(_DISPATCH))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--levels", default=None, metavar="a..b")
    ap.add_argument("--q", type=float, default=None)
    ap.add_argument("--lambda", dest="lam", type=float, default=None)
    return ap


def _record_timing(out, verb, elapsed):
    path = out / "timings.json"
    doc = {}
    if path.exists():
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError:
            doc = {}
    doc[verb] = round(elapsed, 6)
    _atomic_text(path, json.dumps(doc, sort_keys=True) + "\n")


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        overrides = {"seed": args.seed, "out": args.out, "q": args.q,
                     "lam": args.lam}
        if args.levels is not None:
            overrides["levels"] = parse_levels(args.levels)
        cfg = load_config(args.config, overrides)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        code = _DISPATCH[args.verb](cfg, out)
        _record_timing(out, args.verb, time.perf_counter() - t0)
        return code
    except ConfigInvalid as exc:
        print(json.dumps({"error": type(exc).__name__, "exit_code": 2,
                          "message": str(exc)}, sort_keys=True))
        return 2
    except _DATA_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "exit_code": 3,
                          "message": str(exc)}, sort_keys=True))
        return 3
    except MetricSphereError as exc:
        print(json.dumps({"error": type(exc).__name__, "exit_code": 4,
                          "message": str(exc)}, sort_keys=True))
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
