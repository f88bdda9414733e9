"""Batch experiment runner.

    abcrack <kind> [--config cfg.json] [--set key=value ...] [--out DIR]
    abcrack plot DIR --what {branches,cones,g}

``kind`` is one of spectrum, branch, cones, gtable, validate-disk, predict.
Every run writes ``effective-config.json`` (all defaults filled in), its
CSV/JSON outputs and ``manifest.json`` with content hashes.  Solves are
cached under ``DIR/.cache`` so reruns of an unchanged config reuse them.

Exit status: 0 when all asserted properties pass, 2 when inconclusive
verdicts are present, 1 on errors or failed properties.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__

KINDS = ("spectrum", "branch", "cones", "gtable", "validate-disk", "predict")

DEFAULTS = {
    "kind": "spectrum",
    "domain": {"kind": "disk", "radius": 1.0},
    "crack": True,
    "alpha": [0.0],
    "t_grid": {"max": 0.2, "min": 0.05, "count": 6},
    "t_probe": [0.05],
    "window": None,
    "h": 0.04,
    "h_levels": [0.04, 0.02],
    "grading_exponent": 2.0,
    "s_a_resolution": 10.0,
    "symmetric": False,
    "count": 6,
    "clusters": 3,
    "k": 1,
    "zeta_count": 17,
    "radii": [8.0, 16.0, 32.0],
    "blowup_h": [0.0625, 0.03125],
    "alpha_count": 16,
    "extraction_radii": None,
    "tolerances": {"solver": 1e-9, "cluster": 1e-6, "window": 2e-2, "spectrum_rel": 5e-3,
                   "cluster_gap_rel": 1e-2, "slope_rel": 0.15},
    "output": "abcrack-out",
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if key == "t_grid" and isinstance(val, list):
            out[key] = [float(t) for t in val]
        elif isinstance(base[key], dict) and key != "domain":
            if not isinstance(val, dict):
                raise ConfigError(f"{path + key} must be an object")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, sets) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in sets or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        parts = key.split(".")
        node = cfg
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                raise ConfigError(f"unknown config key {key!r}")
            node = node[p]
        if parts[-1] not in node and parts[0] != "domain":
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = _parse_value(val)
    return cfg


def load_config(doc: dict | None = None, kind: str | None = None, sets=()) -> dict:
    """Merge a config document over the defaults; unknown keys are rejected."""
    cfg = _merge(DEFAULTS, doc or {})
    if kind is not None:
        cfg["kind"] = kind
    cfg = apply_overrides(cfg, sets)
    cfg = _merge(DEFAULTS, cfg)
    if cfg["kind"] not in KINDS:
        raise ConfigError(f"unknown experiment kind {cfg['kind']!r}")
    if cfg["kind"] == "validate-disk":
        cfg["domain"] = {"kind": "disk", "radius": 1.0}
    from .geometry import DomainSpec

    DomainSpec.from_dict(cfg["domain"])  # validates the domain keys
    if any(t <= 0 for t in t_values(cfg)):
        raise ConfigError("t_grid values must be positive")
    return cfg


def t_values(cfg: dict) -> list[float]:
    tg = cfg["t_grid"]
    if isinstance(tg, list):
        return sorted((float(t) for t in tg), reverse=True)
    return [float(t) for t in np.geomspace(tg["max"], tg["min"], int(tg["count"]))]


# --------------------------------------------------------------------------
# artifacts and cache


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ArtifactWriter:
    """Single writer for an output directory; records hashes for the manifest."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write_text(self, name: str, text: str) -> Path:
        data = text.encode()
        path = self.root / name
        path.write_bytes(data)
        self.files[name] = sha256_bytes(data)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def manifest(self, cfg: dict) -> dict:
        import scipy

        try:
            from importlib.metadata import version

            tri_version = version("triangle")
        except Exception:  # pragma: no cover - metadata missing
            tri_version = "unknown"
        cfg_bytes = json.dumps(cfg, sort_keys=True).encode()
        return {
            "config_sha256": sha256_bytes(cfg_bytes),
            "files": dict(sorted(self.files.items())),
            "versions": {"abcrack": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "triangle": tri_version, "python": platform.python_version()},
        }


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not serializable: {type(o)}")


class SolveCache:
    """Eigenvalue cache keyed by (module, parameters, code version)."""

    def __init__(self, root: Path):
        self.root = Path(root) / ".cache"
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def _path(self, module: str, params: dict) -> Path:
        key = json.dumps({"module": module, "params": params, "version": __version__}, sort_keys=True,
                         default=_json_default)
        return self.root / f"{module}-{sha256_bytes(key.encode())[:24]}.npz"

    def get(self, module: str, params: dict, compute):
        path = self._path(module, params)
        if path.exists():
            self.hits += 1
            with np.load(path) as z:
                return {k: z[k] for k in z.files}
        self.misses += 1
        arrays = compute()
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
        return arrays


# --------------------------------------------------------------------------
# experiments


def _domain(cfg):
    from .geometry import DomainSpec, build_domain

    return build_domain(DomainSpec.from_dict(cfg["domain"]))


def _policy(cfg, h=None):
    from .branch import HPolicy

    return HPolicy(h=float(cfg["h"] if h is None else h), grading_exponent=float(cfg["grading_exponent"]),
                   s_a_resolution=float(cfg["s_a_resolution"]), symmetric=bool(cfg["symmetric"]))


def _cached_eigs(cache: SolveCache, cfg, domain, alpha, t, count, policy, crack=True):
    from .branch import solve_at
    from .fem import Discretization
    from .geometry import generate_mesh

    params = {"domain": cfg["domain"], "alpha": float(alpha), "t": float(t), "count": int(count),
              "policy": [policy.h, policy.grading_exponent, policy.s_a_resolution, policy.symmetric],
              "crack": bool(crack)}

    def compute():
        if crack:
            pairs, _ = solve_at(domain, alpha, t, count, policy)
        else:
            mesh = generate_mesh(domain, None, policy.h, policy.grading_exponent)
            pairs = Discretization.build(mesh).eigs(count)
        return {"lam": np.array([p.lam for p in pairs]), "res": np.array([p.residual for p in pairs])}

    return cache.get("eigs", params, compute)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def run_spectrum(cfg, out: ArtifactWriter, cache: SolveCache) -> dict:
    from .fem import clusters, richardson

    dom = _domain(cfg)
    alpha = float(cfg["alpha"][0])
    levels = [float(h) for h in cfg["h_levels"]]
    count = int(cfg["count"])
    per_level = []
    for h in levels:
        r = _cached_eigs(cache, cfg, dom, alpha, 0.0, count, _policy(cfg, h), crack=bool(cfg["crack"]))
        per_level.append(r["lam"][:count])
    n = min(len(v) for v in per_level)
    ext = (richardson(per_level[-2][:n], per_level[-1][:n]) if len(levels) >= 2 else per_level[-1][:n])
    groups = clusters(ext, cfg["tolerances"]["window"])
    gid = np.zeros(n, dtype=int)
    for i, g in enumerate(groups):
        gid[g] = i
    rows = [[i] + [float(v[i]) for v in per_level] + [float(ext[i]), int(gid[i])] for i in range(n)]
    header = ["index"] + [f"lambda_h{h!r}" for h in levels] + ["lambda_extrap", "cluster"]
    out.write_text("spectrum.csv", _csv(header, rows))
    return {"passed": True, "properties": {}}


def run_validate_disk(cfg, out: ArtifactWriter, cache: SolveCache) -> dict:
    from .disk_oracle import disk_spectrum, spectrum_rows
    from .fem import richardson

    dom = _domain(cfg)
    levels = [float(h) for h in cfg["h_levels"]]
    ncl = int(cfg["clusters"])
    count = 2 * ncl
    exact = disk_spectrum(ncl)
    per_level = [_cached_eigs(cache, cfg, dom, float(cfg["alpha"][0]), 0.0, count, _policy(cfg, h))["lam"][:count]
                 for h in levels]
    ext = richardson(per_level[-2], per_level[-1]) if len(levels) >= 2 else per_level[-1]
    tol = cfg["tolerances"]
    rows, ok = [], True
    for c in range(ncl):
        lam_ex, k, n = exact[2 * c]
        pair = ext[2 * c: 2 * c + 2]
        mean = float(np.mean(pair))
        rel = abs(mean - lam_ex) / lam_ex
        gap = float(abs(pair[1] - pair[0]) / mean)
        good = rel <= tol["spectrum_rel"] and gap <= tol["cluster_gap_rel"]
        ok &= good
        rows.append([c + 1, k, n, float(lam_ex), mean, rel, gap, "pass" if good else "fail"])
    out.write_text("validate-disk.csv", _csv(["cluster", "k", "n", "lambda_exact", "lambda_fem", "rel_err",
                                               "gap_rel", "status"], rows))
    out.write_text("disk-spectrum.csv", _csv(["lambda", "k", "n", "mult"], spectrum_rows(ncl)))
    return {"passed": bool(ok), "properties": {"disk-spectrum": bool(ok)}}


def run_gtable(cfg, out: ArtifactWriter, cache: SolveCache) -> dict:
    from .blowup import ExtrapolatedG, extrapolate_G, g_property_suite, gtable_csv, gtable_rows, zeta0

    k = int(cfg["k"])
    params = {"k": k, "radii": cfg["radii"], "hs": cfg["blowup_h"], "mu": cfg["grading_exponent"]}

    def compute():
        g = extrapolate_G(k, radii=cfg["radii"], hs=cfg["blowup_h"], grading_exponent=cfg["grading_exponent"])
        keys = sorted(g.table)
        return {"keys": np.array(keys), "table": np.array([g.table[kk] for kk in keys]),
                "coeffs": np.array(g.coeffs), "coeffs_R": np.array(g.coeffs_R_only),
                "coeffs_coarse": np.array(g.coeffs_coarse),
                "expo": np.array([g.r_exponents[h] for h in sorted(g.r_exponents, reverse=True)])}

    z = cache.get("gtable", params, compute)
    radii = tuple(sorted(float(r) for r in cfg["radii"]))
    hs = tuple(sorted((float(h) for h in cfg["blowup_h"]), reverse=True))
    table = {(float(a), float(b)): tuple(map(float, row)) for (a, b), row in zip(z["keys"], z["table"])}
    expo = {h: tuple(map(float, e)) for h, e in zip(hs, z["expo"])}
    g = ExtrapolatedG(k=k, coeffs=tuple(map(float, z["coeffs"])), coeffs_R_only=tuple(map(float, z["coeffs_R"])),
                      coeffs_coarse=tuple(map(float, z["coeffs_coarse"])), radii=radii, hs=hs, table=table,
                      r_exponents=expo, exponent_warning=any(abs(e - 1.0) > 0.5 for ex in expo.values() for e in ex))
    zetas = np.linspace(0.0, math.pi, int(cfg["zeta_count"]))
    out.write_text("gtable.csv", gtable_csv(gtable_rows(g, zetas)))
    props = {k_: bool(v) for k_, v in g_property_suite(g).items() if not k_.startswith("_")}
    summary = {"k": k, "properties": props, "zeta0": zeta0(g), "coefficients": list(g.coeffs),
               "r_exponents": {repr(h): list(e) for h, e in expo.items()},
               "exponent_warning": g.exponent_warning}
    out.write_json("gtable-summary.json", summary)
    return {"passed": all(props.values()), "properties": props}


def _trace(cfg, cache, dom, alpha, window, policy):
    from .branch import BranchSample

    samples = []
    for t in t_values(cfg):
        r = _cached_eigs(cache, cfg, dom, alpha, t, window.N + 2, policy)
        for j in window.indices:
            samples.append(BranchSample(alpha=float(alpha), t=float(t), j=j, lam=float(r["lam"][j]),
                                        residual=float(r["res"][j]), h=policy.h))
    return samples


def _window(cfg, cache, dom, alpha, policy):
    from .branch import Window
    from .fem import clusters

    r = _cached_eigs(cache, cfg, dom, alpha, 0.0, 10, policy)
    lams = list(r["lam"])
    tol = cfg["tolerances"]["window"]
    N = cfg["window"]
    for g in clusters(lams, tol):
        if len(g) == 2 and (N is None or g[0] == int(N)):
            a, b = lams[g[0]], lams[g[1]]
            return Window(N=g[0], lam0=0.5 * (a + b), gap0=b - a, values0=(a, b))
    from .branch import BranchError

    raise BranchError("window misidentification: no double eigenvalue at t = 0")


def run_branch(cfg, out: ArtifactWriter, cache: SolveCache) -> dict:
    from .branch import FitError, branch_csv, fit_window

    dom = _domain(cfg)
    policy = _policy(cfg)
    all_samples, report = [], {"fits": {}}
    ok = True
    for alpha in cfg["alpha"]:
        w = _window(cfg, cache, dom, float(alpha), policy)
        s = _trace(cfg, cache, dom, float(alpha), w, policy)
        all_samples += s
        try:
            lo, hi = fit_window(s, w, cfg["tolerances"]["solver"])
            report["fits"][repr(float(alpha))] = {"window": w.__dict__ | {"values0": list(w.values0)},
                                                 "lower": lo.to_dict(), "upper": hi.to_dict(),
                                                 "opposite_signs": lo.coeff_limit * hi.coeff_limit < 0}
        except FitError as exc:
            ok = False
            report["fits"][repr(float(alpha))] = {"error": str(exc)}
    out.write_text("branch.csv", branch_csv(all_samples))
    out.write_json("branch-report.json", report)
    return {"passed": ok, "properties": {"fits": ok}}


def run_cones(cfg, out: ArtifactWriter, cache: SolveCache) -> dict:
    from .branch import BifurcationReport, FitError, _shift_invariant, classify_gap, fit_window, split_intervals

    dom = _domain(cfg)
    policy = _policy(cfg)
    k = int(cfg["k"])
    period = 2 * math.pi / k
    alphas = [i * period / int(cfg["alpha_count"]) for i in range(int(cfg["alpha_count"]))]
    w = _window(cfg, cache, dom, 0.0, policy)
    t_min = min(float(t) for t in cfg["t_probe"])
    verdicts = []
    for a in alphas:
        r = _cached_eigs(cache, cfg, dom, a, t_min, w.N + 2, policy)
        verdicts.append(classify_gap(a, float(r["lam"][w.N]), float(r["lam"][w.N + 1]), w,
                                     cfg["tolerances"]["solver"]))
    statuses = [v.status for v in verdicts]
    rep = BifurcationReport(verdicts=verdicts, intervals=split_intervals(alphas, [v.split for v in verdicts]),
                            period=period, periodic=_shift_invariant(alphas, statuses, math.pi / k, period),
                            window=w)
    for tag in sorted(dom.symmetry):
        if tag.startswith("rotation:") and tag != "rotation:any":
            ell = int(tag.split(":")[1])
            rep.rotation_invariant[tag] = _shift_invariant(alphas, statuses, 2 * math.pi / ell, period)
    fits_ok = True
    for alpha in cfg["alpha"]:
        s = _trace(cfg, cache, dom, float(alpha), w, policy)
        try:
            lo, hi = fit_window(s, w, cfg["tolerances"]["solver"])
            rep.fits[repr(float(alpha))] = {"lower": lo.to_dict(), "upper": hi.to_dict(),
                                           "opposite_signs": bool(lo.coeff_limit * hi.coeff_limit < 0)}
        except FitError as exc:
            fits_ok = False
            rep.fits[repr(float(alpha))] = {"error": str(exc)}
    out.write_text("cones.json", rep.to_json() + "\n")
    props = {"fits": fits_ok, "periodic": rep.periodic is not False}
    return {"passed": all(props.values()), "inconclusive": rep.inconclusive, "properties": props}


def run_predict(cfg, out: ArtifactWriter, cache: SolveCache) -> dict:
    from .blowup import compute_C, extrapolate_G, r_matrix_extrapolated
    from .branch import fit_window, predict_vs_measure, solve_at
    from .localexp import P1Function, canonicalize_pair

    dom = _domain(cfg)
    policy = _policy(cfg)
    tol = cfg["tolerances"]
    records, ok = [], True
    for alpha in cfg["alpha"]:
        alpha = float(alpha)
        w = _window(cfg, cache, dom, alpha, policy)
        pairs, disc = solve_at(dom, alpha, 0.0, w.N + 2, policy)
        f1 = P1Function(disc.mesh, disc.full(pairs[w.N]))
        f2 = P1Function(disc.mesh, disc.full(pairs[w.N + 1]))
        radii = cfg["extraction_radii"] or [4 * policy.h, 8 * policy.h]
        case = canonicalize_pair(f1, f2, alpha, float(radii[0]), float(radii[1]))
        g = extrapolate_G(case.first.k, radii=cfg["radii"], hs=cfg["blowup_h"])
        if case.variant == "same-k":
            pred = r_matrix_extrapolated(alpha, (case.first, case.second), g)
        else:
            pred = compute_C(alpha, case.first, g).value
        s = _trace(cfg, cache, dom, alpha, w, policy)
        fits = fit_window(s, w, tol["solver"])
        rec = predict_vs_measure(case, alpha, pred, fits)
        rec["case"] = case.to_dict()
        if case.variant == "same-k":
            rec["R"] = pred.entries.tolist()
        good = all(b["rel_err"] is not None and b["rel_err"] <= tol["slope_rel"] for b in rec["branches"])
        rec["passed"] = bool(good)
        ok &= good
        records.append(rec)
    out.write_json("predict.json", {"records": records})
    return {"passed": bool(ok), "properties": {"slopes": bool(ok)}}


RUNNERS = {"spectrum": run_spectrum, "validate-disk": run_validate_disk, "gtable": run_gtable,
           "branch": run_branch, "cones": run_cones, "predict": run_predict}


def run(cfg: dict, out_dir=None) -> tuple[Path, dict]:
    """Run one experiment; returns the artifact directory and a status dict."""
    root = Path(out_dir if out_dir is not None else cfg["output"])
    writer = ArtifactWriter(root)
    cache = SolveCache(root)
    writer.write_json("effective-config.json", cfg)
    status = RUNNERS[cfg["kind"]](cfg, writer, cache)
    writer.write_json("status.json", {"kind": cfg["kind"], "passed": status["passed"],
                                      "inconclusive": bool(status.get("inconclusive", False)),
                                      "properties": status.get("properties", {})})
    (root / "manifest.json").write_text(json.dumps(writer.manifest(cfg), indent=2, sort_keys=True) + "\n")
    status["cache_hits"] = cache.hits
    status["cache_misses"] = cache.misses
    return root, status


# --------------------------------------------------------------------------
# plots


def _svg_figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "abcrack"
    matplotlib.rcParams["svg.fonttype"] = "none"
    return plt


def plot(artifact_dir, what: str) -> Path:
    """Render ``branches``, ``cones`` or ``g`` from an artifact directory."""
    root = Path(artifact_dir)
    plt = _svg_figure()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if what == "branches":
        src = root / "branch.csv"
        rep = root / "branch-report.json"
        if not src.exists():
            raise FileNotFoundError(f"missing artifact {src}")
        rows = list(csv.DictReader(src.open()))
        fits = json.loads(rep.read_text())["fits"] if rep.exists() else {}
        for key in sorted({r["alpha"] for r in rows}):
            f = fits.get(key, {})
            lam0 = f.get("lower", {}).get("lam0")
            for j in sorted({int(r["j"]) for r in rows}):
                sel = [r for r in rows if r["alpha"] == key and int(r["j"]) == j]
                t = np.array([float(r["t"]) for r in sel])
                lam = np.array([float(r["lambda"]) for r in sel])
                base = lam0 if lam0 is not None else 0.0
                ax.plot(t, lam - base, "o", label=f"alpha={float(key):.3f}, j={j}")
                side = "lower" if j == min(int(r["j"]) for r in rows) else "upper"
                if side in f:
                    tt = np.linspace(t.min(), t.max(), 50)
                    ax.plot(tt, f[side]["coeff"] * tt ** f[side]["k_fit"], "-", lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel("lambda - lambda0")
        ax.legend(fontsize=7)
        name = "branches.svg"
    elif what == "cones":
        src = root / "cones.json"
        if not src.exists():
            raise FileNotFoundError(f"missing artifact {src}")
        rep = json.loads(src.read_text())
        plt.close(fig)
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="polar")
        vs = rep["verdicts"]
        al = np.array([v["alpha"] for v in vs])
        gap = np.array([v["gap"] for v in vs])
        ax.plot(np.append(al, al[0]), np.append(gap, gap[0]), "k.-")
        width = rep["period"] / len(vs)
        for v in vs:
            if v["status"] == "split":
                ax.bar(v["alpha"], max(gap), width=width, alpha=0.2, color="tab:blue")
        name = "cones.svg"
    elif what == "g":
        src = root / "gtable.csv"
        if not src.exists():
            raise FileNotFoundError(f"missing artifact {src}")
        rows = [r for r in csv.DictReader(src.open()) if r["extrapolated"] == "1"]
        z = np.array([float(r["zeta"]) for r in rows])
        val = np.array([float(r["value"]) for r in rows])
        err = np.array([float(r["err_est"]) for r in rows])
        ax.errorbar(z, val, yerr=err, fmt="o-", ms=3)
        ax.axhline(0.0, color="gray", lw=0.5)
        summ = root / "gtable-summary.json"
        if summ.exists():
            z0 = json.loads(summ.read_text()).get("zeta0")
            if z0 is not None:
                ax.axvline(z0, color="tab:red", ls="--", lw=1)
        ax.set_xlabel("zeta")
        ax.set_ylabel("G(zeta)")
        name = "g.svg"
    else:
        raise ValueError(f"unknown plot {what!r}")
    path = root / name
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abcrack", description="Aharonov-Bohm moving-pole experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run a {kind} experiment")
        s.add_argument("--config", type=Path, help="JSON config document")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        s.add_argument("--out", type=Path, help="output directory (overrides 'output')")
    s = sub.add_parser("plot", help="render SVG plots from an artifact directory")
    s.add_argument("artifacts", type=Path)
    s.add_argument("--what", choices=("branches", "cones", "g"), required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            path = plot(args.artifacts, args.what)
            print(path)
            return 0
        doc = json.loads(args.config.read_text()) if args.config else {}
        cfg = load_config(doc, kind=args.command, sets=args.set)
        if args.out is not None:
            cfg["output"] = str(args.out)
        root, status = run(cfg)
    except Exception as exc:  # surface any module error with a non-zero code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"output": str(root), **status}, sort_keys=True, default=_json_default))
    if not status["passed"]:
        return 1
    if status.get("inconclusive"):
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
