"""Stage runner: spectrum -> rellich (functionals) -> packets -> cancellation -> weyl -> report.

Every stage reads what it needs from the output directory, so stages can be
run one at a time from the command line; a stage whose inputs are missing
raises MissingArtifact. Each stage returns a dict of named checks
``{name: {"value", "limit", "pass"}}`` which is also written to disk.
"""

import hashlib
import platform
from pathlib import Path

import numpy as np

from .. import __version__, kernels
from ..analytic import ball_spectrum, disk_spectrum
from ..errors import MissingArtifact
from ..functionals import ModeFunctionals, make_weight, mode_functionals, moment_project
from ..geometry import build_grid, g_bounds
from ..io import (
    FUNCTIONAL_COLUMNS,
    read_analytic_spectrum,
    read_csv,
    read_json,
    read_mps_spectrum,
    write_csv,
    write_json,
    write_mps_coeffs,
    write_spectrum,
)
from ..mps import mps_spectrum
from ..packets import packet_table, rate_fit, threshold_exponent, weyl_fit
from ..special import legendre_table

STAGES = ("spectrum", "rellich", "packets", "cancellation", "weyl", "report")
SANDWICH_SLACK = 1e-9


def _check(value, limit, ok):
    return {"value": value, "limit": limit, "pass": bool(ok)}


def _safe_fit(xs, ys):
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    keep = ys != 0
    if np.count_nonzero(keep) < 5 or np.ptp(xs[keep]) == 0:
        return None
    return rate_fit(xs[keep], ys[keep])


def _fit_dict(fit):
    if fit is None:
        return None
    return {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
            "n_points": fit.n_points, "slope_stderr": fit.slope_stderr}


class Runner:
    def __init__(self, config):
        self.cfg = config
        self.out = Path(config.out_dir)

    # ---- shared helpers -------------------------------------------------
    def path(self, name):
        return self.out / name

    def grid(self):
        return build_grid(self.cfg.domain, self.cfg.grid_nodes)

    def weight_objects(self, grid):
        """Unit weight first, then the configured weights in config order."""
        out = [make_weight(np.ones(grid.n_nodes), grid, level=0, name="unit")]
        for spec in self.cfg.weights:
            if spec["type"] == "trig":
                fn = np.cos if spec["phase"] == "cos" else np.sin
                raw = fn(spec["p"] * grid.params)
            elif spec["type"] == "legendre":
                n_lat, n_lon = grid.shape
                polar = grid.params[::n_lon, 0]
                P = legendre_table(spec["l"], np.cos(polar))[spec["l"], 0]
                raw = np.repeat(P, n_lon)
            else:
                raw = grid.curvature_H - grid.H_bar
            out.append(moment_project(raw, grid, spec["level"], spec["name"]))
        return out

    def load_spectrum(self):
        if self.cfg.method == "analytic":
            return read_analytic_spectrum(self.path("spectrum.csv"), self.cfg.domain)
        if not self.path("spectrum.csv").exists():
            raise MissingArtifact(f"{self.path('spectrum.csv')} not found; run the spectrum stage first")
        return read_mps_spectrum(self.path("mps_coeffs.json"), self.cfg.domain)

    def load_functionals(self, spectrum, weights):
        rows = read_csv(self.path("functionals.csv"))
        by_name = {}
        for r in rows:
            by_name.setdefault(r["weight"], []).append(r)
        out = {}
        for w in weights:
            if w.name not in by_name:
                raise MissingArtifact(f"functionals.csv has no rows for weight {w.name!r}")
            rs = by_name[w.name]
            col = {c: np.array([float(r[c]) for r in rs]) for c in FUNCTIONAL_COLUMNS[2:]}
            out[w.name] = ModeFunctionals(np.array([int(r["k"]) for r in rs]), col["lambda"], col["E"],
                                          col["E_w"], col["E_abs_w"], col["C_w"],
                                          col["rellich_residual"], w)
        return out

    def manifest(self):
        import numba
        import scipy

        arts = {}
        for p in sorted(self.out.glob("*")):
            if p.is_file() and p.name not in ("manifest.json", "error.json"):
                arts[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        return {
            "config": self.cfg.raw,
            "config_sha256": self.cfg.sha256,
            "seed": self.cfg.seed,
            "kernel_backend": kernels.BACKEND,
            "versions": {"speclab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "numba": numba.__version__, "python": platform.python_version()},
            "artifacts": arts,
        }

    def write_manifest(self):
        write_json(self.path("manifest.json"), self.manifest())

    # ---- stages -----------------------------------------------------------
    def stage_spectrum(self):
        self.out.mkdir(parents=True, exist_ok=True)
        dom, K = self.cfg.domain, self.cfg.K
        if self.cfg.method == "analytic":
            build = disk_spectrum if dom.kind == "disk" else ball_spectrum
            spec = build(dom.param("R"), K, dom.x0)
        else:
            spec = mps_spectrum(dom, K, self.cfg.mps)
            write_mps_coeffs(self.path("mps_coeffs.json"), spec)
        write_spectrum(self.path("spectrum.csv"), spec)
        checks = {"mode_count": _check(spec.K, K, spec.K == K)}
        if self.cfg.method == "collocation":
            worst = max(md.pair.tension for md in spec.modes)
            checks["tension"] = _check(worst, self.cfg.mps.tension_tol, worst <= self.cfg.mps.tension_tol)
        write_json(self.path("spectrum_checks.json"), {"checks": checks})
        self.write_manifest()
        return checks

    def stage_rellich(self):
        spec = self.load_spectrum()
        grid = self.grid()
        weights = self.weight_objects(grid)
        rows, funcs = [], {}
        for w in weights:
            f = mode_functionals(spec, grid, w)
            funcs[w.name] = f
            for i in range(f.k.size):
                rows.append([w.name, f.k[i], f.lam[i], f.E[i], f.E_w[i], f.E_abs_w[i], f.C_w[i],
                             f.rellich[i]])
        write_csv(self.path("functionals.csv"), FUNCTIONAL_COLUMNS, rows)
        unit = funcs["unit"]
        tol = self.cfg.checks["rellich_tol"]
        worst = float(np.max(unit.rellich))
        checks = {"rellich_residual": _check(worst, tol, worst <= tol)}
        m, M = g_bounds(grid)
        lo, hi = 2 * unit.lam / M, 2 * unit.lam / m
        ok = (unit.E >= lo * (1 - SANDWICH_SLACK)) & (unit.E <= hi * (1 + SANDWICH_SLACK))
        if self.cfg.checks["sandwich"]:
            checks["sandwich"] = _check(int(np.count_nonzero(~ok)), 0, bool(np.all(ok)))
        write_json(self.path("rellich.json"), {
            "max_residual": worst, "g_min": m, "g_max": M,
            "weights": {w.name: {"level": w.level, "mu0": w.mu0, "mu1": w.mu1, "sup_norm": w.sup_norm}
                        for w in weights},
            "checks": checks,
        })
        return checks

    def stage_packets(self):
        spec = self.load_spectrum()
        grid = self.grid()
        weights = self.weight_objects(grid)
        funcs = self.load_functionals(spec, weights)
        E = funcs["unit"].E
        zero_mean = [w for w in weights[1:] if w.level >= 1]
        d = spec.domain.dimension
        ends = np.array([g[-1] for g in spec.eigenspace_index])
        starts = np.array([g[0] for g in spec.eigenspace_index])
        header = ["schedule", "alpha", "N_min", "k", "N_k", "lambda_k", "ratio", "scaled_ratio",
                  "packet_energy", "whole_eigenspaces"]
        for w in zero_mean:
            header += [f"corr_{w.name}", f"envelope_{w.name}"]
        rows, summary = [], {}
        band = self.cfg.checks["ratio_band"]
        checks = {}
        for s in self.cfg.schedules:
            sched = s["schedule"]
            stats = packet_table(spec.lambdas, E, sched, s["ks"], {w.name: funcs[w.name].E_w for w in zero_mean})
            for st in stats:
                a, b = st.k - 1, st.k + st.N_k - 2
                whole = bool(np.isin(a, starts) and np.isin(b, ends))
                row = [s["id"], sched.alpha, sched.N_min, st.k, st.N_k, st.lambda_k, st.ratio,
                       st.scaled_ratio, st.packet_energy, whole]
                for w in zero_mean:
                    theta = threshold_exponent(d, w.level)
                    row += [st.corr_avg[w.name], st.k ** theta / st.N_k]
                rows.append(row)
            ks = np.array([st.k for st in stats], dtype=float)
            N = np.array([st.N_k for st in stats], dtype=float)
            r = np.array([st.ratio for st in stats])
            sr = N * r
            ratio_fit = _safe_fit(N, r)
            trend_fit = _safe_fit(ks, sr)
            summary[str(s["id"])] = {
                "alpha": sched.alpha, "N_min": sched.N_min, "k_range": [int(ks[0]), int(ks[-1])],
                "scaled_ratio_min": float(sr.min()), "scaled_ratio_max": float(sr.max()),
                "ratio_vs_Nk": _fit_dict(ratio_fit), "scaled_ratio_trend": _fit_dict(trend_fit),
            }
            ok = bool(np.all((sr >= band[0]) & (sr <= band[1])))
            checks[f"schedule{s['id']}_ratio_band"] = _check([float(sr.min()), float(sr.max())], band, ok)
        write_csv(self.path("packets.csv"), header, rows)
        write_json(self.path("packet_fits.json"), {"schedules": summary, "checks": checks})
        return checks

    def stage_cancellation(self):
        rows = read_csv(self.path("packets.csv"))
        names = [c[len("corr_"):] for c in (rows[0].keys() if rows else []) if c.startswith("corr_")]
        const = self.cfg.checks["cancel_const"]
        d = self.cfg.domain.dimension
        levels = {w["name"]: w["level"] for w in self.cfg.weights}
        out, checks = {}, {}
        for sid in sorted({int(r["schedule"]) for r in rows}):
            rs = [r for r in rows if int(r["schedule"]) == sid]
            ks = np.array([int(r["k"]) for r in rs], dtype=float)
            N = np.array([int(r["N_k"]) for r in rs], dtype=float)
            whole = np.array([r["whole_eigenspaces"] == "true" for r in rs])
            for name in names:
                c = np.abs(np.array([float(r[f"corr_{name}"]) for r in rs]))
                theta = threshold_exponent(d, levels[name])
                scaled = c * N / ks ** theta
                fit = _safe_fit(ks, c * N)
                key = f"{sid}:{name}"
                out[key] = {
                    "schedule": sid, "weight": name, "level": levels[name], "threshold_exponent": theta,
                    "max_scaled": float(scaled.max()), "fit": _fit_dict(fit),
                    "whole_eigenspace_packets": int(np.count_nonzero(whole)),
                    "whole_eigenspace_max_abs": float(c[whole].max()) if np.any(whole) else None,
                }
                checks[f"schedule{sid}_{name}_envelope"] = _check(float(scaled.max()), const,
                                                                 scaled.max() <= const)
        write_json(self.path("cancellation_fits.json"), {"fits": out, "checks": checks})
        return checks

    def stage_weyl(self):
        spec = self.load_spectrum()
        grid = self.grid()
        weights = self.weight_objects(grid)
        funcs = self.load_functionals(spec, weights)
        d = spec.domain.dimension
        win = self.cfg.weyl["window"]
        npts = int(self.cfg.weyl["n_points"])

        def pack(f):
            return {"exponent": f.fit.slope, "expected_exponent": f.expected_exponent,
                    "r_squared": f.fit.r_squared, "window": list(f.window),
                    "leading_constant": f.leading_constant, "leading_stderr": f.leading_stderr,
                    "second_constant": f.second_constant, "second_stderr": f.second_stderr,
                    "reference_constant": f.reference_constant}

        counting = weyl_fit(spec, "counting", window=win, n_points=npts)
        boundary = weyl_fit(spec, "boundary", grid=grid, window=win, n_points=npts,
                            functionals=funcs["unit"])
        res = {"counting": pack(counting), "boundary": pack(boundary), "pairing": {}}
        res["counting"]["constant_ratio"] = counting.constant_ratio
        for w in weights[1:]:
            f = weyl_fit(spec, "pairing", weight=w, grid=grid, window=win, n_points=npts,
                         functionals=funcs[w.name])
            res["pairing"][w.name] = pack(f)
            res["pairing"][w.name]["leading_consistent_with_zero"] = f.leading_consistent_with_zero
            res["pairing"][w.name]["scale"] = f.scale
        ct, bt = self.cfg.checks["counting_slope_tol"], self.cfg.checks["boundary_slope_tol"]
        checks = {} if win is None else {
            "counting_exponent": _check(counting.fit.slope, [d / 2 - ct, d / 2 + ct],
                                        abs(counting.fit.slope - d / 2) <= ct),
            "boundary_exponent": _check(boundary.fit.slope, [1 + d / 2 - bt, 1 + d / 2 + bt],
                                        abs(boundary.fit.slope - (1 + d / 2)) <= bt),
        }  # exponent checks only on an explicit window; low default windows carry second-term bias
        res["checks"] = checks
        write_json(self.path("weyl_fits.json"), res)
        return checks

    def stage_report(self):
        parts = {"spectrum": "spectrum_checks.json", "rellich": "rellich.json",
                 "packets": "packet_fits.json", "cancellation": "cancellation_fits.json",
                 "weyl": "weyl_fits.json"}
        data = {k: read_json(self.path(v)) for k, v in parts.items()}
        dom = self.cfg.domain
        lines = [f"domain: {dom.kind} {dict(dom.params)} x0={dom.x0}",
                 f"solver: {self.cfg.method}  K={self.cfg.K}  config_sha256={self.cfg.sha256}", ""]
        lines.append("packet cancellation (|corr_avg| N_k vs k)")
        lines.append(f"{'schedule':>8} {'alpha':>6} {'weight':>12} {'level':>5} {'theta_ref':>9} "
                     f"{'slope':>9} {'max_scaled':>11}")
        sched = data["packets"]["schedules"]
        for key, f in sorted(data["cancellation"]["fits"].items()):
            slope = f["fit"]["slope"] if f["fit"] else float("nan")
            lines.append(f"{f['schedule']:>8} {fmt_short(sched[str(f['schedule'])]['alpha']):>6} "
                         f"{f['weight']:>12} {f['level']:>5} {fmt_short(f['threshold_exponent']):>9} "
                         f"{fmt_short(slope):>9} {fmt_short(f['max_scaled']):>11}")
        lines += ["", "mode-to-packet ratio"]
        for sid, s in sorted(sched.items()):
            fit = s["ratio_vs_Nk"] or s["scaled_ratio_trend"]
            label = "slope(ratio vs N_k)" if s["ratio_vs_Nk"] else "slope(N_k ratio vs k)"
            lines.append(f"  schedule {sid} alpha={fmt_short(s['alpha'])}: N_k ratio in "
                         f"[{fmt_short(s['scaled_ratio_min'])}, {fmt_short(s['scaled_ratio_max'])}], "
                         f"{label} = {fmt_short(fit['slope']) if fit else 'n/a'}")
        w = data["weyl"]
        lines += ["", "Weyl fits (measured vs expected exponent)"]
        for name in ("counting", "boundary"):
            lines.append(f"  {name:>9}: {fmt_short(w[name]['exponent'])} vs {fmt_short(w[name]['expected_exponent'])}")
        lines.append(f"  counting constant ratio to omega_d|Omega|/(2pi)^d: {fmt_short(w['counting']['constant_ratio'])}")
        for name, p in sorted(w["pairing"].items()):
            lines.append(f"  pairing {name}: leading {fmt_short(p['leading_constant'])} "
                         f"+- {fmt_short(p['leading_stderr'])} (zero: {p['leading_consistent_with_zero']})")
        lines += ["", "checks"]
        all_checks = {}
        for stage, d in data.items():
            for name, c in sorted(d.get("checks", {}).items()):
                all_checks[f"{stage}.{name}"] = c
                lines.append(f"  {'PASS' if c['pass'] else 'FAIL'} {stage}.{name} = {c['value']} "
                             f"(limit {c['limit']})")
        self.path("report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        write_json(self.path("summary.json"), {"checks": all_checks,
                                               "pass": all(c["pass"] for c in all_checks.values())})
        self.write_manifest()
        return {}

    def run_stage(self, name):
        if name not in STAGES:
            raise ValueError(f"unknown stage {name!r}")
        return getattr(self, f"stage_{name}")()

    def run_all(self):
        checks = {}
        for name in STAGES:
            for k, v in self.run_stage(name).items():
                checks[f"{name}.{k}"] = v
        return checks


def fmt_short(v):
    if v is None:
        return "n/a"
    if isinstance(v, str):
        return v
    return f"{float(v):.6g}"


__all__ = ["Runner", "STAGES"]
