"""Experiment configuration: loading, dotted overrides and validation."""

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from ..errors import ConfigError, SpeclabError
from ..io import domain_from_block
from ..mps import MODE_CEILING, default_config
from ..packets import PacketSchedule

DEFAULT_CHECKS = {
    "rellich_tol": None,  # 1e-10 analytic, 1e-6 collocation
    "sandwich": True,
    "ratio_band": [0.8, 1.25],
    "cancel_const": 5.0,
    "counting_slope_tol": 0.02,
    "boundary_slope_tol": 0.05,
}
WEIGHT_TYPES = ("trig", "legendre", "curvature")


def load_config(path):
    """Read a YAML (or JSON) experiment file into a plain dict."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at top level")
    return data


def apply_overrides(raw, sets):
    """Apply ``key.sub=value`` overrides; values are parsed as YAML scalars."""
    raw = copy.deepcopy(raw)
    for item in sets or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = raw
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            if isinstance(node, list):
                try:
                    idx = int(part)
                    node[idx]
                except (ValueError, IndexError):
                    raise ConfigError(f"override {key!r}: bad list index {part!r}") from None
                if last:
                    node[idx] = yaml.safe_load(value)
                else:
                    node = node[idx]
            else:
                if last:
                    node[part] = yaml.safe_load(value)
                else:
                    node = node.setdefault(part, {})
                    if not isinstance(node, (dict, list)):
                        raise ConfigError(f"override {key!r} descends into a scalar")
    return raw


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    raw: dict
    domain: object
    method: str
    K: int
    mps: object
    grid_nodes: object
    weights: tuple
    schedules: tuple
    weyl: dict
    checks: dict
    out_dir: Path
    seed: int

    @property
    def canonical(self):
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self):
        return hashlib.sha256(self.canonical.encode("utf-8")).hexdigest()


def _need(block, key, where):
    if key not in block:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return block[key]


def _weights(items, domain):
    out, seen = [], set()
    for i, w in enumerate(items or ()):
        if not isinstance(w, dict):
            raise ConfigError(f"weights[{i}] must be a mapping")
        name = str(w.get("name", f"w{i}"))
        if name in seen or name == "unit":
            raise ConfigError(f"duplicate or reserved weight name {name!r}")
        seen.add(name)
        kind = w.get("type")
        if kind not in WEIGHT_TYPES:
            raise ConfigError(f"weights[{i}]: type must be one of {WEIGHT_TYPES}, got {kind!r}")
        if kind == "trig" and not domain.planar:
            raise ConfigError(f"weight {name!r}: trig weights need a planar domain")
        if kind == "legendre" and domain.planar:
            raise ConfigError(f"weight {name!r}: Legendre weights need the ball")
        if kind == "curvature" and domain.kind in ("disk", "ball"):
            raise ConfigError(f"weight {name!r}: H - H_bar vanishes identically on the {domain.kind}")
        level = int(w.get("level", 1))
        if level not in (1, 2):
            raise ConfigError(f"weight {name!r}: level must be 1 or 2")
        spec = {"name": name, "type": kind, "level": level}
        if kind == "trig":
            spec["p"] = int(_need(w, "p", f"weight {name!r}"))
            if spec["p"] == 0:
                raise ConfigError(f"weight {name!r}: p = 0 is constant and has no zero-mean part")
            spec["phase"] = w.get("phase", "cos")
            if spec["phase"] not in ("cos", "sin"):
                raise ConfigError(f"weight {name!r}: phase must be cos or sin")
        elif kind == "legendre":
            spec["l"] = int(_need(w, "l", f"weight {name!r}"))
            if spec["l"] < 1:
                raise ConfigError(f"weight {name!r}: l must be >= 1 for a zero-mean part")
        out.append(spec)
    return tuple(out)


def validate(raw):
    """Check a raw config dict and resolve defaults; raises ConfigError."""
    raw = copy.deepcopy(raw)
    try:
        dom_block = dict(_need(raw, "domain", "config"))
        domain = domain_from_block(dom_block)
    except (SpeclabError, TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"domain block: {exc}") from None

    seed = int(raw.get("seed", 0))
    solver = dict(raw.get("solver", {}))
    method = solver.pop("method", "analytic" if domain.kind in ("disk", "ball") else "collocation")
    K = int(_need(solver, "K", "solver"))
    solver.pop("K")
    if K < 1:
        raise ConfigError("solver.K must be >= 1")
    mps_cfg = None
    if method == "analytic":
        if domain.kind not in ("disk", "ball"):
            raise ConfigError(f"analytic solver handles disk and ball only, not {domain.kind}")
        if solver:
            raise ConfigError(f"unexpected analytic solver keys {sorted(solver)}")
    elif method == "collocation":
        if not domain.planar:
            raise ConfigError("collocation solver handles planar domains only")
        if K > MODE_CEILING:
            raise ConfigError(f"K={K} exceeds the collocation ceiling of {MODE_CEILING} modes per domain")
        try:
            mps_cfg = default_config(domain, K, seed=seed, **solver)
        except (SpeclabError, TypeError) as exc:
            raise ConfigError(f"solver block: {exc}") from None
    else:
        raise ConfigError(f"solver.method must be analytic or collocation, got {method!r}")

    grid_nodes = raw.get("grid", {}).get("n_nodes")
    if grid_nodes is None:
        grid_nodes = [64, 128] if domain.kind == "ball" else (4096 if method == "analytic" else 2048)
    if domain.kind == "ball":
        if not (isinstance(grid_nodes, (list, tuple)) and len(grid_nodes) == 2):
            raise ConfigError("grid.n_nodes must be [n_lat, n_lon] for the ball")
        grid_nodes = tuple(int(v) for v in grid_nodes)
    else:
        grid_nodes = int(grid_nodes)
        if grid_nodes < 64:
            raise ConfigError("grid.n_nodes must be >= 64 for planar domains")

    weights = _weights(raw.get("weights"), domain)

    schedules = []
    for i, s in enumerate(raw.get("packets", {}).get("schedules", ()) or ()):
        try:
            sched = PacketSchedule(float(_need(s, "alpha", f"schedule {i}")), int(s.get("N_min", 2)))
        except SpeclabError as exc:
            raise ConfigError(f"schedule {i}: {exc}") from None
        k_min = int(s.get("k_min", 1))
        k_max = int(s.get("k_max", k_min))
        k_step = int(s.get("k_step", 1))
        if not 1 <= k_min <= k_max or k_step < 1:
            raise ConfigError(f"schedule {i}: need 1 <= k_min <= k_max and k_step >= 1")
        reach = max(k + sched.length(k) - 1 for k in range(k_min, k_max + 1, k_step))
        if reach > K:
            raise ConfigError(f"schedule {i}: packets reach mode {reach} but solver.K = {K}")
        schedules.append({"id": i, "schedule": sched, "ks": list(range(k_min, k_max + 1, k_step))})

    weyl = dict(raw.get("weyl", {}) or {})
    weyl.setdefault("window", None)
    weyl.setdefault("n_points", 200)

    checks = dict(DEFAULT_CHECKS)
    unknown = set(raw.get("checks", {}) or {}) - set(checks)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    checks.update(raw.get("checks", {}) or {})
    if checks["rellich_tol"] is None:
        checks["rellich_tol"] = 1e-10 if method == "analytic" else 1e-6

    out_dir = Path(raw.get("outputs", {}).get("directory", "speclab_out"))
    return ExperimentConfig(raw, domain, method, K, mps_cfg, grid_nodes, weights, tuple(schedules),
                            weyl, checks, out_dir, seed)
