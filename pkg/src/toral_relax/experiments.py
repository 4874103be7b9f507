"""JSON-configured relaxation-time sweeps with cached, deterministic output.

Config (schema 1)::

    {
      "schema": 1,
      "map": {"matrix": [[2, 1], [1, 1]], "translation": [0, 0],
              "kick": {"kappa": 0.3} | {"terms": [[[kq, kp], re, im], ...]}},
      "kernel": {"family": "gaussian", "params": {}},
      "epsilon_grid": [0.1, 0.05],
      "N_rule": {"fixed": 200} | {"scaled": {"M_prime": 28}} | {"power": {"exponent": 2}},
      "flavors": [["noisy", "quantum"], ["coarse", "classical"]],
      "paths": ["exact"],
      "theta": null,
      "seed": 0,
      "threads": 1,
      "threshold": null
    }

``translation``, ``kick``, ``theta``, ``paths``, ``seed``, ``threads`` and
``threshold`` (relaxation level in (0, 1), default 1/e) are optional.  A missing theta means the first admissible angle.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
import tempfile
import time

import numpy as np

from .classical import ClassicalMapSpec
from .lattice import SymplecticIntMatrix
from .noise import NoiseKernel
from .relaxation import classify_regime, tau_classical, tau_quantum
from .series import FourierSeries
from .weyl import QuantumSetting, admissible_angles, is_admissible

SCHEMA_VERSION = 1
CSV_COLUMNS = ("epsilon", "N", "theta_q", "theta_p", "flavor", "side", "tau", "norm_lo", "norm_hi", "regime", "wall_ms")
THREADS_ENV = "TORAL_RELAX_THREADS"


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


@dataclass(frozen=True)
class ExperimentConfig:
    map: dict
    kernel: dict
    epsilon_grid: tuple
    N_rule: dict
    flavors: tuple
    paths: tuple = ("exact",)
    theta: tuple = None
    seed: int = 0
    threads: int = None
    threshold: float = None

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if raw.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema {raw.get('schema')!r}")
        known = {"schema", "map", "kernel", "epsilon_grid", "N_rule", "flavors", "paths", "theta", "seed", "threads", "threshold"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        for key in ("map", "kernel", "epsilon_grid", "N_rule", "flavors"):
            if key not in raw:
                raise ConfigError(f"missing config key {key!r}")
        grid = tuple(float(e) for e in raw["epsilon_grid"])
        if any(not e > 0 for e in grid):
            raise ConfigError("epsilon_grid must be strictly positive")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("epsilon_grid must be strictly descending")
        flavors = []
        for item in raw["flavors"]:
            pair = tuple(item.split("/")) if isinstance(item, str) else tuple(item)
            if len(pair) != 2 or pair[0] not in ("noisy", "coarse") or pair[1] not in ("classical", "quantum"):
                raise ConfigError(f"bad flavor entry {item!r}")
            flavors.append(pair)
        paths = raw.get("paths", ["exact"])
        paths = (paths,) if isinstance(paths, str) else tuple(paths)
        if not paths or any(p not in ("exact", "dense") for p in paths):
            raise ConfigError("paths must be drawn from exact, dense")
        rule = raw["N_rule"]
        if not isinstance(rule, dict) or len(rule) != 1 or next(iter(rule)) not in ("fixed", "scaled", "power"):
            raise ConfigError("N_rule needs exactly one of fixed, scaled, power")
        theta = raw.get("theta")
        threshold = raw.get("threshold")
        if threshold is not None and not 0 < float(threshold) < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        cfg = cls(
            map=dict(raw["map"]),
            kernel=dict(raw["kernel"]),
            epsilon_grid=grid,
            N_rule=dict(rule),
            flavors=tuple(flavors),
            paths=paths,
            theta=None if theta is None else tuple(float(t) for t in theta),
            seed=int(raw.get("seed", 0)),
            threads=None if raw.get("threads") is None else int(raw["threads"]),
            threshold=None if threshold is None else float(threshold),
        )
        try:
            cfg.map_spec()
            cfg.noise_kernel()
            for eps in grid:
                cfg.N_for(eps)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self):
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        d["epsilon_grid"] = list(self.epsilon_grid)
        d["flavors"] = [list(f) for f in self.flavors]
        d["paths"] = list(self.paths)
        d["theta"] = None if self.theta is None else list(self.theta)
        return d

    def content_hash(self):
        """Hash of everything that affects the rows (thread count excluded)."""
        d = self.to_dict()
        d.pop("threads")
        if d["threshold"] is None:
            d.pop("threshold")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def map_spec(self):
        m = self.map
        F = SymplecticIntMatrix(m["matrix"])
        kick = m.get("kick")
        H = None
        if kick is not None:
            if "kappa" in kick:
                return ClassicalMapSpec.kicked(F, float(kick["kappa"]), m.get("translation"))
            H = FourierSeries.coerce({tuple(k): complex(re, im) for k, re, im in kick["terms"]}, F.dim_d)
        return ClassicalMapSpec(F, m.get("translation"), H)

    def noise_kernel(self):
        dim_d = len(self.map["matrix"]) // 2
        return NoiseKernel.from_spec(self.kernel, dim_d)

    def N_for(self, eps):
        kind, arg = next(iter(self.N_rule.items()))
        if kind == "fixed":
            N = int(arg)
        elif kind == "scaled":
            N = math.ceil(float(arg["M_prime"]) / eps)
        else:
            N = math.ceil(eps ** (-float(arg["exponent"])))
        if N < 1:
            raise ValueError("N_rule produced N < 1")
        return N


@dataclass(frozen=True)
class ResultRow:
    epsilon: float
    N: object
    theta_q: object
    theta_p: object
    flavor: str
    side: str
    tau: object
    norm_lo: object
    norm_hi: object
    regime: str
    wall_ms: object = None
    path: str = ""

    def as_csv(self):
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return repr(x)
            return str(x)

        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _cells(cfg):
    for eps in cfg.epsilon_grid:
        for flavor, side in cfg.flavors:
            if side == "classical":
                yield eps, flavor, side, ""
            else:
                for path in cfg.paths:
                    yield eps, flavor, side, path


def _theta(cfg, F, N):
    if cfg.theta is not None:
        if not is_admissible(F, N, cfg.theta):
            raise ValueError("configured theta is not admissible")
        return cfg.theta
    return admissible_angles(F, N)[0]


def _compute(cfg, cell, timing):
    eps, flavor, side, path = cell
    spec = cfg.map_spec()
    kernel = cfg.noise_kernel()
    F = spec.linear_part
    t0 = time.perf_counter()
    N = theta = None
    regime = ""
    if side == "classical":
        res = tau_classical(spec, kernel, eps, flavor, threshold=cfg.threshold)
    else:
        N = cfg.N_for(eps)
        try:
            theta = _theta(cfg, F, N)
        except ValueError as exc:
            return ResultRow(eps, N, None, None, flavor, side, None, None, None, f"inadmissible: {exc}", None, path)
        try:
            regime = classify_regime(F, eps, N).label
        except ValueError:
            regime = "unclassified"
        res = tau_quantum(spec, kernel, eps, QuantumSetting(N, F.dim_d, theta), flavor, path, threshold=cfg.threshold)
    wall = round((time.perf_counter() - t0) * 1000, 3) if timing else None
    tau = "inf" if res.tau == math.inf else int(res.tau)
    lo, hi = res.bracket
    return ResultRow(
        eps, N,
        None if theta is None else float(theta[0]),
        None if theta is None else float(theta[F.dim_d]),
        flavor, side, tau,
        None if lo is None else float(lo),
        None if hi is None else float(hi),
        regime, wall, path,
    )


def _compute_star(args):
    return _compute(*args)


def resolve_threads(flag=None, cfg=None):
    """--threads flag, then TORAL_RELAX_THREADS, then the config, then the CPU count."""
    if flag:
        return max(1, int(flag))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    if cfg is not None and cfg.threads:
        return cfg.threads
    return os.cpu_count() or 1


def _row_from_json(d):
    return ResultRow(**d)


def run_sweep(cfg, cache_dir=None, force=False, threads=None, timing=False):
    """Rows for every (eps, flavor, side, path) cell, in config order.

    With ``cache_dir`` the rows are stored under the config's content hash
    and reused unless ``force``.  Timed runs are never cached.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    cache = None
    if cache_dir is not None and not timing:
        cache = Path(cache_dir) / f"{cfg.content_hash()}.json"
        if cache.exists() and not force:
            return [_row_from_json(d) for d in json.loads(cache.read_text())["rows"]]
    cells = list(_cells(cfg))
    workers = min(resolve_threads(threads, cfg), max(len(cells), 1))
    if workers <= 1:
        rows = [_compute(cfg, c, timing) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_compute_star, [(cfg, c, timing) for c in cells]))
    if cache is not None:
        _atomic_write(cache, json.dumps({"config_hash": cfg.content_hash(), "rows": [asdict(r) for r in rows]}))
    return rows


def fit_rate(rows):
    """Least-squares tau = slope ln(1/eps) + intercept; returns (slope, intercept, r2)."""
    rows = list(rows)
    kinds = {(r.flavor, r.side) for r in rows}
    if len(kinds) > 1:
        raise ValueError("rows mix flavors or sides")
    if len(rows) < 3:
        raise ValueError("need at least three rows to fit a rate")
    taus = [r.tau for r in rows]
    if any(t in (None, "inf") or t == math.inf for t in taus):
        raise ValueError("cannot fit rows with missing or infinite tau")
    x = np.log(1.0 / np.array([r.epsilon for r in rows], dtype=float))
    y = np.array(taus, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res < 1e-20 else 0.0)
    if abs(slope) < 1e-12:
        slope = 0.0
    return float(slope), float(intercept), r2


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()


def plot_pairs(rows):
    """(flavor, side, ln(1/eps), tau) for every finite row, for external plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("flavor", "side", "path", "ln_inv_epsilon", "tau"))
    for r in rows:
        if isinstance(r.tau, int):
            w.writerow((r.flavor, r.side, r.path, repr(math.log(1.0 / r.epsilon)), r.tau))
    return buf.getvalue()


def emit(rows, fmt, path, config_hash=None):
    """Write rows as CSV or JSON plus a plot-data companion; returns the paths."""
    path = Path(path)
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = json.dumps({"config_hash": config_hash, "columns": list(CSV_COLUMNS) + ["path"],
                           "rows": [asdict(r) for r in rows]}, indent=1)
    else:
        raise ValueError("format must be csv or json")
    _atomic_write(path, text)
    companion = path.with_name(path.stem + ".plot.csv")
    _atomic_write(companion, plot_pairs(rows))
    return [path, companion]


def read_json_rows(path):
    data = json.loads(Path(path).read_text())
    return [_row_from_json(d) for d in data["rows"]], data.get("config_hash")
