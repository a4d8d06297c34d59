"""Experiment harness: configuration, sweeps over seeded cells, CSV/JSON output.

Configuration files are INI documents with three sections::

    [state]
    name = werner            # horodecki_2x2 | werner | isotropic_3x3 | horodecki_2x4 | custom_file
    params = 0.5:0.95:0.05   # comma list or inclusive start:stop:step
    a = 0.75                 # horodecki_2x2 only
    path = rho.txt           # custom_file only

    [solver]
    name = hermitian         # comma list allowed for comparisons
    beta = 200
    lambda = 1
    sigma = 0.06             # default 0.06, or 0.01 for the unitary family
    additive_sigma =         # default sigma * delta
    delta = 1
    dt = 0.2
    chi0 = 0.3               # sa_reference schedule ...
    chi_end = 1e-4
    alpha = 0.6666666666666666
    iter_per_angle = 1000
    realizations = 20

    [run]
    M = r..2N                # comma list of values or lo..hi ranges over ints, r, N, kN, N^2
    J = 100
    K = 1000
    seed = 0
    repeats = 1
    workers = 1
    aggregate = none         # none | median | mean
"""

import configparser
import csv
import io
import json
import logging
import math
import multiprocessing
import re
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bench
from .cbo_hermitian import run_hermitian, run_hermitian_projection
from .cbo_unitary import run_unitary, run_unitary_projection
from .ensemble import CboConfig
from .errors import EntCboError, InvalidInputError
from .multispecies import run_multispecies
from .quantum import spectral_decompose, validate_density

log = logging.getLogger(__name__)

STATES = ("horodecki_2x2", "werner", "isotropic_3x3", "horodecki_2x4", "custom_file")
SOLVERS = ("hermitian", "hermitian_projection", "unitary", "unitary_projection",
           "multispecies", "sa_reference")
UNITARY_FAMILY = ("unitary", "unitary_projection")
CSV_HEADER = ["state_param", "M", "solver", "seed", "eof", "oracle", "abs_error", "wall_time_s"]
SCHEMA_VERSION = 1

_RUNNERS = {
    "hermitian": run_hermitian,
    "hermitian_projection": run_hermitian_projection,
    "unitary": run_unitary,
    "unitary_projection": run_unitary_projection,
}


class ConfigError(InvalidInputError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    state: str = "werner"
    params: tuple = (0.7,)
    a: float = 0.75
    path: str = None
    solvers: tuple = ("hermitian",)
    m_set: str = "r..2N"
    J: int = 100
    K: int = 1000
    beta: float = 200.0
    lam: float = 1.0
    sigma: float = None
    additive_sigma: float = None
    delta: float = 1.0
    dt: float = 0.2
    seed: int = 0
    repeats: int = 1
    workers: int = 1
    aggregate: str = "none"
    sa: bench.SaConfig = field(default_factory=bench.SaConfig)

    def sigma_for(self, solver):
        if self.sigma is not None:
            return self.sigma
        return 0.01 if solver in UNITARY_FAMILY else 0.06

    def cbo_config(self, solver, seed):
        return CboConfig(beta=self.beta, lam=self.lam, sigma=self.sigma_for(solver),
                         additive_sigma=self.additive_sigma, delta=self.delta,
                         dt=self.dt, max_iter=self.K, seed=seed)

    def seeds(self):
        return [self.seed + i for i in range(self.repeats)]

    def echo(self):
        out = asdict(self)
        out["params"] = list(self.params)
        out["solvers"] = list(self.solvers)
        out["sigma_resolved"] = {s: self.sigma_for(s) for s in self.solvers}
        return out


_KEYS = {
    "state": {"name": "state", "params": "params", "param": "params", "a": "a", "path": "path"},
    "solver": {"name": "solvers", "names": "solvers", "beta": "beta", "lambda": "lam",
               "sigma": "sigma", "additive_sigma": "additive_sigma", "delta": "delta",
               "dt": "dt", "chi0": "chi0", "chi_end": "chi_end", "alpha": "alpha",
               "iter_per_angle": "iter_per_angle", "realizations": "realizations"},
    "run": {"m": "m_set", "m_set": "m_set", "j": "J", "k": "K", "seed": "seed",
            "repeats": "repeats", "workers": "workers", "aggregate": "aggregate"},
}
_FLOATS = {"a", "beta", "lam", "sigma", "additive_sigma", "delta", "dt",
           "chi0", "chi_end", "alpha"}
_INTS = {"J", "K", "seed", "repeats", "workers", "iter_per_angle", "realizations"}
_SA_FIELDS = {"chi0", "chi_end", "alpha", "iter_per_angle", "realizations"}


def parse_grid(text):
    """``"0.5:0.95:0.05"`` (inclusive) or ``"0.5, 0.7"`` into a tuple of floats."""
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("range must be start:stop:step with a positive step")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(max(n, 0)))
    return tuple(float(x) for x in text.split(",") if x.strip())


def parse_config(text):
    """Parse an experiment configuration document; defaults fill missing keys."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keep the user's spelling for error messages
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    values, sa = {}, {}
    for section in cp.sections():
        known = _KEYS.get(section.lower())
        if known is None:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key.lower() not in known:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            name = known[key.lower()]
            raw = raw.strip()
            if raw == "":
                continue
            try:
                if name in _FLOATS:
                    val = float(raw)
                elif name in _INTS:
                    val = int(raw)
                elif name == "params":
                    val = parse_grid(raw)
                elif name == "solvers":
                    val = tuple(s.strip() for s in raw.split(",") if s.strip())
                else:
                    val = raw
            except ValueError as exc:
                raise ConfigError(f"invalid value for '{key}' in [{section}]: {raw!r}") from exc
            (sa if name in _SA_FIELDS else values)[name] = val
    try:
        if sa:
            values["sa"] = bench.SaConfig(**sa)
        cfg = ExperimentConfig(**values)
    except (TypeError, InvalidInputError) as exc:
        raise ConfigError(str(exc)) from exc
    return validate_config(cfg)


def validate_config(cfg):
    if cfg.state not in STATES:
        raise ConfigError(f"invalid value for 'name' in [state]: {cfg.state!r}")
    for s in cfg.solvers:
        if s not in SOLVERS:
            raise ConfigError(f"invalid value for 'name' in [solver]: {s!r}")
    if cfg.state == "custom_file" and not cfg.path:
        raise ConfigError("custom_file state requires 'path'")
    if not cfg.params and cfg.state != "custom_file":
        raise ConfigError("invalid value for 'params': empty grid")
    if cfg.aggregate not in ("none", "median", "mean"):
        raise ConfigError(f"invalid value for 'aggregate': {cfg.aggregate!r}")
    for name in ("J", "repeats", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"invalid value for '{name}': must be positive")
    if cfg.K < 0 or cfg.seed < 0:
        raise ConfigError("invalid value for 'K' or 'seed': must be nonnegative")
    try:
        cfg.cbo_config(cfg.solvers[0], cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    resolve_m_set(cfg.m_set, 1, 1)  # syntax check
    return cfg


_BOUND = re.compile(r"^(?:(\d+)|r|(\d*)N|N\^?2)$")


def _resolve_bound(tok, rank, n):
    tok = tok.strip()
    m = _BOUND.match(tok)
    if not m:
        raise ConfigError(f"invalid value for 'M': bad token {tok!r}")
    if m.group(1):
        return int(m.group(1))
    if tok == "r":
        return rank
    if tok in ("N^2", "N2"):
        return n * n
    return int(m.group(2) or 1) * n


def resolve_m_set(text, rank, n):
    """Resolve a dimension set such as ``"r..2N"`` or ``"4,6,8"``."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item:
            lo, hi = item.split("..", 1)
            out.extend(range(_resolve_bound(lo, rank, n), _resolve_bound(hi, rank, n) + 1))
        else:
            out.append(_resolve_bound(item, rank, n))
    if not out:
        raise ConfigError("invalid value for 'M': empty set")
    return sorted(set(out))


# --- states ---------------------------------------------------------------

def load_density_file(path):
    """Read ``N_A N_B`` then ``N^2`` lines of ``re im`` in row-major order."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    try:
        dim_a, dim_b = (int(x) for x in lines[0].split())
        n = dim_a * dim_b
        vals = [complex(float(re_), float(im)) for re_, im in (ln.split() for ln in lines[1:])]
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"{path}: malformed density file") from exc
    if len(vals) != n * n:
        raise InvalidInputError(f"{path}: expected {n * n} entries, found {len(vals)}")
    return validate_density(np.array(vals).reshape(n, n), dim_a, dim_b)


def save_density_file(state, path):
    rows = [f"{state.dim_a} {state.dim_b}"]
    rows += [f"{z.real:.17g} {z.imag:.17g}" for z in state.rho.ravel()]
    Path(path).write_text("\n".join(rows) + "\n")


def build_state(cfg, param):
    if cfg.state == "horodecki_2x2":
        return bench.horodecki_2x2(param, cfg.a)
    if cfg.state == "werner":
        return bench.werner(param)
    if cfg.state == "isotropic_3x3":
        return bench.isotropic_3x3(param)
    if cfg.state == "horodecki_2x4":
        return bench.horodecki_2x4(param)
    return load_density_file(cfg.path)


def oracle_value(cfg, param, state):
    """Closed-form EoF where one applies, else ``None``."""
    if state.dims == (2, 2):
        return bench.wootters_eof(state).value
    if cfg.state == "isotropic_3x3":
        return bench.isotropic_eof(param).value
    return None


# --- sweeps ---------------------------------------------------------------

@dataclass
class Row:
    state_param: float
    M: int
    solver: str
    seed: int
    eof: float = None
    oracle: float = None
    abs_error: float = None
    wall_time_s: float = None
    error: str = None

    def key(self):
        return (self.state_param, self.M, self.solver, self.seed)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    traces: list = field(default_factory=list)  # (run_id, param, seed, RunTrace)


def _cell_params(cfg):
    return cfg.params if cfg.state != "custom_file" else (cfg.params[0] if cfg.params else 0.0,)


def _units(cfg):
    """Independent work units in deterministic order."""
    units = []
    for param in _cell_params(cfg):
        for solver in cfg.solvers:
            for seed in cfg.seeds():
                units.append((param, solver, seed))
    return units


def run_id(cfg, param, solver, seed):
    return f"{cfg.state}-{param!r}-{solver}-s{seed}"


def _run_unit(args):
    cfg, (param, solver, seed) = args
    rid = run_id(cfg, param, solver, seed)
    rows, traces = [], []
    try:
        state = build_state(cfg, param)
        decomp = spectral_decompose(state)
        ms = resolve_m_set(cfg.m_set, decomp.rank, state.dim)
        oracle = oracle_value(cfg, param, state)
    except EntCboError as exc:
        log.error("cell %s failed: %s", rid, exc)
        return [Row(param, 0, solver, seed, error=str(exc))], []

    def emit(m, value, elapsed, trace=None):
        row = Row(param, m, solver, seed, float(value), oracle, None, elapsed)
        if oracle is not None:
            row.abs_error = abs(row.eof - oracle)
        rows.append(row)
        if trace is not None:
            traces.append((rid, param, seed, trace))

    try:
        if solver == "multispecies":
            t0 = time.perf_counter()
            res = run_multispecies(decomp, state.dims, ms, cfg.J, cfg.cbo_config(solver, seed))
            elapsed = time.perf_counter() - t0
            for m in ms:
                emit(m, res[m].best_value, elapsed, res[m])
            return rows, traces
    except EntCboError as exc:
        log.error("cell %s failed: %s", rid, exc)
        return [Row(param, m, solver, seed, error=str(exc)) for m in ms], []
    for m in ms:
        t0 = time.perf_counter()
        try:
            if solver == "sa_reference":
                rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(m,)))
                value = bench.simulated_annealing_reference(decomp, state.dims, m, cfg.sa, rng).value
                emit(m, value, time.perf_counter() - t0)
            else:
                tr = _RUNNERS[solver](decomp, state.dims, m, cfg.J, cfg.cbo_config(solver, seed))
                emit(m, tr.best_value, time.perf_counter() - t0, tr)
        except EntCboError as exc:
            log.error("cell %s M=%d failed: %s", rid, m, exc)
            rows.append(Row(param, m, solver, seed, error=str(exc)))
    return rows, traces


def run_experiment(cfg, workers=None):
    """Run every (state parameter, solver, seed) unit; rows sorted by cell key."""
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, u) for u in _units(cfg)]
    if workers > 1 and len(jobs) > 1:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(workers) as pool:
            outs = pool.map(_run_unit, jobs, chunksize=1)
    else:
        outs = [_run_unit(j) for j in jobs]
    result = SweepResult(cfg)
    for rows, traces in outs:
        result.rows.extend(rows)
        result.traces.extend(traces)
    result.rows.sort(key=Row.key)
    result.traces.sort(key=lambda t: (t[1], t[3].M, t[3].solver, t[2]))
    return result


# --- output ---------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def format_csv(rows, wall_time=True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            _fmt(r.state_param), str(r.M), r.solver, str(r.seed),
            "failed" if r.error else _fmt(r.eof), _fmt(r.oracle), _fmt(r.abs_error),
            _fmt(r.wall_time_s) if wall_time else "",
        ])
    return buf.getvalue()


def emit_csv(result, path, wall_time=True):
    """Write the sweep rows; ``wall_time=False`` leaves that column empty."""
    rows = result.rows if isinstance(result, SweepResult) else result
    path = Path(path)
    try:
        path.write_text(format_csv(rows, wall_time), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def parse_csv(text):
    """Inverse of :func:`format_csv`."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise InvalidInputError(f"unexpected CSV header {header}")
    opt = lambda s: float(s) if s else None  # noqa: E731
    rows = []
    for rec in reader:
        failed = rec[4] == "failed"
        rows.append(Row(float(rec[0]), int(rec[1]), rec[2], int(rec[3]),
                        None if failed else opt(rec[4]), opt(rec[5]), opt(rec[6]), opt(rec[7]),
                        "failed" if failed else None))
    return rows


def aggregate_rows(rows, how):
    """Median or mean over seeds for each (state_param, M, solver)."""
    reduce = {"median": np.median, "mean": np.mean}[how]
    groups = {}
    for r in rows:
        if r.error is None:
            groups.setdefault((r.state_param, r.M, r.solver), []).append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        eofs = [r.eof for r in rs]
        errs = [r.abs_error for r in rs if r.abs_error is not None]
        out.append(key + (len(rs), float(reduce(eofs)), rs[0].oracle,
                          float(reduce(errs)) if errs else None))
    return out


def emit_aggregate_csv(rows, how, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["state_param", "M", "solver", "n", f"{how}_eof", "oracle", f"{how}_abs_error"])
    for p, m, s, n, eof, oracle, err in aggregate_rows(rows, how):
        w.writerow([_fmt(p), m, s, n, _fmt(eof), _fmt(oracle), _fmt(err)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    return path


def trace_document(trace, run_id="", config=None, extra=None):
    doc = {
        "schema": SCHEMA_VERSION,
        "run_id": run_id,
        "solver": trace.solver,
        "M": trace.M,
        "rank": trace.rank,
        "config": config or {},
        "iterations": [
            {"k": k, "consensus_eof": c, "ensemble_min": lo, "ensemble_mean": mu}
            for k, c, lo, mu in zip(trace.iters, trace.consensus,
                                    trace.ensemble_min, trace.ensemble_mean)
        ],
        "initial_consensus_eof": trace.initial_consensus,
        "final": {"best_eof": trace.best_value, "best_iter": trace.best_iter},
        "max_structure_residual": trace.max_structure_residual,
    }
    if extra:
        doc.update(extra)
    return doc


def emit_trace_json(trace, path, run_id="", config=None, extra=None):
    path = Path(path)
    text = json.dumps(trace_document(trace, run_id, config, extra), indent=1, sort_keys=True)
    try:
        path.write_text(text + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_outputs(result, out_dir, wall_time=False, traces=True, aggregate=None):
    """Write ``results.csv``, ``config.json`` and one trace JSON per run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    echo = cfg.echo()
    (out / "config.json").write_text(json.dumps(echo, indent=1, sort_keys=True) + "\n")
    emit_csv(result, out / "results.csv", wall_time=wall_time)
    how = aggregate or cfg.aggregate
    if how != "none":
        emit_aggregate_csv(result.rows, how, out / f"aggregate_{how}.csv")
    if traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for rid, param, seed, tr in result.traces:
            extra = {"state": cfg.state, "state_param": param, "seed": seed}
            emit_trace_json(tr, tdir / f"{rid}-M{tr.M}.json", rid, echo, extra)
    return out


def with_overrides(cfg, **kw):
    kw = {k: v for k, v in kw.items() if v is not None}
    return validate_config(replace(cfg, **kw)) if kw else cfg
