"""Experiment driver: config parsing, seeded trials, worker pool, CSV output."""
import argparse
import csv
import io
import json
import logging
import math
import multiprocessing as mp
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import BudgetExceeded, ConfigError, DomainError
from .experiments import EXPERIMENTS
from .geometry import ChannelParams

try:
    import tomllib
except ModuleNotFoundError:       # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("listlab")

COLUMNS = ("experiment", "n", "P", "N", "delta", "seed", "trial",
           "metric_name", "metric_value", "mode", "extra")

# key -> (type, default); None marks a required key
COMMON = {
    "experiment": (str, None),
    "n": (int, None),
    "P": (float, None),
    "N": (float, None),
    "delta": (float, None),
    "seed": (int, None),
    "trials": (int, 1),
    "workers": (int, 1),
    "budget": (int, 50_000_000),
    "out": (str, ""),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int
    P: float
    N: float
    delta: float
    seed: int
    trials: int = 1
    workers: int = 1
    budget: int = 50_000_000
    out: str = ""
    params: dict = field(default_factory=dict)

    @property
    def channel(self):
        return ChannelParams(self.n, self.P, self.N, self.delta)

    def effective(self):
        d = {k: getattr(self, k) for k in COMMON}
        d.update(self.params)
        return d


@dataclass(frozen=True)
class CsvRow:
    experiment: str
    n: int
    P: float
    N: float
    delta: float
    seed: int
    trial: int
    metric_name: str
    metric_value: float
    mode: str
    extra: str

    def fields(self):
        return [self.experiment, str(self.n), repr(float(self.P)), repr(float(self.N)),
                repr(float(self.delta)), str(self.seed), str(self.trial), self.metric_name,
                repr(float(self.metric_value)), self.mode, self.extra]

    @classmethod
    def parse(cls, rec):
        if len(rec) != len(COLUMNS):
            raise ValueError(f"expected {len(COLUMNS)} fields, got {len(rec)}")
        return cls(rec[0], int(rec[1]), float(rec[2]), float(rec[3]), float(rec[4]),
                   int(rec[5]), int(rec[6]), rec[7], float(rec[8]), rec[9], rec[10])


# --------------------------------------------------------------------------
# config

def _coerce(key, typ, v, where):
    if typ is int:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            if isinstance(v, str):
                try:
                    return int(v)
                except ValueError:
                    pass
            raise ConfigError(f"expected an integer, got {v!r} ({where})", f"{key}")
        return int(v)
    if typ is float:
        if isinstance(v, bool):
            raise ConfigError(f"expected a number, got {v!r} ({where})", key)
        try:
            x = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"expected a number, got {v!r} ({where})", key) from None
        if not math.isfinite(x):
            raise ConfigError(f"must be finite ({where})", key)
        return x
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r} ({where})", key)
    return v


def _schema(experiment):
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}",
                          "experiment")
    extra = {k: (type(v), v) for k, v in EXPERIMENTS[experiment][1].items()}
    return {**COMMON, **extra}


def build_config(file_values, flag_values):
    """Merge file and flag values (flags win) into a validated config."""
    merged = dict(file_values)
    for k, v in flag_values.items():
        if k in file_values and file_values[k] != v:
            log.warning("flag %s=%r overrides config file value %r", k, v, file_values[k])
        merged[k] = v
    if "experiment" not in merged:
        raise ConfigError("missing required key", "experiment")
    exp = _coerce("experiment", str, merged["experiment"], "experiment")
    schema = _schema(exp)
    vals = {}
    for k, v in merged.items():
        if k not in schema:
            raise ConfigError(f"unknown key for experiment {exp!r}", k)
        where = "flag" if k in flag_values else "config file"
        vals[k] = _coerce(k, schema[k][0], v, where)
    for k, (typ, default) in schema.items():
        if k not in vals:
            if default is None:
                raise ConfigError("missing required key", k)
            vals[k] = default
    for k in ("n", "P", "N", "delta"):
        if not vals[k] > 0:
            raise ConfigError(f"must be positive, got {vals[k]}", k)
    if vals["seed"] < 0:
        raise ConfigError("must be nonnegative", "seed")
    if vals["trials"] < 0:
        raise ConfigError("must be nonnegative", "trials")
    for k in ("workers", "budget"):
        if vals[k] < 1:
            raise ConfigError("must be at least 1", k)
    params = {k: vals.pop(k) for k in list(vals) if k not in COMMON}
    return ExperimentConfig(params=params, **vals)


def load_config_file(path):
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", "config") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}", "config") from None
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError("nested tables are not supported; use flat keys", k)
    return data


def _parse_set(items):
    out = {}
    for it in items or []:
        if "=" not in it:
            raise ConfigError(f"expected key=value, got {it!r}", "set")
        k, v = it.split("=", 1)
        try:
            out[k.strip()] = tomllib.loads(f"x = {v.strip()}")["x"]
        except tomllib.TOMLDecodeError:
            out[k.strip()] = v.strip()
    return out


def parse_config(argv):
    ap = argparse.ArgumentParser(prog="listlab", description="List-decoding experiments.")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--n", type=int)
    ap.add_argument("--P", type=float)
    ap.add_argument("--N", type=float)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--config")
    ap.add_argument("--out")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--budget", type=int)
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="experiment-specific setting, e.g. --set omega=0.025")
    a = ap.parse_args(argv)
    file_values = load_config_file(a.config) if a.config else {}
    flags = {k: getattr(a, k) for k in ("experiment", "n", "P", "N", "delta", "seed", "trials",
                                        "out", "workers", "budget") if getattr(a, k) is not None}
    flags.update(_parse_set(a.set))
    return build_config(file_values, flags)


# --------------------------------------------------------------------------
# running

def trial_rng(seed, experiment, trial):
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(experiment.encode()), trial))
    return np.random.default_rng(ss)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _extra(d):
    return json.dumps({k: _jsonable(v) for k, v in d.items()}, sort_keys=True, separators=(",", ":"))


def run_trial(cfg, trial):
    """Rows for one trial; a budget overrun becomes a budget_exceeded row."""
    fn = EXPERIMENTS[cfg.experiment][0]
    rng = trial_rng(cfg.seed, cfg.experiment, trial)
    try:
        out = fn(cfg, trial, rng)
    except BudgetExceeded as e:
        best = getattr(e, "best", None)
        value = getattr(best, "list_size", best)
        out = [("budget_exceeded", value if value is not None else float("nan"), "budget",
                {"message": str(e)})]
    rows = [CsvRow(cfg.experiment, cfg.n, cfg.P, cfg.N, cfg.delta, cfg.seed, trial,
                   name, float(value), mode, _extra(extra)) for name, value, mode, extra in out]
    return sorted(rows, key=lambda r: r.metric_name)


def _run_star(args):
    return run_trial(*args)


def run(cfg):
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if cfg.workers == 1 or cfg.trials <= 1:
        chunks = [run_trial(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=mp.get_context("fork")) as ex:
            chunks = list(ex.map(_run_star, jobs))
    rows = [r for c in chunks for r in c]
    rows.sort(key=lambda r: (r.trial, r.metric_name))
    return rows


def _toml_value(v):
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(cfg, rows):
    buf = io.StringIO()
    buf.write(f"# listlab {__version__}\n")
    for k, v in sorted(cfg.effective().items()):
        if k in ("workers", "out"):
            continue            # do not affect the rows
        buf.write(f"# {k} = {_toml_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.fields())
    return buf.getvalue()


def read_csv(text):
    lines = [ln for ln in text.split("\n") if ln and not ln.startswith("#")]
    rec = list(csv.reader(lines))
    if not rec or tuple(rec[0]) != COLUMNS:
        raise ValueError("missing column header")
    return [CsvRow.parse(r) for r in rec[1:]]


def summarize(rows):
    by = {}
    for r in rows:
        by.setdefault(r.metric_name, []).append(r.metric_value)
    lines = []
    for k in sorted(by):
        v = np.array(by[k], dtype=float)
        v = v[np.isfinite(v)]
        if len(v) == 0:
            lines.append(f"{k}: no finite values")
            continue
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        lines.append(f"{k}: count={len(v)} median={med:.6g} iqr=[{q1:.6g}, {q3:.6g}]")
    return "\n".join(lines)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="listlab: %(message)s")
    try:
        cfg = parse_config(argv)
        cfg.channel
    except (ConfigError, DomainError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        rows = run(cfg)
    except DomainError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    text = render_csv(cfg, rows)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        report = sys.stdout
    else:
        sys.stdout.write(text)
        report = sys.stderr
    s = summarize(rows)
    if s:
        print(f"{cfg.experiment}: {cfg.trials} trials, delta={cfg.delta:g}", file=report)
        print(s, file=report)
    if any(r.metric_name == "budget_exceeded" for r in rows):
        print("budget exhausted on some trials", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
