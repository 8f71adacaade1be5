"""Run configuration: a plain ``key = value`` document with ``#`` comments."""

import dataclasses
import hashlib
import math
from dataclasses import dataclass

from .errors import ConfigParseError
from .radial import MIN_NODES

FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class RunConfig:
    # base grid: ground state, lam = 1 solutions, fixed-lam solves
    r_max: float = 20.0
    n: int = 2000
    # grids chosen per lam: step at lam <= 1, decay length factor
    branch_h: float = 0.01
    branch_decay: float = 15.0
    probe_h: float = 0.02
    spectral_h: float = 0.02
    # tolerances
    newton_tol: float = 1e-9
    eig_tol: float = 1e-13
    ratio_tol: float = 1e-8
    # continuation
    ds0: float = 0.02
    ds_min: float = 1e-7
    ds_max: float = 0.25
    step_grow: float = 1.3
    step_shrink: float = 0.5
    max_points: int = 2000
    seed_eps: float = 1e-2
    lambda_min: float = 0.05
    lambda_max: float = 20.0
    # bifurcation curves
    curve_points: int = 200
    curve_lambda_min: float = 1e-3
    curve_lambda_max: float = 1e3
    # evidence maps
    seed: int = 0
    probes: int = 50
    # output
    out_dir: str = "."
    formats: str = "csv,json,svg"

    def __post_init__(self):
        _validate(self)

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]

    def text(self, with_output=True):
        """Canonical ``key = value`` form; parses back to an equal config.

        ``with_output=False`` drops out_dir, which never changes a result.
        """
        items = self.items() if with_output else [kv for kv in self.items() if kv[0] != "out_dir"]
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in items)

    def sha256(self):
        return hashlib.sha256(self.text(with_output=False).encode()).hexdigest()

    def format_list(self):
        return tuple(f for f in self.formats.split(",") if f)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


_POSITIVE = {
    "r_max", "branch_h", "branch_decay", "probe_h", "spectral_h", "newton_tol", "eig_tol",
    "ratio_tol", "ds0", "ds_min", "ds_max", "seed_eps", "lambda_min", "lambda_max",
    "curve_lambda_min", "curve_lambda_max",
}


class _BoundError(ConfigParseError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


def _validate(cfg):
    def fail(key, msg):
        raise _BoundError(key, msg)

    for key in _POSITIVE:
        v = getattr(cfg, key)
        if not (math.isfinite(v) and v > 0):
            fail(key, f"must be positive, got {v}")
    if cfg.n < MIN_NODES:
        fail("n", f"must be >= {MIN_NODES}, got {cfg.n}")
    if cfg.max_points < 2:
        fail("max_points", "must be >= 2")
    if cfg.curve_points < 2:
        fail("curve_points", "must be >= 2")
    if cfg.probes < 1:
        fail("probes", "must be >= 1")
    if cfg.seed < 0:
        fail("seed", "must be >= 0")
    if not cfg.ds_min <= cfg.ds0 <= cfg.ds_max:
        fail("ds0", "need ds_min <= ds0 <= ds_max")
    if cfg.step_grow < 1:
        fail("step_grow", "must be >= 1")
    if not 0 < cfg.step_shrink < 1:
        fail("step_shrink", "must lie in (0, 1)")
    if cfg.lambda_min >= cfg.lambda_max:
        fail("lambda_min", "must be < lambda_max")
    if cfg.curve_lambda_min >= cfg.curve_lambda_max:
        fail("curve_lambda_min", "must be < curve_lambda_max")
    bad = [f for f in cfg.format_list() if f not in FORMATS]
    if bad or not cfg.format_list():
        fail("formats", f"comma-separated subset of {FORMATS}, got {cfg.formats!r}")


def _convert(key, raw, kind, line):
    try:
        if kind is int:
            if raw.strip().lstrip("+-").isdigit():
                return int(raw)
            raise ValueError
        if kind is float:
            return float(raw)
    except ValueError:
        expected = "an integer" if kind is int else "a number"
        raise ConfigParseError(f"{key}: expected {expected}, got {raw!r}", line) from None
    return raw


def parse_config(text, base=None):
    """Strict parse; unknown keys, repeated keys and bad values raise with the line number."""
    base = RunConfig() if base is None else base
    kinds = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    kinds = {k: {"float": float, "int": int, "str": str}.get(v, v) for k, v in kinds.items()}
    values, line_of = {}, {}
    for no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigParseError(f"expected 'key = value', got {body!r}", no)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in kinds:
            raise ConfigParseError(f"unknown key {key!r}", no)
        if key in values:
            raise ConfigParseError(f"{key} given twice (first on line {line_of[key]})", no)
        if not raw:
            raise ConfigParseError(f"{key}: missing value", no)
        values[key] = _convert(key, raw, kinds[key], no)
        line_of[key] = no
    fields = dict(base.items())
    fields.update(values)
    try:
        return RunConfig(**fields)
    except _BoundError as exc:
        raise ConfigParseError(str(exc), line_of.get(exc.key)) from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc.strerror}") from exc
