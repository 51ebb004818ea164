"""TOML experiment configuration.

::

    [potential]          # coefficients of V (role = "U" to give U = -V instead)
    cos = [0.0, 0.0375, 0.25]
    sin = [0.075]

    [alpha]
    cos = [0.7]

    [run]
    h = [0.3, 0.2, 0.15, 0.1]
    n = 512
    methods = ["predict", "witten", "grushin", "direct"]
    replicas = 10000
    seed = 20240601
    output_dir = "out"
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .potential import TorusPotential

METHODS = ("predict", "witten", "grushin", "direct", "pencil", "semigroup", "simulate")
OUTPUT_ENV = "ZIGZAG_EK_OUTPUT_DIR"
DEFAULT_OUTPUT = "zigzag_ek_out"


@dataclass(frozen=True)
class ExperimentConfig:
    potential: TorusPotential  # V
    alpha: TorusPotential
    h_list: tuple
    n: int = 256
    methods: frozenset = frozenset({"predict"})
    replicas: int = 1000
    seed: int = 0
    output_dir: Path = Path(DEFAULT_OUTPUT)
    radius_scale: float = 5.0

    def __post_init__(self):
        hs = tuple(float(h) for h in self.h_list)
        object.__setattr__(self, "h_list", hs)
        object.__setattr__(self, "methods", frozenset(self.methods))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not hs or any(h <= 0 for h in hs):
            raise ConfigError("h list must be non-empty and positive")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError(f"h list must be strictly decreasing, got {list(hs)}")
        if self.n < 4 or self.n % 2:
            raise ConfigError(f"n must be an even integer >= 4, got {self.n}")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        unknown = self.methods - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; choose from {list(METHODS)}")
        if self.replicas < 1:
            raise ConfigError("replicas must be positive")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    @property
    def U(self) -> TorusPotential:
        return -self.potential


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


def _fail(text: str, key: str, msg: str):
    line = _line_of(text, key)
    where = f"line {line}: " if line else ""
    raise ConfigError(f"{where}{key}: {msg}")


def _potential(text: str, data: dict, section: str) -> TorusPotential:
    block = data.get(section)
    if block is None:
        raise ConfigError(f"missing [{section}] table")
    try:
        p = TorusPotential.from_mapping(block)
    except (ValueError, TypeError) as exc:
        _fail(text, "cos", f"[{section}] {exc}")
    role = block.get("role", "V")
    if role not in ("V", "U"):
        _fail(text, "role", f"expected 'V' or 'U', got {role!r}")
    return -p if (section == "potential" and role == "U") else p


def parse_config(text: str, default_output: str | None = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    V = _potential(text, data, "potential")
    alpha = _potential(text, data, "alpha") if "alpha" in data else TorusPotential.constant(0.0)
    run = data.get("run", {})
    known = {"h", "n", "methods", "replicas", "seed", "output_dir", "radius_scale"}
    for key in run:
        if key not in known:
            _fail(text, key, "unknown key in [run]")
    h = run.get("h")
    if h is None:
        raise ConfigError("[run] needs an h list")
    h = [h] if isinstance(h, (int, float)) else h
    out = run.get("output_dir") or default_output or os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT)
    for key, typ in (("n", int), ("replicas", int), ("seed", int)):
        if key in run and (not isinstance(run[key], typ) or isinstance(run[key], bool)):
            _fail(text, key, f"expected an integer, got {run[key]!r}")
    try:
        return ExperimentConfig(
            potential=V,
            alpha=alpha,
            h_list=tuple(h),
            n=run.get("n", 256),
            methods=frozenset(run.get("methods", ["predict"])),
            replicas=run.get("replicas", 1000),
            seed=run.get("seed", 0),
            output_dir=Path(out),
            radius_scale=float(run.get("radius_scale", 5.0)),
        )
    except ConfigError as exc:
        msg = str(exc)
        for key, word in (("n", "n must"), ("h", "h list"), ("methods", "method"), ("replicas", "replicas")):
            if word in msg:
                _fail(text, key, msg)
        raise


def load_config(path, default_output: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_config(text, default_output)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def canonical_config_text(alpha: float = 0.7) -> str:
    return f"""[potential]
cos = [0.0, 0.0375, 0.25]
sin = [0.075]

[alpha]
cos = [{alpha!r}]

[run]
h = [0.3, 0.2, 0.15, 0.1]
n = 512
methods = ["predict", "witten", "grushin", "direct", "pencil"]
replicas = 10000
seed = 20240601
"""
