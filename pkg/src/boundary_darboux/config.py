"""Run configuration: a flat ``key = value`` text file with ``#`` comments.

Example::

    f = x^2 + y + x^3
    omega = exp(x) * (1 + y)
    eps_max = 0.16
    grid = 41x21
    output_dir = out
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .normal_form import CHECKS, GridSpec
from .numerics import ToleranceConfig

FORMATS = ("csv", "json")
_TOL_KEYS = {f.name: f.type for f in fields(ToleranceConfig)}


@dataclass(frozen=True)
class RunConfig:
    f_expr: str
    omega_expr: str
    eps_max: float = 0.16
    profile_points: int = 64
    grid: GridSpec = field(default_factory=GridSpec)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    check_tols: dict = field(default_factory=dict)
    output_dir: Path = Path(".")
    formats: tuple = FORMATS
    chart_radius: float = 0.5
    fault_p_scale: float = 1.0

    def __post_init__(self):
        if not self.f_expr.strip() or not self.omega_expr.strip():
            raise ConfigError("f and omega must be non-empty expressions")
        if not self.eps_max > 0:
            raise ConfigError(f"eps_max must be positive, got {self.eps_max}")
        if self.profile_points < 16:
            raise ConfigError(f"profile_points must be at least 16, got {self.profile_points}")
        if not self.chart_radius > 0:
            raise ConfigError("chart_radius must be positive")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown format(s): {', '.join(sorted(bad))}")


def _number(key: str, text: str, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {text!r}") from None
    return value


def parse_pairs(lines, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key")
        out[key] = value
    return out


def build_config(pairs: dict, base_dir: Path | None = None) -> RunConfig:
    pairs = dict(pairs)
    kwargs = {}
    tol_kwargs = {}
    check_tols = {}
    try:
        kwargs["f_expr"] = pairs.pop("f")
        kwargs["omega_expr"] = pairs.pop("omega")
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]!r}") from None
    for key, value in pairs.items():
        if key == "eps_max":
            kwargs["eps_max"] = _number(key, value)
        elif key == "profile_points":
            kwargs["profile_points"] = _number(key, value, int)
        elif key == "grid":
            try:
                kwargs["grid"] = GridSpec.parse(value)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif key in _TOL_KEYS:
            tol_kwargs[key] = _number(key, value, int if key == "newton_max_iter" else float)
        elif key.startswith("tol_") and key[4:] in CHECKS:
            check_tols[key[4:]] = _number(key, value)
        elif key == "output_dir":
            path = Path(value)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            kwargs["output_dir"] = path
        elif key == "formats":
            kwargs["formats"] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "chart_radius":
            kwargs["chart_radius"] = _number(key, value)
        elif key == "fault_p_scale":
            kwargs["fault_p_scale"] = _number(key, value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    try:
        kwargs["tolerances"] = ToleranceConfig(**tol_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kwargs["check_tols"] = check_tols
    return RunConfig(**kwargs)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a config file; relative output_dir is resolved against its directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    pairs = parse_pairs(text.splitlines(), str(path))
    pairs.update(overrides or {})
    return build_config(pairs, base_dir=path.parent)


def with_output_dir(config: RunConfig, path) -> RunConfig:
    return replace(config, output_dir=Path(path))
