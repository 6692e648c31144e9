"""Run configuration: TOML sections with documented defaults and strict keys."""

from __future__ import annotations

import dataclasses
import re
import sys
from dataclasses import dataclass, field

from .bundle import BundleConfig
from .emom import ForwardModel, ObjectiveSpec
from .errors import ConfigError
from .grid import AdmissibleSet, make_uniform_grid
from .kinetics import KineticsParams
from .nominal import NominalConfig
from .uncertainty import UncertaintySet

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_BUDGET = 4.0


@dataclass(frozen=True)
class GridConfig:
    T: float = 10.0
    N_t: int = 100


@dataclass(frozen=True)
class AdmissibleConfig:
    """Bounds ``l <= v <= u`` and budget ``V_tot``; ``u`` defaults to ``3 V_tot / T``."""

    l: float = 0.0
    u: float | None = None
    V_tot: float = DEFAULT_BUDGET


@dataclass(frozen=True)
class UncertaintyConfig:
    u_l: float = 0.9
    u_u: float = 1.1

    def __post_init__(self):
        if not 0 < self.u_l < 1:
            raise ValueError(f"u_l must satisfy 0 < u_l < 1, got {self.u_l}")
        if not self.u_u > 1:
            raise ValueError(f"u_u must exceed 1, got {self.u_u}")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "runs"


SECTIONS = {
    "grid": GridConfig,
    "kinetics": KineticsParams,
    "objective": ObjectiveSpec,
    "admissible": AdmissibleConfig,
    "uncertainty": UncertaintyConfig,
    "nominal": NominalConfig,
    "bundle": BundleConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    kinetics: KineticsParams = field(default_factory=KineticsParams)
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    admissible: AdmissibleConfig = field(default_factory=AdmissibleConfig)
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    nominal: NominalConfig = field(default_factory=NominalConfig)
    bundle: BundleConfig = field(default_factory=BundleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    # set by the --uncertainty-size override; 0 selects the nominal-only set
    uncertainty_size: float | None = None

    def time_grid(self):
        try:
            return make_uniform_grid(self.grid.T, self.grid.N_t)
        except Exception as exc:
            raise ConfigError(str(exc), section="grid") from exc

    def model(self, backend=None) -> ForwardModel:
        return ForwardModel(self.time_grid(), self.kinetics, self.objective, backend=backend)

    def admissible_set(self, grid=None) -> AdmissibleSet:
        grid = grid or self.time_grid()
        a = self.admissible
        upper = 3.0 * a.V_tot / grid.T if a.u is None else a.u
        try:
            return AdmissibleSet.for_grid(grid, a.l, upper, a.V_tot)
        except Exception as exc:
            raise ConfigError(str(exc), section="admissible") from exc

    def uncertainty_set(self, size: float | None = None) -> UncertaintySet:
        """Set from ``[uncertainty]``, or the symmetric set of relative ``size`` if given."""
        size = self.uncertainty_size if size is None else size
        n = self.grid.N_t
        if size is not None:
            if not 0 <= size < 1:
                raise ConfigError(f"uncertainty size must lie in [0, 1), got {size}", section="uncertainty")
            return UncertaintySet.symmetric(size, n)
        return UncertaintySet(self.uncertainty.u_l, self.uncertainty.u_u, n)

    def with_uncertainty_size(self, size: float | None) -> "RunConfig":
        return dataclasses.replace(self, uncertainty_size=size)

    def to_dict(self) -> dict:
        out = {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}
        out["admissible"]["u_effective"] = self.admissible_set().upper
        out["uncertainty_size"] = self.uncertainty_size
        return out


def _key_line(text: str, section: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header when ``key`` is None)."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", line):
            return i
    return None


def _build_section(name, cls, values, text):
    if not isinstance(values, dict):
        raise ConfigError(f"[{name}] must be a table", section=name, line=_key_line(text, name, None))
    known = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", section=name, line=_key_line(text, name, key))
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        key = next((k for k in values if k in str(exc)), None)
        raise ConfigError(str(exc), section=name, line=_key_line(text, name, key)) from exc


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; absent sections and keys take their defaults."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"parse error: {exc}", line=int(m.group(1)) if m else None) from exc
    parts = {}
    for name, values in data.items():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]", section=name, line=_key_line(text, name, None))
        parts[name] = _build_section(name, SECTIONS[name], values, text)
    cfg = RunConfig(**parts)
    # cross-section checks
    cfg.time_grid()
    cfg.admissible_set()
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text)
