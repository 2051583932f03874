"""Run configuration: one TOML file with a section per module.

Every section is a dataclass; unknown keys are rejected with the full list
of offenders, and ``--set section.key=value`` overrides are applied on the
parsed mapping before validation.
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any

from .bobylev import SolveConfig
from .charfun import RadialGrid
from .errors import ConfigError, DomainError
from .kernel import AngularKernel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class KernelSection:
    form: str = "constant"
    level: float = 1.0
    s: float = 0.25
    K: float = 1.0
    cutoff: float | None = None
    table_theta: list | None = None
    table_values: list | None = None

    def build(self) -> AngularKernel:
        if self.form == "constant":
            return AngularKernel.constant(self.level, self.cutoff)
        if self.form == "power_law":
            return AngularKernel.power_law(self.s, self.K, cutoff_n=self.cutoff)
        if self.form == "tabulated":
            if not self.table_theta or not self.table_values:
                raise DomainError("tabulated kernel needs table_theta and table_values")
            return AngularKernel.tabulated(self.table_theta, self.table_values, self.cutoff)
        raise DomainError(f"unknown kernel form {self.form!r}")


@dataclass(frozen=True)
class InitialSection:
    family: str = "gaussian(var=1)"
    csv: str | None = None


@dataclass(frozen=True)
class CompareSection:
    family: str = "gaussian(var=1.1)"
    C: float = 1.0
    slack: float = 1e-3


@dataclass(frozen=True)
class ConstantsSection:
    exponents: list = field(default_factory=lambda: [0.0, 1.0, 2.0])


@dataclass(frozen=True)
class NormsSection:
    alpha: float = 1.0
    beta: float = 0.5
    eps: float = 0.5


@dataclass(frozen=True)
class ClassifySection:
    alpha: float = 1.5
    lift_n: int = 0


@dataclass(frozen=True)
class LimitSection:
    n_list: list = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0])


@dataclass(frozen=True)
class PovznerSection:
    samples: int = 10_000
    n: int = 1
    alpha: float = 1.0
    delta: float = 1e-3


@dataclass(frozen=True)
class DsmcSection:
    N: int = 100_000
    dt: float = 0.001
    horizon: float = 1.0
    record_times: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    moment_n: int = 1
    moment_alpha: float = 1.0


SECTIONS = {
    "kernel": KernelSection, "initial": InitialSection, "compare": CompareSection,
    "solver": SolveConfig, "grid": RadialGrid, "constants": ConstantsSection,
    "norms": NormsSection, "classify": ClassifySection, "limit": LimitSection,
    "povzner": PovznerSection, "dsmc": DsmcSection,
}
TOP_LEVEL = {"seed": 0, "workers": 1}


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelSection = KernelSection()
    initial: InitialSection = InitialSection()
    compare: CompareSection = CompareSection()
    solver: SolveConfig = SolveConfig()
    grid: RadialGrid = RadialGrid()
    constants: ConstantsSection = ConstantsSection()
    norms: NormsSection = NormsSection()
    classify: ClassifySection = ClassifySection()
    limit: LimitSection = LimitSection()
    povzner: PovznerSection = PovznerSection()
    dsmc: DsmcSection = DsmcSection()
    seed: int = 0
    workers: int = 1

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = asdict(v) if is_dataclass(v) else v
        if out["solver"].get("record_times") is not None:
            out["solver"]["record_times"] = list(out["solver"]["record_times"])
        return out


def parse_value(text: str) -> Any:
    """TOML-style scalar or array from an override string; bare words stay strings."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    for item in overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        parts = key.strip().split(".")
        if len(parts) == 1:
            data[parts[0]] = parse_value(val.strip())
        elif len(parts) == 2:
            data.setdefault(parts[0], {})
            if not isinstance(data[parts[0]], dict):
                raise ConfigError(f"{parts[0]!r} is not a section")
            data[parts[0]][parts[1]] = parse_value(val.strip())
        else:
            raise ConfigError(f"override key {key!r} must be 'section.key' or a top-level key")
    return data


def _coerce(cls, name, values: dict):
    known = {f.name: f for f in fields(cls) if not f.name.startswith("_")}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(known))}")
    kw = {}
    for k, v in values.items():
        if k == "record_times" and v is not None:
            v = tuple(v)
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, DomainError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from None


def build_config(data: dict) -> RunConfig:
    unknown = sorted(set(data) - set(SECTIONS) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(unknown)}; "
                          f"sections: {', '.join(sorted(SECTIONS))}")
    kw = {}
    for name, cls in SECTIONS.items():
        sec = data.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"[{name}] must be a table")
        kw[name] = _coerce(cls, name, sec)
    for k, default in TOP_LEVEL.items():
        v = data.get(k, default)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{k} must be an integer")
        kw[k] = v
    return RunConfig(**kw)


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    return build_config(apply_overrides(data, overrides or []))


def dumps(cfg: RunConfig) -> str:
    return json.dumps(cfg.as_dict(), indent=2, sort_keys=True, default=str)
