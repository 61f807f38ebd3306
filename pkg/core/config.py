"""Run Configuration Module.

This module resolves the configuration of one command-line run. Values come,
in increasing priority, from the dataclass defaults, from DYNLAB_* variables
in the environment or a .env file, from explicit command-line flags and
finally from --set key=value overrides. The resolved configuration is echoed
as sorted key=value lines next to every output.
"""

import logging
import os
from dataclasses import dataclass, fields
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

from core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

ENV_PREFIX = "DYNLAB_"

SUBCOMMANDS = ("lyap", "scan", "density", "centers", "verify")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one run; every field has a default."""
    subcommand: str = "lyap"
    family: str = "quadratic"
    grid: str = "-0.5,0,2,512,384"
    method: str = "formula"
    field: str = "L"
    param: str = "0"
    seed: int = 0
    out: str = "run"
    workers: int = 1
    tol: float = 1e-10
    max_iter: int = 4096
    root_tol: float = 1e-8
    division_tol: float = 1e-9
    samples: int = 100000
    burn_in: int = 64
    chains: int = 100
    n_max: int = 10
    n: int = 2
    w: str = "0"
    wedge: str = ""
    input: str = ""
    suite: str = "quick"
    base: str = ""
    coords: str = ""
    wedge_resolution: int = 32
    log_level: str = "INFO"
    log_file: str = ""

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigurationError(f"Unknown subcommand {self.subcommand!r}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigurationError(f"Seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigurationError(f"Worker count must be positive, got {self.workers}")
        for name in ("tol", "root_tol", "division_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("max_iter", "samples", "chains", "n_max", "n", "wedge_resolution"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.burn_in < 0:
            raise ConfigurationError(f"burn_in must be non-negative, got {self.burn_in}")
        if self.suite not in ("quick", "full"):
            raise ConfigurationError(f"Unknown verification suite {self.suite!r}")

    def render(self) -> str:
        """Sorted key=value lines, one per field."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        return "".join(f"{key}={_format(values[key])}\n" for key in sorted(values))

    @property
    def params(self) -> List[complex]:
        return parse_complex_list(self.param)

    @property
    def base_point(self) -> Tuple[complex, ...]:
        return tuple(parse_complex_list(self.base)) if self.base else ()

    @property
    def grid_coords(self) -> Tuple[int, ...]:
        try:
            return tuple(int(k) for k in self.coords.split(",") if k.strip()) if self.coords else ()
        except ValueError:
            raise ConfigurationError(f"Invalid coordinate list {self.coords!r}")


def _format(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_complex(text: str) -> complex:
    """Parse a Python complex literal such as -0.75, 0.25+0.5j or 1e-3j."""
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise ConfigurationError(f"Invalid complex number {text!r}")


def parse_complex_list(text: str) -> List[complex]:
    return [parse_complex(part) for part in text.split(",") if part.strip()]


def _convert(name: str, raw: str) -> Any:
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if name not in kinds:
        raise ConfigurationError(f"Unknown configuration key {name!r}")
    kind = kinds[name]
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"Invalid value for {name}: {raw!r}")
    return raw


def parse_overrides(items: Iterable[str]) -> Dict[str, Any]:
    """Turn ['key=value', ...] into typed values.

    Raises:
        ConfigurationError: On a malformed item or an unknown key.
    """
    overrides = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"Override {item!r} is not of the form key=value")
        key = key.strip()
        overrides[key] = _convert(key, raw.strip())
    return overrides


def environment_values(environ: Optional[Mapping[str, str]] = None,
                       dotenv_path: Optional[str] = None) -> Dict[str, Any]:
    """Typed DYNLAB_* values from the environment, after loading a .env file."""
    if environ is None:
        load_dotenv(dotenv_path=dotenv_path, override=False)
        environ = os.environ
    names = {f.name for f in fields(RunConfig)}
    values = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in names:
            values[name] = _convert(name, raw)
        else:
            logger.debug(f"Ignoring unknown environment setting {key}")
    return values


def resolve_config(flags: Mapping[str, Any], overrides: Iterable[str] = (),
                   environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Combine defaults, environment, flags and overrides into a RunConfig.

    Args:
        flags: Explicitly given command-line values; None entries are skipped.
        overrides: --set key=value items.
        environ: Environment mapping; os.environ plus .env when None.

    Returns:
        RunConfig: The resolved configuration.
    """
    values: Dict[str, Any] = dict(environment_values(environ))
    values.update({key: value for key, value in flags.items() if value is not None})
    values.update(parse_overrides(overrides))
    unknown = set(values) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise ConfigurationError(f"Unknown configuration key(s): {', '.join(sorted(unknown))}")
    config = RunConfig(**values)
    logger.debug(f"Resolved configuration:\n{config.render()}")
    return config
