"""
Plain-text run configuration files.

One `key = value` pair per line; `#` starts a comment, blank lines are
ignored. Keys naming RunConfig fields configure the run (`levels = 2..6` sets
both level bounds); every other key is a numeric parameter of the case, e.g.

    experiment = exp2
    sigma = 60
    method = BVS
    form = GL
    gamma = 1
    levels = 2..5
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

from pydantic import ValidationError

from stabilized_stokes.problems.benchmarks import build_case, case_parameter_names
from stabilized_stokes.schemas import RunConfig

logger = logging.getLogger(__name__)

# RunConfig fields a file may not set
_RESERVED_KEYS = {"custom_file", "case_parameters"}


class ConfigFileError(ValueError):
    """Malformed configuration file; carries the 1-based line number when known."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        location = f"{path}:{line}" if path is not None and line is not None else str(path or "")
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.line = line


def parse_level_range(text: str) -> Tuple[int, int]:
    """
    Parse "A..B" (or a single "A") into an inclusive level range.

    Raises:
        ValueError: malformed range
    """
    parts = text.strip().split("..")
    try:
        if len(parts) == 1:
            level = int(parts[0])
            return level, level
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ValueError(f"Invalid level range '{text}', expected A..B")


def parse_key_values(path: Path) -> Dict[str, Tuple[str, int]]:
    """
    Read `key = value` lines.

    Returns:
        Mapping key -> (value, line number)

    Raises:
        ConfigFileError: unreadable file, missing '=', empty key or duplicate key
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigFileError(f"Cannot read configuration file: {e}", path) from e

    entries: Dict[str, Tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"Expected 'key = value', got '{raw.strip()}'", path, number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigFileError("Empty key", path, number)
        if key in entries:
            raise ConfigFileError(f"Duplicate key '{key}' (first set on line {entries[key][1]})", path, number)
        entries[key] = (value, number)
    return entries


def _check_case_parameters(config: RunConfig, path: Path, lines: Dict[str, int]) -> None:
    """Build the case once so unknown or out-of-range parameters point at their line."""
    accepted = case_parameter_names(config.experiment)
    for key in config.case_parameters:
        if key not in accepted:
            raise ConfigFileError(
                f"Unknown parameter '{key}' for {config.experiment.value}; expected one of {', '.join(accepted)}",
                path,
                lines.get(key),
            )
    try:
        build_case(config.experiment, **config.case_parameters)
    except ValueError as e:
        numbers = [lines[key] for key in config.case_parameters if key in lines]
        line = min(numbers) if numbers else lines.get("experiment")
        raise ConfigFileError(str(e), path, line) from e


def load_run_config(path: Path, **overrides) -> RunConfig:
    """
    Build a RunConfig from a configuration file.

    Args:
        path: configuration file
        **overrides: RunConfig fields taking precedence over the file

    Raises:
        ConfigFileError: malformed line or invalid value, with its line number
    """
    path = Path(path)
    entries = parse_key_values(path)
    fields: Dict[str, str] = {}
    case_parameters: Dict[str, str] = {}
    lines: Dict[str, int] = {}

    for key, (value, number) in entries.items():
        if key in _RESERVED_KEYS:
            raise ConfigFileError(f"Key '{key}' cannot be set from a file", path, number)
        if key == "levels":
            try:
                low, high = parse_level_range(value)
            except ValueError as e:
                raise ConfigFileError(str(e), path, number) from e
            fields["level_min"], fields["level_max"] = str(low), str(high)
            lines["level_min"] = lines["level_max"] = number
        elif key in RunConfig.model_fields:
            fields[key] = value
            lines[key] = number
        else:
            case_parameters[key] = value
            lines[key] = number

    try:
        config = RunConfig(**{**fields, "case_parameters": case_parameters, "custom_file": path, **overrides})
    except ValidationError as e:
        error = e.errors()[0]
        loc = [str(part) for part in error["loc"]]
        key = loc[1] if loc and loc[0] == "case_parameters" and len(loc) > 1 else (loc[0] if loc else "")
        raise ConfigFileError(f"Invalid value for '{key}': {error['msg']}", path, lines.get(key)) from e

    _check_case_parameters(config, path, lines)
    logger.info(f"Loaded configuration {path}: {config.experiment.value}, levels {config.level_min}..{config.level_max}")
    return config
