from stabilized_stokes.helper.confighelper import (
    ConfigFileError,
    load_run_config,
    parse_key_values,
    parse_level_range,
)

__all__ = [
    "ConfigFileError",
    "load_run_config",
    "parse_key_values",
    "parse_level_range",
]
