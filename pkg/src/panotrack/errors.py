"""Exception types mapped to distinct CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration value, scenario spec, or unknown class group."""


class DataFormatError(ValueError):
    """Malformed or inconsistent on-disk data (sizes, offsets, ranges)."""


class EvaluationError(ValueError):
    """Ground truth and prediction streams cannot be compared."""
