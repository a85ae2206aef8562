"""Exception taxonomy shared across the pipeline and the CLI.

The CLI maps these to exit codes: ConfigError -> 2, IntegrityError -> 3,
PipelineError -> 4.
"""


class ConfigError(Exception):
    """Invalid or incomplete configuration (message names the field path)."""


class IntegrityError(Exception):
    """A persisted artifact is missing or fails its recorded content hash."""


class PipelineError(Exception):
    """A pipeline precondition is violated (e.g. rank-deficient populations)."""
