"""Common exception base for the toolkit.

Every error raised by omld's own logic derives from ToolkitError, so callers
(notably the CLI) can distinguish toolkit failures from programming errors.
"""


class ToolkitError(Exception):
    pass
