"""Error types shared across the toolkit.

The CLI maps DataError to exit code 1 and argparse usage failures to
exit code 2, so anything raised here must describe a problem with the
*inputs*, not with how the tool was invoked.
"""


class DataError(ValueError):
    """Invalid input data: bad geometry, malformed records, broken invariants."""


class FormatError(DataError):
    """Malformed binary/text file. Carries a byte offset when known."""

    def __init__(self, message, *, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
