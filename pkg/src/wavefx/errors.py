"""Shared exception hierarchy.

Two broad families so the CLI can map failures to exit codes:
``DataError`` for I/O and malformed inputs (exit 1), ``ValidationError``
for out-of-range parameters and contract violations (exit 2).
"""


class WavefxError(Exception):
    pass


class DataError(WavefxError):
    pass


class ValidationError(WavefxError):
    pass


class SeriesTooShort(ValidationError):
    def __init__(self, needed: int, got: int, what: str = "series"):
        self.needed = needed
        self.got = got
        super().__init__(f"{what} too short: need {needed}, got {got}")


class LengthMismatch(ValidationError):
    pass
