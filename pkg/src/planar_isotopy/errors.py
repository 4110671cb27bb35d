"""Exception type shared by every module."""

from __future__ import annotations

from typing import Any


class GeometryError(ValueError):
    """A construction could not be carried out.

    ``code`` is a short stable identifier (``"empty-set"``, ``"pole"``, ...)
    that callers and tests match on; ``witness`` carries whatever located the
    failure (a point, a time, a pair of chords).
    """

    def __init__(self, code: str, message: str = "", witness: Any = None):
        self.code = code
        self.witness = witness
        super().__init__(f"{code}: {message}" if message else code)
