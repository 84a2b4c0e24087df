"""Shared error types.

Every failure raised by this package carries a short kebab-case ``code``
suitable for machine parsing, plus a human-readable message. The CLI maps
:class:`UsageError` to exit code 2 and :class:`NumericalError` to exit
code 1, emitting ``{"error": code, "message": ...}`` on stderr.
"""

from __future__ import annotations


class BetalabError(Exception):
    """Base class for package errors."""

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")

    def record(self) -> dict:
        return {"error": self.code, "message": self.message}


class UsageError(BetalabError):
    """The caller asked for something malformed or unsupported.

    Examples: unknown potential kind, beta <= 0, out-of-range evaluation
    points, unknown config keys.
    """


class NumericalError(BetalabError):
    """A computation could not meet its accuracy or validity contract.

    Examples: non-generic density polynomial, variational residual too
    large, Newton iteration stalling, badly mixing Markov chain.
    """
