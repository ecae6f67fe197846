"""Shared exception hierarchy."""


class KeyfloodError(Exception):
    """Base class for all package errors."""


class InputError(KeyfloodError):
    """Malformed document, bad argument, or precondition violation (CLI exit 2)."""


class InfeasibleError(KeyfloodError):
    """Well-formed request that admits no answer (CLI exit 1)."""
