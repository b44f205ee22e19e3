"""Trotter error bounds for the Fermi-Hubbard model."""


class HubbardTrotterError(Exception):
    """Base class for errors raised by this package."""
