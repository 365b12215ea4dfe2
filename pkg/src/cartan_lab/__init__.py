"""Exact-arithmetic lab for finite groupoids, twisted convolution algebras,
and the classification of intermediate subalgebras of diagonal inclusions."""

from cartan_lab.errors import GuardExceeded, InputError, InternalCheckError

__version__ = "0.1.0"

__all__ = ["GuardExceeded", "InputError", "InternalCheckError", "__version__"]
