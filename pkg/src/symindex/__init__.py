"""Conley-Zehnder and Maslov-type indices of symplectic paths, applied to
the stability analysis of Keplerian ellipses."""

from . import analytic, errors, kepler, maslov, symcore

__version__ = "0.1.0"

__all__ = ["analytic", "errors", "kepler", "maslov", "symcore", "__version__"]
