"""Density of Muntz-type systems: real powers, psi-powers, modulated and cosine-power systems."""

__version__ = "0.1.0"
