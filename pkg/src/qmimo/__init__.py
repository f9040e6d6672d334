"""Cloning, crosstalk channels and purification for discrete-variable quantum MIMO links."""

__version__ = "0.1.0"
