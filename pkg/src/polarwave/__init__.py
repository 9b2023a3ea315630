"""Linear and nonlinear wave evolution in polar (R, S) form."""

__version__ = "0.1.0"
