"""Hamilton-Jacobi solutions of 1D autonomous systems through energy-preserving time reparametrizations."""

__version__ = "0.1.0"
