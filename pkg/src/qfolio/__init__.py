"""Markowitz statistics, portfolio QUBO encoding and QAOA on a dense state vector."""

__version__ = "0.1.0"
