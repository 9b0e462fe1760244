"""Exact closed forms of edge-type state integrals on ideal triangulations,
with an A-polynomial elimination engine and numeric cross-checks."""

__version__ = "0.1.0"
