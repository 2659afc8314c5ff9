"""Nodal solutions of switched planar systems with stepwise weights."""

__version__ = '0.1.0'
