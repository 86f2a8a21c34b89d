"""Cayley-graph growth, conjugacy classes and trace tools for discrete groups."""

__version__ = "0.1.0"

from .groups import Element, Group, FreeGroup, FiniteGroup, make_backend, preset  # noqa: F401
