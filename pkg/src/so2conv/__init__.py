"""Equivariant convolutions via the edge-aligned SO(2) reduction."""

__version__ = "0.1.0"
