"""Exact PEPS laboratory for classical-quantum correspondences on small square lattices."""
__version__ = "0.1.0"
