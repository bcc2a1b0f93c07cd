"""Exact computation of L2-Betti numbers for finite measured groupoids,
tracial extensions, their fiber squares and chain complexes."""

__version__ = "0.1.0"
