"""Identification schemes and distance measures for projective measurements."""
__version__ = "0.1.0"
