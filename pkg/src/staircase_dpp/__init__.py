"""Nonintersecting geometric walks with equidistant starting points."""
__version__ = "0.1.0"
