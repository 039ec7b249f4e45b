"""
leobeam - Beam management simulator for multi-satellite LEO constellations.
"""

from .leobeam import main

__all__ = ("main",)
