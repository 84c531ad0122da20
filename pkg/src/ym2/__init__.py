"""Wilson loop expectations of two-dimensional Yang-Mills on the plane.

Four independent evaluation engines over U(N), SO(N), SU(N), Sp(N/2) —
an exact surface-sum series, Monte Carlo surface sampling, a matrix
exponential of a walk on permutations, and direct simulation of group
Brownian motion — plus the deterministic large-N master field computed by
free cumulants, non-crossing series restriction, and forest polynomials.
"""

from __future__ import annotations

from .groups import GroupSpec
from .words import Word, WordParseError, parse_areas, parse_word

__all__ = [
    "GroupSpec",
    "Word",
    "WordParseError",
    "parse_areas",
    "parse_word",
]

__version__ = "0.1.0"
