"""Crystalline and anisotropic mean curvature flow by level set minimizing movements."""

from . import anisotropy, grid, redistance

__all__ = ["anisotropy", "grid", "redistance"]
