"""Entire spacelike hypersurfaces of prescribed Gauss curvature in Minkowski space.

Submodules: core_geometry, symmetric_family, convex_analysis, variational,
ma_solver, acceptance and cli.
"""
__version__ = "0.1.0"
