"""Casimir pressure between dielectric bodies: Lifshitz planar theory, dielectric balls and a dipole-lattice oracle."""

__version__ = "0.1.0"
