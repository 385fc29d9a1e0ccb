"""Affine-in-velocities Lagrangians from Jacobi multipliers."""
