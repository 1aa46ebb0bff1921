"""Shared helpers: ε-grid arithmetic, effort grids, seeded random streams."""
