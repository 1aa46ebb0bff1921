"""Constant tables: numeric tolerances, enumeration guards and experiment presets."""
