"""
Spillover Forge: content-creation games with effort spillovers.

Models creator games where qualities depend on everyone's effort, computes
greatest equilibria under provisional allocation, and searches for
welfare-maximizing allocations.
"""

__version__ = "1.0.0"
