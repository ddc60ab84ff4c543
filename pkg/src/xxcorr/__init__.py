"""Finite-temperature correlators of the XX spin chain."""
