"""Game-theoretic solvers, rationality estimation, simultaneous-move search and self-play for Battlesnake/Tron."""

__version__ = "0.1.0"
