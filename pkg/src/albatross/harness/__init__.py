"""Agents, experiment drivers, analysis metrics, file I/O and the CLI."""
