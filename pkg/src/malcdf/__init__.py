"""Coordinated multi-agent cyber-defense pipeline."""

__version__ = "0.1.0"
