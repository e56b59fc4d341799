"""CLI package for egolsm."""

from cli.main import main

__all__ = ["main"]
