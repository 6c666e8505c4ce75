"""Command-line interface for isacsim."""

from isacsim.cli.main import app, main

__all__ = ["app", "main"]
