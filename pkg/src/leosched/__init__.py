"""Reverse-engineering a LEO broadband global scheduler from terminal-side data."""

__version__ = "0.1.0"
