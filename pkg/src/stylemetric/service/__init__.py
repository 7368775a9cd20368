"""HTTP service wrapping the scoring library."""

from .app import create_app

__all__ = ["create_app"]
