"""HTTP service wrapping the engine: runs, evaluation, templates, caches."""

from .app import create_app

__all__ = ["create_app"]
