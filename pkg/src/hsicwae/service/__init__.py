"""HTTP service wrapper around the pipeline commands."""

from .app import app, create_app

__all__ = ["app", "create_app"]
