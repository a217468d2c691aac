"""HTTP service: session lifecycle, event and snapshot ingestion, feedback
generation, survey collection, and export."""

from .app import ServiceConfig, create_app

__all__ = ["ServiceConfig", "create_app"]
