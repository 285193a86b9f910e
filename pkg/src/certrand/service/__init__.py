"""HTTP front end for sessions, transcript checks and the beacon."""

from .app import create_app

__all__ = ["create_app"]
