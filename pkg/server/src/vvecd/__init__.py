"""Reference HTTP server for the embed/score wire protocol."""

__version__ = "0.1.0"

from .adapter import EmbedOnlyAdapter, ToyAdapter
from .server import ProtocolServer, serve, serve_background

__all__ = [
    "EmbedOnlyAdapter",
    "ProtocolServer",
    "ToyAdapter",
    "serve",
    "serve_background",
]
