"""Pluggable model backends: deterministic mock, toy transformer, remote client."""

from .base import (
    Backend,
    BackendDescriptor,
    CountingBackend,
    MediaSpec,
    PromptTemplate,
    TemplateId,
    text_eol,
    video_eol,
    yes_no_rerank,
)
from .mock import MockBackend
from .toy import ToyBackend

__all__ = [
    "Backend",
    "BackendDescriptor",
    "CountingBackend",
    "MediaSpec",
    "MockBackend",
    "PromptTemplate",
    "TemplateId",
    "ToyBackend",
    "text_eol",
    "video_eol",
    "yes_no_rerank",
]
