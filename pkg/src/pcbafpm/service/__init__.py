"""HTTP service wrapping the analysis pipelines."""

from .app import app  # noqa: F401
