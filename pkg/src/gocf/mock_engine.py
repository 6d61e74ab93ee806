"""Stdio entry point for the mock engine: ``python -m gocf.mock_engine``."""

from .engine import serve_stdio

if __name__ == "__main__":
    serve_stdio()
