"""Outfit compatibility engine built on co-occurrence style embeddings."""

__version__ = "0.1.0"
