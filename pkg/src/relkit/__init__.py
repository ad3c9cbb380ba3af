"""Toolkit for building and scoring multilingual relation extraction datasets."""

__version__ = "0.1.0"
