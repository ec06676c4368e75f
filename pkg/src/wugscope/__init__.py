"""Estimate morphological irregularity by wug-testing a string transducer."""

__version__ = "0.1.0"
