"""Order-as-supervision pre-training toolkit for procedural text."""

__version__ = "0.1.0"
