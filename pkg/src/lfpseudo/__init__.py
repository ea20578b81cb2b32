"""Light-field pseudo-sequence coding with a 2-D hierarchical reference structure."""

__version__ = "0.1.0"
