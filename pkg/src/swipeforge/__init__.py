"""swipeforge: gesture-typing trace synthesis, decoding, and correction."""

__version__ = "0.1.0"
