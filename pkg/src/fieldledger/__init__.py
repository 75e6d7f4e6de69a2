"""fieldledger: an offline-first behavioral event platform at desk scale."""

__version__ = "0.1.0"
