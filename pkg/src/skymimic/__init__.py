"""skymimic: one-shot imitation filming in a synthetic drone world."""

__version__ = "0.1.0"
