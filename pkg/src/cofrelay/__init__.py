"""Achievable symmetric rates of the two-user multiaccess relay channel."""
__version__ = "0.1.0"
