"""Synthetic futures exchange producing trade-record streams."""
from .book import BUY, SELL, BookState, Order, match
from .market import ConfigError, SimConfig, interleave, run_sim

__all__ = ["BUY", "SELL", "BookState", "Order", "match", "ConfigError", "SimConfig",
           "interleave", "run_sim"]
