"""Intraday slot-level stock forecasting toolkit."""

__version__ = "0.1.0"
