"""isacsim - Cooperative multi-satellite ISAC network simulator."""

__version__ = "0.1.0"
