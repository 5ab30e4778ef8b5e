"""Primal-dual HVAC optimization coupled with a PI-controlled thermal plant."""

from ._core import ConfigError, Scenario, read_csv, synthetic_network_json, write_csv

__all__ = ["ConfigError", "Scenario", "read_csv", "synthetic_network_json", "write_csv"]
