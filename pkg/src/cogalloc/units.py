"""Centralized dB / dBm conversions.

Every dB-quoted quantity (SNR, transmit powers, noise density) passes
through these two functions so the linear/log convention lives in one
place.
"""

from __future__ import annotations


def db_to_linear(value_db: float) -> float:
    """Convert a dB ratio to linear scale: 10^(x/10)."""
    return 10.0 ** (value_db / 10.0)


def dbm_to_watts(value_dbm: float) -> float:
    """Convert a dBm power to watts: 10^((x - 30)/10)."""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)
