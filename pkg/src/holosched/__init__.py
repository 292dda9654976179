"""Latency-minimizing job scheduling for MEC-assisted holographic streaming."""

__version__ = "0.1.0"
