"""Benchmark harness for pool-based active learning in object detection."""

__version__ = "0.1.0"

PROTOCOL_VERSION = "1.0.0"
