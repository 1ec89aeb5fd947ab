"""Weighted device graphs from IP-colocation logs, plus community structure,
metrics over sliding windows, ground-truth validation, and contact-process
simulation."""

__version__ = "0.1.0"
