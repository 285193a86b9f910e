"""Adapters that consume certified randomness."""
