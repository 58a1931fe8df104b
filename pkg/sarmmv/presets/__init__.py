"""Calibrated experiment presets, loaded by name through ``importlib.resources``."""
