"""
Core Module
===========

Core functionality including error codes and regime diagnostic limits.
"""
