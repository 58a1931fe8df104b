"""
Utilities Module
================

Helper functions and argument validators.
"""

from sarmmv.utils.helpers import sinc, utc_now

__all__ = ["sinc", "utc_now"]
