"""
Test Suite
==========

Pytest test suite for the sarmmv package.
"""
