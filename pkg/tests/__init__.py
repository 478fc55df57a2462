"""
Tests package for the DPI stability toolkit.
Contains unit tests, shared fixtures and the non-interactive runner.
"""
