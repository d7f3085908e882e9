"""
Test package for multijet.
"""
