"""
Utilities module for multijet.
Contains helpers for caching, seeding, parallel chunks and output files.
"""
