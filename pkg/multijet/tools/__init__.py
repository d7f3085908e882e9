"""
Tools module for multijet.
Contains the command implementations behind the CLI.
"""
