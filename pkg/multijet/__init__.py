"""
multijet - multijets, Kergin interpolation and Kac-Rice moments of Gaussian fields
"""

__version__ = "0.1.0"
