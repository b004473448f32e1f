"""
ZS Spectrum Extractor package.
"""

__version__ = "0.1.0"
