"""
Test package for mldas.
"""
