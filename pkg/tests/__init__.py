"""
This package contains all test files for orthoreg.
"""
