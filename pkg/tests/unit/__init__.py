"""
Unit tests package.

These tests run on small synthetic inputs and finish in seconds.
They should be marked with the 'unit' pytest marker.
"""
