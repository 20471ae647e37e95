"""
Integration tests package.

These tests train full-size models or drive the CLI end to end.
They should be marked with the 'integration' pytest marker.
"""
