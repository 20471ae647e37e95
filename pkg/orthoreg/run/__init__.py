"""Command-line entry point: ``python -m orthoreg.run`` or ``orthoreg``."""
