"""Combinatorics and privacy-reduction workbench for k-list learning."""
__version__ = "0.1.0"
