"""Numerical workbench for six-vertex transfer matrices and Baxter Q-operators."""
__version__ = "0.1.0"
