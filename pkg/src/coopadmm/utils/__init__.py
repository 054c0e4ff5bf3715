"""
Utility functions for coopadmm.
"""
