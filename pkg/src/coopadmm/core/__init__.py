"""
Core module for coopadmm.
Contains interfaces, exceptions and base classes.
"""
