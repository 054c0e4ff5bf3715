"""
Configuration module for coopadmm.
"""
