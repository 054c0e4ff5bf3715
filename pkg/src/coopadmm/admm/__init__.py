"""
ADMM module for coopadmm.
Contains the collision projection back-ends, the orchestrator and the worker pool.
"""
