"""
coopadmm - cooperative multi-vehicle trajectory optimization by consensus ADMM
"""
__version__ = "1.0.0"
