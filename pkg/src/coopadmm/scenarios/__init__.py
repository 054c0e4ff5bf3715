"""
Scenarios module for coopadmm.
Contains reference generation, the junction and intersection presets, the experiment
runner and report emission.
"""
