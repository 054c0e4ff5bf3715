"""
Model module for coopadmm.
Contains vehicle dynamics, the stacked variable layout, problem data and the constraint graph.
"""
