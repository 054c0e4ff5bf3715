"""
Solvers module for coopadmm.
Contains the DDP trajectory optimizer, the dense SDP solver, the MIQP branch-and-bound
and the least-distance routine they share.
"""
