"""
Dense linear-algebra kernels with FLOP accounting
"""
