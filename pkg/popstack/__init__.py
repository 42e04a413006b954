"""
Sorting with a deterministic pop stack, and characterizations of the
permutations it sorts in k passes by 2-avoidance of pattern pairs.
"""
