# GF(16) arithmetic from log / antilog tables
import numpy as np
from nbmimo import gf_build

f = gf_build(4)
print("q =", f.q, " reduction polynomial =", bin(f.reduction_polynomial))

# the antilog table lists the powers of the primitive element
print("antilog:", f.antilog_table[:15])

# multiplication and inverses
a, b = 7, 11
print(f"{a} * {b} =", f.mul(a, b))
print(f"inverse of {a} =", f.inv(a), " check:", f.mul(a, f.inv(a)))

# addition is XOR, so every element is its own negative
print(f"{a} + {a} =", f.add(a, a))

# the full multiplication table is a Latin square on the nonzero elements
tab = f.mul_table
print("rows of the table are permutations:", all(len(set(r)) == 16 for r in tab[1:]))
