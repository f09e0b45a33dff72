# uplink model: complex channel, real-valued equivalent, Gray-labelled rails
import numpy as np
from nbmimo import SnrSpec, draw_channel, gf_build, modulate, pam_alphabet, realify, transmit

alpha = pam_alphabet(16)
print("4-PAM levels:", alpha.levels, " Gray labels:", alpha.gray_labels)
print("Es of 16-QAM:", alpha.symbol_energy)

# GF(16) symbols map to one I rail and one Q rail
f = gf_build(4)
sym = np.array([0, 5, 9, 15])
print("symbols", sym, "->", modulate(f, sym, 16))

n, k = 4, 2
ch = draw_channel(n, k, rng_seed=0)
h = realify(ch.entries)
print("real channel shape:", h.shape)

rng = np.random.default_rng(1)
x = alpha.levels[rng.integers(0, 4, 2 * k)]
sys = transmit(h, x, SnrSpec(20.0, alpha.symbol_energy), rng_seed=rng)
print("noise variance per real component:", sys.noise_var)
print("y =", np.round(sys.y, 3))
