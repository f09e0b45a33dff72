# matched filter, zero forcing, MMSE and binary BP on the same channel uses
import numpy as np
from nbmimo import SnrSpec, draw_channel, hard_detect, pam_alphabet, realify, transmit

alpha = pam_alphabet(16)
rng = np.random.default_rng(4)
n, k, batch = 16, 8, 200
h = realify(draw_channel(n, k, rng_seed=rng, size=batch).entries)
idx = rng.integers(0, 4, (batch, 2 * k))

for snr in (10.0, 15.0, 20.0):
    sys = transmit(h, alpha.levels[idx], SnrSpec(snr, alpha.symbol_energy), rng_seed=rng)
    row = [f"{d}={np.mean(hard_detect(d, sys) != idx):.4f}" for d in ("mf", "zf", "mmse", "bbp", "nbbp")]
    print(f"{snr:4.1f} dB  " + "  ".join(row))
