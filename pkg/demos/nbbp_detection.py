# non-binary BP detection on a loaded 16x16 uplink
import numpy as np
from nbmimo import NbbpConfig, OpCounter, SnrSpec, detect, draw_channel, pam_alphabet, realify, transmit

alpha = pam_alphabet(16)
rng = np.random.default_rng(3)
n = k = 16
batch = 50
h = realify(draw_channel(n, k, rng_seed=rng, size=batch).entries)
idx = rng.integers(0, 4, (batch, 2 * k))
sys = transmit(h, alpha.levels[idx], SnrSpec(18.0, alpha.symbol_energy), rng_seed=rng)

for iters in (0, 5, 20, 40):
    post = detect(sys, NbbpConfig(iterations=iters))
    print(f"{iters:2d} iterations: rail symbol error rate {np.mean(post.decisions() != idx):.4f}")

# posteriors are probability vectors over the 4 levels of each rail
post = detect(sys)
print("first rail posterior:", np.round(post.p[0, 0], 4))

c = OpCounter()
detect(sys.__class__(sys.h[0], None, sys.y[0], sys.noise_var), NbbpConfig(iterations=1), counter=c)
print("multiplies for one iteration (plus setup):", c.macs)
