# a GF(16) LDPC code from a preset profile: construct, encode, decode
import numpy as np
from nbmimo import ldpc

prof = ldpc.PRESETS["optimized-alpha0.5"]
print(prof.to_text())

pcm = ldpc.realize_full_rank(prof, 200, seed=1)
print("n =", pcm.n, " checks =", pcm.n_checks, " k =", pcm.k, " edges =", pcm.num_edges)
print("4-cycles:", ldpc.count_four_cycles(pcm))

enc = ldpc.encoder_for(pcm, require_full_rank=True)
rng = np.random.default_rng(0)
msg = rng.integers(0, 16, (8, enc.k))
words = enc.encode(msg)
print("syndromes all zero:", not pcm.syndrome(words).any())

# noisy symbol priors: the right symbol gets most of the mass, 15% of symbols are hit
pri = np.full(words.shape + (16,), 0.02)
np.put_along_axis(pri, words[..., None], 0.7, axis=-1)
hit = rng.random(words.shape) < 0.15
pri[hit] = rng.dirichlet(np.ones(16), hit.sum())
res = ldpc.decode(pcm, pri)
print("converged:", res.converged, " iterations:", res.iterations_used)
print("symbol errors after decoding:", int((res.decisions != words).sum()))
