# Monte-Carlo BER sweep through the harness, as the CLI would run it
from nbmimo import harness

cfg = harness.parse_config("""
n_antennas = 8
n_users = 8
snr_grid_db = 8:16:4
detectors = nbbp, mmse, mf
trials = 400
batch = 20
target_error_events = 100
seed = 5
""")
records, text, ok = harness.run(cfg)
print(text)
for r in records:
    lo, hi = harness.ber_confidence(r)
    print(f"{r.detector:5s} {r.snr_db:5.1f} dB  BER {r.ber:.2e}  [{lo:.2e}, {hi:.2e}]")
