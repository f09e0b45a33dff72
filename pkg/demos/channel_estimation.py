# pilot-based MMSE channel estimation with one data-aided refinement
import numpy as np
from nbmimo import chanest

frame = chanest.make_frame(16, 8, blocks=4, m=16, snr_db=18.0, seed=2)
print("channel uses per frame:", frame.channel_uses)

for kind in ("mmse", "nbbp"):
    res = chanest.iterative_receive(frame, kind, est_iters=2)
    ser = np.mean(res.decisions != frame.data_indices)
    print(f"{kind}: channel MSE per pass {np.round(res.mse_trace, 5)}  rail error rate {ser:.4f}")

res = chanest.iterative_receive(frame, "nbbp", perfect_csi=True)
print("perfect CSI rail error rate:", np.mean(res.decisions != frame.data_indices))
