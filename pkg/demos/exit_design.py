# EXIT curves of the detector and the code, and a quick profile optimization
import numpy as np
from nbmimo import exit_chart as ec, ldpc

print("J(1) =", ec.j_function(1.0), " J^-1(0.5) =", ec.j_inverse(0.5))

# small system so the Monte-Carlo curve takes seconds
det = ec.detector_exit_curve(8.0, 8, 16, trials=1000, seed=1)
for a, e in zip(det.ia, det.ie):
    print(f"I_A = {a:.1f}  I_E = {e:.3f}")

prof = ldpc.PRESETS["regular-3-6"]
feas = ec.check_feasibility(prof, det)
print("regular (3,6) feasible:", feas.feasible, " margin:", round(feas.margin, 4))

res = ec.optimize_profile(det, 0.5, (2, 3, 4, 6, 8))
print(res.to_text() if isinstance(res, ldpc.DegreeProfile) else res)
