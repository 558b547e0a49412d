"""Interior error of the disk problem (eta = 1, phi = 0) under refinement."""
import time

import numpy as np

from minkhyp.ma_solver import DomainSpec, MAProblem, constant_data, constant_eta, exhaustion_solve

prev = None
for h in (1 / 32, 1 / 64):
    prob = MAProblem(DomainSpec("disk"), constant_eta(1.0), constant_data(0.0), grid_h=h)
    t = time.time()
    sol = exhaustion_solve(prob)
    y = sol.y
    m = np.sum(y * y, 1) <= 0.81
    err = float(np.max(np.abs(sol.w[m] + np.sqrt(1 - np.sum(y[m] ** 2, 1)))))
    ratio = "" if prev is None else f" ratio={err / prev:.3f}"
    print(f"h=1/{round(1 / h)} err={err:.3e} R={sol.gradient_range_radius:.1f} "
          f"({time.time() - t:.1f}s){ratio}")
    prev = err
