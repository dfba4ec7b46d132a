"""Expansiveness verdicts and the uniform-separation horizon.

The characterization is per point: the stable and unstable grids may only
share the center cell. The uniform scan measures how many holonomy steps
any eta-distant pair needs before its rescaled distance exceeds beta.

Run:  python demos/04_expansiveness.py
"""

import numpy as np

from rflowlab import get_flow, sample_points
from rflowlab.errors import BudgetExhausted
from rflowlab.rsets import (
    check_expansivity,
    detect_rstable_point,
    uniform_expansiveness_scan,
)

for name, kwargs in (("cat_suspension", {}),
                     ("solid_torus", {"x_range": (0.1, 1.0)}),
                     ("rigid_rotation", {})):
    flow = get_flow(name)
    pts = sample_points(flow, 6, seed=2024, **kwargs)
    n_max = 40 if name == "solid_torus" else 12
    verdict = check_expansivity(flow, pts, 0.1, 1.0, n_max, 41)
    print(f"{name:16s} -> {verdict.overall}")

print("\nR-stable-point probes (True = every tested scale nests):")
for name, coords in (("rigid_rotation", (0.3, 0.1, 0.0)),
                     ("cat_suspension", (0.31, 0.62, 0.47)),
                     ("solid_torus", (-0.5, 0.2, 0.0))):
    flow = get_flow(name)
    ok, cert = detect_rstable_point(flow, flow.manifold.wrap(coords), 1.0,
                                    [0.1, 0.05], [0.05, 0.025, 0.0125])
    print(f"  {name:16s}: {ok}")

cat = get_flow("cat_suspension")
pts = sample_points(cat, 4, seed=3)
rep = uniform_expansiveness_scan(cat, pts, eta=0.01, beta=0.1, t=1.0,
                                 horizon_budget=12, n_directions=16)
lam = (3 + np.sqrt(5)) / 2
print(f"\ncat suspension: N_eta = {rep.N_eta} "
      f"(prediction ceil(log(beta/eta)/log(lambda)) = "
      f"{int(np.ceil(np.log(10) / np.log(lam)))})")

rigid = get_flow("rigid_rotation")
try:
    uniform_expansiveness_scan(rigid, sample_points(rigid, 2, seed=4),
                               eta=0.01, beta=0.1, t=1.0, horizon_budget=10,
                               n_directions=4)
except BudgetExhausted as exc:
    print("rigid rotation: budget exhausted as expected ->", exc)
