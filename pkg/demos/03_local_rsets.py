"""Local R-stable/R-unstable membership grids, drawn as ASCII maps.

The suspension's stable set is a thin strip along the contracting
eigendirection; the solid torus collapses to the center cell in both
directions; the rigid rotation keeps the whole disk.

Run:  python demos/03_local_rsets.py
"""

import numpy as np

from rflowlab import get_flow
from rflowlab.rsets import compute_rset, cw_cells, sphere_reach


def ascii_grid(grid, step=2):
    rows = []
    cw = cw_cells(grid)
    for i in range(0, grid.resolution, step):
        row = ""
        for j in range(0, grid.resolution, step):
            if (i, j) == grid.center:
                row += "O"
            elif cw[i, j]:
                row += "#"
            elif grid.membership[i, j]:
                row += "+"
            elif grid.error_state[i, j] == 1:
                row += " "
            else:
                row += "."
        rows.append(row)
    return "\n".join(rows)


cat = get_flow("cat_suspension")
x = cat.manifold.wrap((0.31, 0.62, 0.47))
# strip half-width scales like R / lambda^n_max: n_max=3 keeps it above one
# cell at this drawing resolution (the shipped config uses 101 cells, n_max=4)
for direction in ("stable", "unstable"):
    g = compute_rset(cat, x, 0.1, 1.0, 3, 61, direction)
    print(f"cat suspension, {direction} set (n_max=3): "
          f"{g.counts()['members']} member cells")
    print(ascii_grid(g))
    gamma = 0.5 * 0.1 / cat.rescale.L
    print("reaches the half-radius sphere:", sphere_reach(g, gamma), "\n")

torus = get_flow("solid_torus")
p = torus.manifold.wrap((-0.5, 0.2, 0.0))
for direction in ("stable", "unstable"):
    g = compute_rset(torus, p, 0.1, 1.0, 40, 61, direction)
    c = g.counts()
    print(f"solid torus, {direction}: members={c['members']} "
          f"(horizon {g.horizon_certified}, truncation={g.truncation_reason})")

rigid = get_flow("rigid_rotation")
g = compute_rset(rigid, rigid.manifold.wrap((0.3, 0.1, 0.0)), 0.1, 1.0, 8, 61,
                 "stable")
print(f"\nrigid rotation: members={g.counts()['members']} "
      f"of {int(np.sum(g.error_state != 1))} disk cells (identity holonomy)")
