"""Local R-stable/R-unstable sets, R-dynamical balls, R-stable-point
detection, the expansiveness characterization, and uniform-expansiveness
scans.

Membership grids discretize the rescaled cross-section at a base point:
a cell belongs to the local stable set when, at every holonomy step
1 <= k <= n_max, its image exists and stays within the rescaled tolerance
``tolerance_factor * ||X(P_k(x))||`` of the base orbit (unstable sets use
the backward maps). Cell membership is decided at cell centers only, the
whole grid marches in one shared batch per step with early exit on first
violation, and the base point itself travels as the batch's center cell, so
its distance to the reference orbit is exactly zero at every step.

"For all n" is truncated at n_max. When the base orbit leaves the regular
region before n_max (the field norm underflows or the step budget runs
out), the grid reports the horizon actually certified; cells alive at
truncation stay members at that horizon and are tallied separately from
cells that failed the tolerance, so a trivial set is distinguishable from
an undecidable region.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BetaTooLarge,
    BudgetExhausted,
    GammaTooLarge,
    LeftTube,
    NoCrossing,
    SingularBase,
    Timeout,
)
from .flows import FlowSpec, field_norm
from .geometry import Point
from .integrate import DEFAULT_TOL, first_crossing, orbit_batch
from .sections import CrossSection, make_section, section_point

# per-cell error states
CELL_OK = 0
CELL_OUTSIDE_SECTION = 1
CELL_OUT_OF_MANIFOLD = 2
CELL_LEFT_TUBE = 3
CELL_NO_CROSSING = 4
CELL_TIMEOUT = 5

ERROR_NAMES = {
    CELL_OK: "ok",
    CELL_OUTSIDE_SECTION: "outside_section",
    CELL_OUT_OF_MANIFOLD: "out_of_manifold",
    CELL_LEFT_TUBE: "left_tube",
    CELL_NO_CROSSING: "no_crossing",
    CELL_TIMEOUT: "timeout",
}


@dataclass
class RSetGrid:
    """Membership grid for a local R-stable or R-unstable set."""

    section: CrossSection
    resolution: int
    direction: str
    params: dict
    membership: np.ndarray        # (res, res) bool
    component_labels: np.ndarray  # (res, res) int, -1 outside members
    fail_step: np.ndarray         # first violated step; horizon+1 if never
    error_state: np.ndarray       # (res, res) int8
    horizon_certified: int
    truncation_reason: Optional[str]
    cellwidth: float
    base_norms: np.ndarray        # ||X|| along the base chain, length horizon+1

    @property
    def center(self):
        c = self.resolution // 2
        return (c, c)

    def cell_coords(self):
        c = self.resolution // 2
        offs = (np.arange(self.resolution) - c) * self.cellwidth
        return np.stack(np.meshgrid(offs, offs, indexing="ij"), axis=-1)

    def membership_at(self, n: int):
        """Members certified through horizon n <= horizon_certified."""
        if n > self.horizon_certified:
            raise ValueError(f"horizon {n} beyond certified {self.horizon_certified}")
        return (self.fail_step > n) & (self.error_state != CELL_OUTSIDE_SECTION) \
            & (self.error_state != CELL_OUT_OF_MANIFOLD)

    def counts(self):
        states, freq = np.unique(self.error_state, return_counts=True)
        tally = {ERROR_NAMES[int(s)]: int(c) for s, c in zip(states, freq)}
        return {
            "members": int(np.sum(self.membership)),
            "cells": int(self.membership.size),
            "undecided_at_truncation": int(np.sum(
                self.membership & (self.fail_step > self.params["n_max"]))
            ) if self.truncation_reason else 0,
            "error_states": tally,
        }

    def to_csv(self, path):
        coords = self.cell_coords()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "u", "v", "member", "component", "error_state"])
            for i in range(self.resolution):
                for j in range(self.resolution):
                    w.writerow([
                        i, j,
                        f"{coords[i, j, 0]:.17g}", f"{coords[i, j, 1]:.17g}",
                        int(self.membership[i, j]),
                        int(self.component_labels[i, j]),
                        ERROR_NAMES[int(self.error_state[i, j])],
                    ])


@dataclass
class DynamicalBall:
    """One-sided rescaled dynamical ball on a cross-section grid."""

    section: CrossSection
    n: int
    epsilon: float
    grid: RSetGrid


@dataclass
class UniformExpansivenessReport:
    K_description: str
    A: float
    eta: float
    beta: float
    t: float
    N_eta: Optional[int]
    witnesses: list                  # (point_index, direction_index, N)
    skipped_pairs: int
    exhausted_pair: Optional[tuple]  # (x, y) that never separated
    vacuous: bool = False


@dataclass
class ExpansivityVerdict:
    flow_name: str
    points: list
    per_point: list   # dicts: point, trivial, witness (or None), member counts
    overall: str      # "consistent-with-R-expansive" | "counterexample-found"


@dataclass
class _Propagation:
    fail_step: np.ndarray
    error_state: np.ndarray
    horizon: int
    truncation_reason: Optional[str]
    base_norms: np.ndarray
    tracks: Optional[list]  # per step: (alive flat indices, positions)


def _propagate_points(f: FlowSpec, x: Point, section: CrossSection, t: float,
                      coords_u, sign: int, n_max: int, tol_factor: float,
                      beta: float, tol: float = DEFAULT_TOL,
                      radius_slack: float = 4.0, record_tracks: bool = False):
    m = f.manifold
    coords_u = np.asarray(coords_u, dtype=float)
    n_pts = coords_u.shape[0]
    fail_step = np.full(n_pts, n_max + 1, dtype=int)
    error_state = np.zeros(n_pts, dtype=np.int8)

    raw = section.frame.base.coords + coords_u @ section.frame.axes
    valid = np.ones(n_pts, dtype=bool)
    if m.disk_axes is not None:
        i, j = m.disk_axes
        bad = raw[:, i] ** 2 + raw[:, j] ** 2 > (m.disk_radius + 1e-9) ** 2
        valid &= ~bad
        error_state[bad] = CELL_OUT_OF_MANIFOLD
        fail_step[bad] = 0

    # the base travels with the batch; distances are relative to it exactly
    center_u = coords_u[0]
    if np.linalg.norm(center_u) > 1e-15:
        raise ValueError("row 0 of coords_u must be the base point")

    alive_idx = np.flatnonzero(valid)
    Y = m.wrap_array(raw[alive_idx])
    base_norms = [section.base_field_norm]
    horizon = n_max
    trunc = None
    step_t = sign * t
    tracks = [] if record_tracks else None

    for k in range(1, n_max + 1):
        try:
            Y_new = orbit_batch(f, Y, np.array([step_t]), tol=tol)[:, 0, :]
        except Timeout:
            horizon = k - 1
            trunc = "timeout"
            break
        center_pos = int(np.searchsorted(alive_idx, 0))
        bx = Y_new[center_pos]
        fvec = f.field(bx)
        n_x = float(np.linalg.norm(fvec))
        if n_x <= 1e-12:
            horizon = k - 1
            trunc = "singular_base"
            break
        nhat = fvec / n_x
        disp = m.displacement(bx, Y_new)
        resid = disp @ nhat
        d = np.linalg.norm(disp, axis=-1)

        resid_tol = max(1e-7 * (1.0 + abs(t)), 100.0 * tol)
        stragglers = np.flatnonzero(np.abs(resid) > resid_tol)
        if stragglers.size:
            frame = m.normal_frame(Point(bx), nhat)
            tgt = CrossSection(frame=frame, beta=beta, radius=beta * n_x,
                               flow_name=f.name, base_field_norm=n_x)
            for s_i in stragglers:
                if s_i == center_pos:
                    continue
                try:
                    ev = first_crossing(f, Point(Y[s_i].copy()), tgt,
                                        window=(step_t - 0.2 * abs(t) - 1e-6,
                                                step_t + 0.2 * abs(t) + 1e-6),
                                        tol=tol, radius_slack=radius_slack)
                    Y_new[s_i] = ev.hit_point.coords
                    dd = m.displacement(bx, Y_new[s_i])
                    disp[s_i] = dd
                    d[s_i] = np.linalg.norm(dd)
                except (NoCrossing, Timeout):
                    error_state[alive_idx[s_i]] = CELL_NO_CROSSING
                    d[s_i] = np.inf
                except LeftTube:
                    error_state[alive_idx[s_i]] = CELL_LEFT_TUBE
                    d[s_i] = np.inf

        tol_k = tol_factor * n_x
        guard_k = radius_slack * beta * n_x
        fail_tube = d > guard_k
        fail_tol = d > tol_k * (1.0 + 1e-9) + 1e-15
        fails = fail_tube | fail_tol
        fails[center_pos] = False
        if np.any(fails):
            rows = np.flatnonzero(fails)
            cells = alive_idx[rows]
            fail_step[cells] = k
            tube_rows = rows[fail_tube[rows] & (error_state[cells] == CELL_OK)]
            error_state[alive_idx[tube_rows]] = CELL_LEFT_TUBE
        keep = ~fails
        alive_idx = alive_idx[keep]
        Y = Y_new[keep]
        base_norms.append(n_x)
        if record_tracks:
            tracks.append((alive_idx.copy(), Y.copy()))

    return _Propagation(fail_step=fail_step, error_state=error_state,
                        horizon=horizon, truncation_reason=trunc,
                        base_norms=np.array(base_norms), tracks=tracks)


def _grid_coords(resolution: int, radius: float):
    if resolution % 2 == 0 or resolution < 3:
        raise ValueError("resolution must be odd and >= 3")
    c = resolution // 2
    w = 2.0 * radius / resolution
    offs = (np.arange(resolution) - c) * w
    U = np.stack(np.meshgrid(offs, offs, indexing="ij"), axis=-1)
    return U, w


def compute_rset(f: FlowSpec, x: Point, beta: float, t: float, n_max: int,
                 resolution: int, direction: str = "stable",
                 tolerance_factor: Optional[float] = None,
                 tol: float = DEFAULT_TOL, radius_slack: float = 4.0,
                 with_components: bool = True) -> RSetGrid:
    """Membership grid of the local R-stable or R-unstable set at x.

    The grid covers the shrunken section of radius (beta / L^t)||X(x)||.
    A cell is a member when every holonomy image through the certified
    horizon exists and satisfies d <= tolerance_factor * ||X|| (default
    tolerance_factor = beta / L^t, the shrunken factor; pass beta to test
    the looser tube reading, or numpy.inf to reduce membership to orbit
    existence).
    """
    if direction not in ("stable", "unstable"):
        raise ValueError("direction must be 'stable' or 'unstable'")
    if t <= 0:
        raise ValueError("t must be positive (direction picks the sign)")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if beta > f.rescale.beta0 + 1e-12:
        raise BetaTooLarge(f"beta={beta} exceeds beta0={f.rescale.beta0}")
    L = f.rescale.L
    domain_factor = beta / L ** t
    if tolerance_factor is None:
        tolerance_factor = domain_factor
    section = make_section(f, x, domain_factor)
    U, w = _grid_coords(resolution, section.radius)
    res = resolution
    flat_u = U.reshape(-1, 2)
    unorm = np.linalg.norm(flat_u, axis=-1)

    # order points so that row 0 is the center cell
    center_flat = (res // 2) * res + (res // 2)
    order = np.concatenate(([center_flat],
                            np.delete(np.arange(res * res), center_flat)))
    inv_order = np.argsort(order)

    inside = unorm <= section.radius + 1e-12
    coords_sorted = flat_u[order]
    inside_sorted = inside[order]

    sign = 1 if direction == "stable" else -1
    # propagate only in-disk cells; others are outside the section domain
    prop_rows = np.flatnonzero(inside_sorted)
    run = _propagate_points(f, x, section, t, coords_sorted[prop_rows], sign,
                            n_max, tolerance_factor, beta, tol=tol,
                            radius_slack=radius_slack)

    fail_sorted = np.zeros(res * res, dtype=int)
    err_sorted = np.full(res * res, CELL_OUTSIDE_SECTION, dtype=np.int8)
    fail_sorted[prop_rows] = run.fail_step
    err_sorted[prop_rows] = run.error_state

    fail_step = fail_sorted[inv_order].reshape(res, res)
    error_state = err_sorted[inv_order].reshape(res, res)
    membership = (fail_step > run.horizon) & (error_state != CELL_OUTSIDE_SECTION) \
        & (error_state != CELL_OUT_OF_MANIFOLD)

    grid = RSetGrid(
        section=section, resolution=res, direction=direction,
        params={"beta": beta, "t": t, "n_max": n_max,
                "tolerance_factor": tolerance_factor},
        membership=membership,
        component_labels=np.full((res, res), -1, dtype=int),
        fail_step=fail_step, error_state=error_state,
        horizon_certified=run.horizon, truncation_reason=run.truncation_reason,
        cellwidth=w, base_norms=run.base_norms,
    )
    if with_components:
        connected_component(grid)
    return grid


def connected_component(g: RSetGrid) -> RSetGrid:
    """Label face-adjacent components of the member set, in place.

    Row-major discovery order makes labels deterministic; the component of
    the center cell is the connected local set CW.
    """
    res = g.resolution
    labels = np.full((res, res), -1, dtype=int)
    next_label = 0
    members = g.membership
    for i in range(res):
        for j in range(res):
            if not members[i, j] or labels[i, j] >= 0:
                continue
            stack = [(i, j)]
            labels[i, j] = next_label
            while stack:
                a, b = stack.pop()
                for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    na, nb = a + da, b + db
                    if 0 <= na < res and 0 <= nb < res and members[na, nb] \
                            and labels[na, nb] < 0:
                        labels[na, nb] = next_label
                        stack.append((na, nb))
            next_label += 1
    g.component_labels = labels
    return g


def cw_label(g: RSetGrid) -> int:
    return int(g.component_labels[g.center])


def cw_cells(g: RSetGrid):
    """Boolean mask of the center cell's component."""
    return g.component_labels == cw_label(g)


def sphere_reach(g: RSetGrid, gamma: float) -> bool:
    """Does CW meet the sphere of radius gamma * ||X(base)|| (one cellwidth band)?"""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma == 0.0:
        return True
    target = gamma * g.section.base_field_norm
    if target > g.section.radius + 1e-12:
        raise GammaTooLarge(f"gamma radius {target:.3g} exceeds section radius "
                            f"{g.section.radius:.3g}")
    coords = g.cell_coords()
    unorm = np.linalg.norm(coords, axis=-1)
    band = np.abs(unorm - target) <= g.cellwidth
    return bool(np.any(band & cw_cells(g)))


def dynamical_ball(f: FlowSpec, x: Point, n: int, epsilon: float, t: float,
                   resolution: int, tol: float = DEFAULT_TOL,
                   radius_slack: float = 4.0) -> DynamicalBall:
    """The n-step forward rescaled dynamical ball on the section at x.

    Domain and tolerance both use the un-shrunken factor epsilon; the i = 0
    condition is the section-disk membership itself.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if epsilon > f.rescale.beta0 + 1e-12:
        raise BetaTooLarge(f"epsilon={epsilon} exceeds beta0={f.rescale.beta0}")
    section = make_section(f, x, epsilon)
    U, w = _grid_coords(resolution, section.radius)
    res = resolution
    flat_u = U.reshape(-1, 2)
    unorm = np.linalg.norm(flat_u, axis=-1)
    center_flat = (res // 2) * res + (res // 2)
    order = np.concatenate(([center_flat],
                            np.delete(np.arange(res * res), center_flat)))
    inv_order = np.argsort(order)
    inside = unorm <= section.radius + 1e-12
    coords_sorted = flat_u[order]
    prop_rows = np.flatnonzero(inside[order])

    if n == 0:
        fail = np.full(res * res, 1, dtype=int)
        err = np.full(res * res, CELL_OUTSIDE_SECTION, dtype=np.int8)
        fail[prop_rows] = 1
        err[prop_rows] = CELL_OK
        fail_step = fail[inv_order].reshape(res, res)
        error_state = err[inv_order].reshape(res, res)
        horizon, trunc, norms = 0, None, np.array([section.base_field_norm])
    else:
        run = _propagate_points(f, x, section, t, coords_sorted[prop_rows], 1,
                                n, epsilon, epsilon, tol=tol,
                                radius_slack=radius_slack)
        fail = np.zeros(res * res, dtype=int)
        err = np.full(res * res, CELL_OUTSIDE_SECTION, dtype=np.int8)
        fail[prop_rows] = run.fail_step
        err[prop_rows] = run.error_state
        fail_step = fail[inv_order].reshape(res, res)
        error_state = err[inv_order].reshape(res, res)
        horizon, trunc, norms = run.horizon, run.truncation_reason, run.base_norms

    membership = (fail_step > horizon) & (error_state != CELL_OUTSIDE_SECTION) \
        & (error_state != CELL_OUT_OF_MANIFOLD)
    grid = RSetGrid(
        section=section, resolution=res, direction="ball",
        params={"beta": epsilon, "t": t, "n_max": n, "tolerance_factor": epsilon},
        membership=membership,
        component_labels=np.full((res, res), -1, dtype=int),
        fail_step=fail_step, error_state=error_state,
        horizon_certified=horizon, truncation_reason=trunc,
        cellwidth=w, base_norms=norms,
    )
    connected_component(grid)
    return DynamicalBall(section=section, n=n, epsilon=epsilon, grid=grid)


def membership_predicate(f: FlowSpec, x: Point, beta: float, t: float,
                         n_max: int, direction: str, coords_u,
                         tolerance_factor: Optional[float] = None,
                         tol: float = DEFAULT_TOL, radius_slack: float = 4.0,
                         record_tracks: bool = False):
    """Fail steps for explicit section points (no grid): the same test
    compute_rset applies per cell. Returns (fail_step, propagation)."""
    L = f.rescale.L
    domain_factor = beta / L ** t
    if tolerance_factor is None:
        tolerance_factor = domain_factor
    section = make_section(f, x, domain_factor)
    coords_u = np.asarray(coords_u, dtype=float)
    rows = np.vstack([np.zeros(2), coords_u])
    sign = 1 if direction == "stable" else -1
    run = _propagate_points(f, x, section, t, rows, sign, n_max,
                            tolerance_factor, beta, tol=tol,
                            radius_slack=radius_slack,
                            record_tracks=record_tracks)
    return run.fail_step[1:], run


def detect_rstable_point(f: FlowSpec, x: Point, t: float, eps_list, eta_grid,
                         n_max: int = 12, resolution: int = 61,
                         tol: float = DEFAULT_TOL):
    """One-sided R-stable-point test on finite (eps, eta) grids.

    For each eps the test asks for some eta whose full subgrid of section
    points lies in the stable set at horizon n_max. Etas whose subgrid
    radius resolves to fewer than two cellwidths are skipped as untestable
    at this resolution; "False" therefore certifies a failing eps, while
    "True" is evidence at the tested scales only.
    """
    cert = []
    for eps in eps_list:
        grid = compute_rset(f, x, eps, t, n_max, resolution, "stable", tol=tol)
        coords = grid.cell_coords()
        unorm = np.linalg.norm(coords, axis=-1)
        in_disk = grid.error_state != CELL_OUTSIDE_SECTION
        non_member = in_disk & ~grid.membership \
            & (grid.error_state != CELL_OUT_OF_MANIFOLD)
        r_inner = float(np.min(unorm[non_member])) if np.any(non_member) else np.inf
        L = f.rescale.L
        found = None
        for eta in sorted(eta_grid, reverse=True):
            if eta >= eps:
                continue
            eta_radius = (eta / L ** t) * grid.section.base_field_norm
            if eta_radius < 2.0 * grid.cellwidth:
                continue  # below grid resolution: not testable
            if eta_radius < r_inner:
                found = eta
                break
        cert.append({"eps": eps, "eta": found, "r_inner": r_inner,
                     "cellwidth": grid.cellwidth,
                     "horizon": grid.horizon_certified})
        if found is None:
            return False, cert
    return True, cert


def check_expansivity(f: FlowSpec, points, beta: float, t: float, n_max: int,
                      resolution: int, tol: float = DEFAULT_TOL,
                      keep_grids: bool = False) -> ExpansivityVerdict:
    """Intersect stable and unstable membership grids at each sampled point.

    A counterexample is a non-center cell that belongs to both sets, i.e.
    its two-sided holonomy orbit survived both certified horizons inside
    the rescaled tolerance.
    """
    per_point = []
    overall = "consistent-with-R-expansive"
    for idx, x in enumerate(points):
        gs = compute_rset(f, x, beta, t, n_max, resolution, "stable", tol=tol,
                          with_components=False)
        gu = compute_rset(f, x, beta, t, n_max, resolution, "unstable", tol=tol,
                          with_components=False)
        inter = gs.membership & gu.membership
        c = gs.center
        non_center = inter.copy()
        non_center[c] = False
        witness = None
        if np.any(non_center):
            i, j = np.argwhere(non_center)[0]
            coords = gs.cell_coords()[i, j]
            witness = {"cell": (int(i), int(j)),
                       "u": float(coords[0]), "v": float(coords[1]),
                       "stable_horizon": gs.horizon_certified,
                       "unstable_horizon": gu.horizon_certified}
            overall = "counterexample-found"
        entry = {
            "point": [float(v) for v in x.coords],
            "trivial_intersection": witness is None,
            "witness": witness,
            "stable_members": int(np.sum(gs.membership)),
            "unstable_members": int(np.sum(gu.membership)),
            "intersection_cells": int(np.sum(inter)),
            "stable_horizon": gs.horizon_certified,
            "unstable_horizon": gu.horizon_certified,
        }
        if keep_grids:
            entry["grids"] = (gs, gu)
        per_point.append(entry)
    return ExpansivityVerdict(flow_name=f.name, points=list(points),
                              per_point=per_point, overall=overall)


def uniform_expansiveness_scan(f: FlowSpec, sample_points, eta: float,
                               beta: float, t: float, horizon_budget: int,
                               n_directions: int = 16,
                               tol: float = DEFAULT_TOL,
                               on_budget: str = "raise") -> UniformExpansivenessReport:
    """Smallest two-sided horizon separating eta-distant section points.

    For each sampled x, points y at distance just above eta on the section
    are walked through the holonomy maps in both directions until
    d(P_i(x), P_i(y)) >= beta * ||X(P_i(x))||; N_eta is the largest first
    separation index over all pairs. A pair that never separates within
    horizon_budget raises BudgetExhausted (or is recorded as the failure
    witness with on_budget="report").
    """
    pts = list(sample_points)
    norms = np.array([field_norm(f, p) for p in pts])
    if np.any(norms <= 1e-12):
        raise SingularBase("sampled set touches the singular region")
    A = float(np.min(norms))
    if eta >= beta * float(np.max(norms)):
        # no section can hold a point at distance > eta: empty premise
        return UniformExpansivenessReport(
            K_description=f.name, A=A, eta=eta, beta=beta, t=t, N_eta=0,
            witnesses=[], skipped_pairs=len(pts) * n_directions,
            exhausted_pair=None, vacuous=True)
    if eta > beta * A + 1e-12:
        raise ValueError(f"eta={eta} must satisfy eta <= beta * A = {beta * A:.3g}")

    witnesses = []
    skipped = 0
    N_eta = 0
    r_factor = 1.02
    for p_idx, x in enumerate(pts):
        sec = make_section(f, x, beta)
        r_y = r_factor * eta
        if r_y >= sec.radius:
            skipped += n_directions
            continue
        angles = 2.0 * np.pi * np.arange(n_directions) / n_directions
        for d_idx, ang in enumerate(angles):
            u0 = r_y * np.array([math.cos(ang), math.sin(ang)])
            n_sep = _first_separation(f, x, sec, u0, beta, t, horizon_budget, tol)
            if n_sep is None:
                if on_budget == "report":
                    y = section_point(f, sec, u0)
                    return UniformExpansivenessReport(
                        K_description=f.name, A=A, eta=eta, beta=beta, t=t,
                        N_eta=None, witnesses=witnesses, skipped_pairs=skipped,
                        exhausted_pair=([float(v) for v in x.coords],
                                        [float(v) for v in y.coords]))
                y = section_point(f, sec, u0)
                raise BudgetExhausted(
                    f"{f.name}: pair never separated within {horizon_budget} steps",
                    witness=(x, y))
            witnesses.append((p_idx, d_idx, n_sep))
            N_eta = max(N_eta, n_sep)
    return UniformExpansivenessReport(
        K_description=f.name, A=A, eta=eta, beta=beta, t=t, N_eta=N_eta,
        witnesses=witnesses, skipped_pairs=skipped, exhausted_pair=None)


def _first_separation(f, x, sec, u0, beta, t, budget, tol):
    """First |i| with d(P_i(x), P_i(y)) >= beta * ||X(P_i(x))||, else None."""
    m = f.manifold
    y0 = sec.frame.base.coords + u0 @ sec.frame.axes
    d0 = float(m.distance_array(x.coords, m.wrap_array(y0)))
    if d0 >= beta * sec.base_field_norm * (1 - 1e-9):
        return 0
    states = {}
    for sign in (1, -1):
        states[sign] = {"pair": m.wrap_array(np.vstack([x.coords, y0])),
                        "dead": False}
    for i in range(1, budget + 1):
        for sign in (1, -1):
            st = states[sign]
            if st["dead"]:
                continue
            try:
                nxt = orbit_batch(f, st["pair"], np.array([sign * t]), tol=tol)[:, 0, :]
            except Timeout:
                st["dead"] = True
                continue
            bx, by = nxt[0], nxt[1]
            n_x = float(np.linalg.norm(f.field(bx)))
            if n_x <= 1e-12:
                st["dead"] = True
                continue
            d = float(m.distance_array(bx, by))
            if d >= beta * n_x * (1 - 1e-9):
                return i
            st["pair"] = nxt
        if states[1]["dead"] and states[-1]["dead"]:
            return None
    return None
