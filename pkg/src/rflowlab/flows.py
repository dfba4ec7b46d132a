"""Catalog of vector fields with analytic metadata.

Three built-in flows on flat model manifolds:

``solid_torus``
    The cylinder [-2, 2] x D with its end disks identified (x-period 4).
    Field (rho(x), 0, 0) with rho = 1 on [-2, -1] u [1, 2] and rho = |x| on
    [-1, 1]; the disk {0} x D is the singular set. Transverse motion is
    exactly isometric while the field norm decays along orbits, so every
    local rescaled stable/unstable set collapses to its base point.

``cat_suspension``
    Unit-speed suspension of the toral automorphism [[2, 1], [1, 1]]:
    chart T^2 x [0, 1) where crossing s = 1 applies the automorphism to the
    torus coordinates. Non-singular, transversally hyperbolic; entropy
    log((3 + sqrt 5)/2).

``rigid_rotation``
    Constant unit field (1, 0, 0) on the same solid torus chart. Holonomy
    is the identity on disks: the non-expansive, zero-entropy control.

Each flow carries ``rescale`` constants (L, beta0): L bounds the one-time-
unit growth of rescaled comparisons and beta0 caps the admissible section
radius factor. For the suspension the expansion happens at the gluing
crossing in one jump, so L must absorb one extra crossing over short times;
the catalog uses the squared top eigenvalue, valid for time steps >= 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .geometry import Gluing, ModelManifold, Point

SQRT5 = math.sqrt(5.0)
LAMBDA_PLUS = (3.0 + SQRT5) / 2.0
LAMBDA_MINUS = (3.0 - SQRT5) / 2.0
CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])

FLOW_NAMES = ("solid_torus", "cat_suspension", "rigid_rotation")


@dataclass(frozen=True)
class RescaleConstants:
    """Per-unit-time expansion bound L >= 1 and maximal section factor beta0."""

    L: float
    beta0: float


@dataclass(frozen=True)
class FlowSpec:
    name: str
    manifold: ModelManifold
    field: Callable                       # vectorized (..., d) -> (..., d), wraps internally
    singular_set_description: str
    singular_predicate: Callable          # vectorized (..., d) -> bool array
    rescale: RescaleConstants
    analytic_holonomy: Optional[Callable] = None   # (base, t, u) -> image coords
    known_entropy: Optional[float] = None
    smooth_sample_filter: Optional[Callable] = None  # mask for derivative sampling
    cover_ok: bool = True                 # field is invariant under all deck maps


# ----------------------------------------------------------------- manifolds

def solid_torus_manifold() -> ModelManifold:
    return ModelManifold(
        name="solid_torus",
        chart_dims=3,
        periodic_axes=(4.0, None, None),
        axis_origins=(-2.0, 0.0, 0.0),
        gluing=None,
        disk_axes=(1, 2),
    )


def cat_suspension_manifold() -> ModelManifold:
    return ModelManifold(
        name="cat_suspension",
        chart_dims=3,
        periodic_axes=(1.0, 1.0, 1.0),
        axis_origins=(0.0, 0.0, 0.0),
        gluing=Gluing(axis=2, matrix=CAT_MATRIX.copy(), target_axes=(0, 1)),
        disk_axes=None,
    )


# -------------------------------------------------------------------- fields

def _rho(x):
    """Speed profile of the solid torus flow, 4-periodic in the chart."""
    xw = -2.0 + np.mod(np.asarray(x, dtype=float) + 2.0, 4.0)
    return np.minimum(np.abs(xw), 1.0)


def _solid_torus_field(coords):
    coords = np.asarray(coords, dtype=float)
    out = np.zeros_like(coords)
    out[..., 0] = _rho(coords[..., 0])
    return out


def _constant_field(direction):
    direction = np.asarray(direction, dtype=float)

    def field(coords):
        coords = np.asarray(coords, dtype=float)
        out = np.empty_like(coords)
        out[...] = direction
        return out

    return field


# --------------------------------------------------------- analytic holonomy

def _nearest_lift(u):
    return u - np.round(u)


def _cat_holonomy(base: Point, t: float, u):
    """Section-return map of the suspension in canonical section coordinates.

    Crossing the gluing k = floor(s0 + t) times applies the automorphism k
    times to the transverse offset; the result is reduced to the nearest
    torus representative (local lift).
    """
    s0 = float(base.coords[2])
    k = int(math.floor(s0 + t))
    m = np.linalg.matrix_power(CAT_MATRIX, k)
    u = np.asarray(u, dtype=float)
    return _nearest_lift(u @ m.T)


def _disk_isometric_holonomy(base: Point, t: float, u):
    """Flows that move disks rigidly return section offsets unchanged."""
    return np.asarray(u, dtype=float).copy()


# -------------------------------------------------------------------- catalog

def _build_solid_torus() -> FlowSpec:
    def singular(coords):
        coords = np.asarray(coords, dtype=float)
        return _rho(coords[..., 0]) < 1e-12

    def smooth_filter(coords):
        # keep derivative stencils away from the kinks of rho at x in {-1, 0, 1}
        x = np.asarray(coords, dtype=float)[..., 0]
        xw = -2.0 + np.mod(x + 2.0, 4.0)
        dist = np.min(np.abs(xw[..., None] - np.array([-1.0, 0.0, 1.0])), axis=-1)
        return dist > 1e-2

    return FlowSpec(
        name="solid_torus",
        manifold=solid_torus_manifold(),
        field=_solid_torus_field,
        singular_set_description="the disk {0} x D where the speed profile vanishes",
        singular_predicate=singular,
        rescale=RescaleConstants(L=math.e, beta0=0.25),
        analytic_holonomy=_disk_isometric_holonomy,
        known_entropy=0.0,
        smooth_sample_filter=smooth_filter,
    )


def _build_cat_suspension() -> FlowSpec:
    def singular(coords):
        coords = np.asarray(coords, dtype=float)
        return np.zeros(coords.shape[:-1], dtype=bool)

    return FlowSpec(
        name="cat_suspension",
        manifold=cat_suspension_manifold(),
        field=_constant_field((0.0, 0.0, 1.0)),
        singular_set_description="empty (unit suspension field)",
        singular_predicate=singular,
        # One gluing crossing multiplies transverse offsets by up to
        # lambda_plus in a single jump; L = lambda_plus**2 makes the shrunken
        # holonomy domain valid for every time step t >= 1/2.
        rescale=RescaleConstants(L=LAMBDA_PLUS**2, beta0=0.25),
        analytic_holonomy=_cat_holonomy,
        known_entropy=math.log(LAMBDA_PLUS),
    )


def _build_rigid_rotation() -> FlowSpec:
    def singular(coords):
        coords = np.asarray(coords, dtype=float)
        return np.zeros(coords.shape[:-1], dtype=bool)

    return FlowSpec(
        name="rigid_rotation",
        manifold=solid_torus_manifold(),
        field=_constant_field((1.0, 0.0, 0.0)),
        singular_set_description="empty (constant unit field)",
        singular_predicate=singular,
        rescale=RescaleConstants(L=1.0, beta0=0.25),
        analytic_holonomy=_disk_isometric_holonomy,
        known_entropy=0.0,
    )


_CATALOG = {}


def get_flow(name: str) -> FlowSpec:
    """Look up a built-in flow by name."""
    if name not in _CATALOG:
        builders = {
            "solid_torus": _build_solid_torus,
            "cat_suspension": _build_cat_suspension,
            "rigid_rotation": _build_rigid_rotation,
        }
        if name not in builders:
            raise KeyError(f"unknown flow {name!r}; available: {FLOW_NAMES}")
        _CATALOG[name] = builders[name]()
    return _CATALOG[name]


def reversed_flow(f: FlowSpec) -> FlowSpec:
    """The flow of -X on the same manifold (stable and unstable sets swap)."""
    base_field = f.field
    base_hol = f.analytic_holonomy

    def neg_field(coords):
        return -base_field(coords)

    rev_hol = None
    if base_hol is not None:
        def rev_hol(base, t, u):
            return base_hol(base, -t, u)

    return replace(f, name=f.name + "_reversed", field=neg_field,
                   analytic_holonomy=rev_hol)


# ----------------------------------------------------------------- operations

def eval_field(f: FlowSpec, x: Point):
    """Field value at a canonical point, in chart coordinates."""
    return f.field(x.coords)


def field_norm(f: FlowSpec, x: Point) -> float:
    return float(np.linalg.norm(eval_field(f, x)))


def field_norm_array(f: FlowSpec, coords):
    return np.linalg.norm(f.field(coords), axis=-1)


def estimate_lipschitz(f: FlowSpec, samples: int = 1000, step: float = 1e-5,
                       seed: int = 0) -> RescaleConstants:
    """Estimate rescale constants from the field's spatial derivative.

    Central finite differences at random regular points give sup ||DX||;
    the returned bound is L = exp(sup ||DX||) with beta0 = 0.25 / L. For a
    glued manifold whose identification is not an isometry this can
    undershoot the true orbit-growth bound (the chart derivative never sees
    the jump at the gluing); the catalog's own ``rescale`` constants are the
    authoritative values for admissibility checks.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    pts = np.stack([p.coords for p in sample_points(f, samples, seed=seed)])
    keep = ~f.singular_predicate(pts)
    if f.smooth_sample_filter is not None:
        keep &= f.smooth_sample_filter(pts)
    pts = pts[keep]
    d = f.manifold.chart_dims
    sup = 0.0
    for ax in range(d):
        e = np.zeros(d)
        e[ax] = step
        jac_col = (f.field(pts + e) - f.field(pts - e)) / (2.0 * step)  # (n, d)
        # column-wise assembly: accumulate into per-sample Jacobians
        if ax == 0:
            jacs = np.zeros(pts.shape[:1] + (d, d))
        jacs[:, :, ax] = jac_col
    if len(pts):
        sup = float(np.max(np.linalg.norm(jacs, ord=2, axis=(1, 2))))
    L = math.exp(sup)
    return RescaleConstants(L=L, beta0=0.25 / L)


def sample_points(f: FlowSpec, n: int, seed: int = 0, x_range=None,
                  disk_radius_max: float = 0.6):
    """Seeded sample of canonical points, away from chart boundaries.

    For the solid-torus chart flows ``x_range = (lo, hi)`` restricts |x| to
    [lo, hi] (both signs); default covers the whole circle. The suspension
    samples the unit cube.
    """
    rng = np.random.default_rng(seed)
    m = f.manifold
    if m.name == "cat_suspension":
        raw = rng.uniform(0.0, 1.0, size=(n, 3))
        return [m.wrap(r) for r in raw]
    # solid torus chart
    if x_range is None:
        x = rng.uniform(-2.0, 2.0, size=n)
    else:
        lo, hi = x_range
        mag = rng.uniform(lo, hi, size=n)
        sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
        x = mag * sign
    r = disk_radius_max * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0.0, 2.0 * np.pi, size=n)
    raw = np.stack([x, r * np.cos(th), r * np.sin(th)], axis=1)
    return [m.wrap(p) for p in raw]
