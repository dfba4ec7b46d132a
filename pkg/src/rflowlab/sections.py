"""Rescaled cross-sections and holonomy maps between them.

A cross-section at a regular point x is the disk of radius beta * ||X(x)||
in the hyperplane normal to the field, realized through the flat exp map.
The holonomy over time t sends a point y near x on its section to the
first crossing of the section rebuilt at phi_t(x); the result reports the
image in the target frame's coordinates together with a flag recording
whether the orbit segment stayed inside the rescaled tube
d(phi_s(x), phi_s(y)) <= beta * ||X(phi_s(x))|| at sampled times.

Frames along an orbit are kept continuous by seeding each Gram-Schmidt run
with the previous frame's axes carried over in the chart. The seed is not
pushed through the gluing's linear identification; for the built-in flows
the canonical frame is constant in the chart and this convention is what
makes holonomy coordinates comparable with the closed-form section maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BetaTooLarge, LeftTube, NoCrossing, SingularBase, Timeout
from .flows import FlowSpec, field_norm
from .geometry import NormalFrame, Point
from .integrate import (
    DEFAULT_TOL,
    CrossingEvent,
    first_crossing,
    flow_map,
    orbit,
    orbit_batch,
)

SINGULAR_NORM = 1e-12


@dataclass(frozen=True)
class CrossSection:
    """Disk of radius beta * ||X(base)|| normal to the field at base."""

    frame: NormalFrame
    beta: float
    radius: float
    flow_name: str
    base_field_norm: float

    @property
    def base(self) -> Point:
        return self.frame.base


@dataclass
class HolonomyResult:
    image: Point
    hit_time: float
    tube_ok: bool
    image_coords: np.ndarray
    target: CrossSection
    distance_to_base: float
    residual: float


@dataclass
class HolonomyOrbit:
    """Stepwise holonomy results; stops at the first per-step error."""

    results: list
    error: Optional[Exception]
    error_step: Optional[int]

    @property
    def steps_completed(self) -> int:
        return len(self.results)


def make_section(f: FlowSpec, x: Point, beta: float,
                 seed_axes=None) -> CrossSection:
    """Build the rescaled cross-section at a regular point."""
    n = field_norm(f, x)
    if n <= SINGULAR_NORM:
        raise SingularBase(f"{f.name}: ||X|| = {n:.3e} at {x}")
    if beta > f.rescale.beta0 + 1e-12:
        raise BetaTooLarge(f"beta={beta} exceeds beta0={f.rescale.beta0} "
                           f"for {f.name}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    direction = f.field(x.coords) / n
    frame = f.manifold.normal_frame(x, direction, seed_axes=seed_axes)
    return CrossSection(frame=frame, beta=beta, radius=beta * n,
                        flow_name=f.name, base_field_norm=n)


def section_coords(f: FlowSpec, section: CrossSection, p: Point) -> np.ndarray:
    """Coefficients of p in the section frame (deck-minimal displacement)."""
    disp = f.manifold.displacement(section.base.coords, p.coords)
    return section.frame.axes @ disp


def section_point(f: FlowSpec, section: CrossSection, u) -> Point:
    """The section point with frame coefficients u."""
    return f.manifold.exp(section.frame, u)


def _tube_samples(t: float) -> np.ndarray:
    n = max(32, int(math.ceil(abs(t) / 0.05)))
    return np.linspace(0.0, t, n + 1)


def holonomy(f: FlowSpec, source: CrossSection, t: float, y: Point,
             tol: float = DEFAULT_TOL, radius_slack: float = 1.0,
             window_doublings: int = 4) -> HolonomyResult:
    """Holonomy P over time t from the source section to the one at phi_t(base).

    Locates the crossing of the target plane inside a window of half-width
    beta * ||X(phi_t(base))|| around t, doubling the window up to
    ``window_doublings`` times before giving up. ``radius_slack`` relaxes
    the target-radius containment check (slack > 1 lets callers measure
    how far outside the tube an image lands instead of erroring).
    """
    target_base = flow_map(f, source.base, t, tol=tol)
    n_target = field_norm(f, target_base)
    if n_target <= SINGULAR_NORM:
        raise SingularBase(f"{f.name}: target base is singular after t={t}")
    direction = f.field(target_base.coords) / n_target
    frame = f.manifold.normal_frame(target_base, direction,
                                    seed_axes=source.frame.axes)
    target = CrossSection(frame=frame, beta=source.beta,
                          radius=source.beta * n_target,
                          flow_name=f.name, base_field_norm=n_target)

    w = max(source.beta * n_target, 1e-9)
    event: CrossingEvent | None = None
    last_exc: Exception | None = None
    for _ in range(window_doublings + 1):
        try:
            event = first_crossing(f, y, target, window=(t - w, t + w),
                                   direction="forward", tol=tol,
                                   radius_slack=radius_slack)
            break
        except NoCrossing as exc:
            last_exc = exc
            w *= 2.0
    if event is None:
        raise last_exc if last_exc is not None else NoCrossing(
            f"{f.name}: crossing not found near t={t}")

    d_img = float(f.manifold.distance_array(target_base.coords,
                                            event.hit_point.coords))
    tube_ok = _tube_inequality_holds(f, source, y, t, tol)
    return HolonomyResult(image=event.hit_point, hit_time=event.hit_time,
                          tube_ok=tube_ok, image_coords=event.offset_coords,
                          target=target, distance_to_base=d_img,
                          residual=event.residual)


def _tube_inequality_holds(f, source, y, t, tol) -> bool:
    times = np.unique(_tube_samples(t))
    if f.cover_ok:
        ordered = times if t >= 0 else times[::-1]
        pair = np.vstack([source.base.coords, y.coords])
        states = orbit_batch(f, pair, ordered, tol=tol)  # (2, m, d)
        bounds = source.beta * np.linalg.norm(f.field(states[0]), axis=-1)
        dists = f.manifold.distance_array(states[0], states[1])
        return bool(np.all(dists <= bounds * (1 + 1e-9) + 1e-12))
    base_orbit = orbit(f, source.base, times, tol=tol)
    y_orbit = orbit(f, y, times, tol=tol)
    for bp, yp in zip(base_orbit.points, y_orbit.points):
        bound = source.beta * field_norm(f, bp)
        if f.manifold.distance(bp, yp) > bound * (1 + 1e-9) + 1e-12:
            return False
    return True


def holonomy_orbit(f: FlowSpec, x: Point, beta: float, t: float, n: int,
                   y: Point, tol: float = DEFAULT_TOL,
                   radius_slack: float = 1.0) -> HolonomyOrbit:
    """Compose holonomy over |n| steps of signed size t, rebuilding sections.

    ``n < 0`` walks the backward maps. Stops at the first step error and
    reports how far it got.
    """
    results = []
    if n == 0:
        return HolonomyOrbit(results=results, error=None, error_step=None)
    step_t = t if n > 0 else -t
    try:
        sec = make_section(f, x, beta)
    except (SingularBase, BetaTooLarge) as exc:
        return HolonomyOrbit(results=results, error=exc, error_step=0)
    cur_y = y
    for k in range(1, abs(n) + 1):
        try:
            res = holonomy(f, sec, step_t, cur_y, tol=tol,
                           radius_slack=radius_slack)
        except (NoCrossing, LeftTube, Timeout, SingularBase) as exc:
            return HolonomyOrbit(results=results, error=exc, error_step=k)
        results.append(res)
        sec = res.target
        cur_y = res.image
    return HolonomyOrbit(results=results, error=None, error_step=None)
