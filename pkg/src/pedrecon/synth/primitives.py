"""Analytic ray intersections for the synthetic renderer.

All functions take one ray origin and a batch of direction vectors and
return the hit parameter t per ray, with +inf for misses.  Directions are
deliberately not normalized: the renderer uses camera rays of the form
((u - cx)/fx, (v - cy)/fy, 1) rotated into the world, so t is exactly the
camera-frame depth Z of the hit.
"""

from __future__ import annotations

import numpy as np

#: Hits closer than this along the ray are ignored (surface acne / self hits).
T_MIN = 1e-3


def ray_plane_z(origin: np.ndarray, dirs: np.ndarray, z: float = 0.0) -> np.ndarray:
    """Intersect rays with the horizontal plane at the given height."""
    dz = dirs[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (z - origin[2]) / dz
    t = np.where((dz != 0.0) & (t > T_MIN), t, np.inf)
    return t


def ray_aabb(origin: np.ndarray, dirs: np.ndarray, box_min, box_max) -> np.ndarray:
    """Slab intersection with an axis-aligned box; returns the entry t."""
    box_min = np.asarray(box_min, dtype=np.float64)
    box_max = np.asarray(box_max, dtype=np.float64)
    t_enter = np.full(dirs.shape[:-1], -np.inf)
    t_exit = np.full(dirs.shape[:-1], np.inf)
    for axis in range(3):
        d = dirs[..., axis]
        o = float(origin[axis])
        inside = box_min[axis] <= o <= box_max[axis]
        # 0/0 only arises for rays parallel to the slab, fixed up below.
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (box_min[axis] - o) / d
            t1 = (box_max[axis] - o) / d
        near = np.minimum(t0, t1)
        far = np.maximum(t0, t1)
        # Rays parallel to this slab hit it only if the origin lies inside it.
        parallel = d == 0.0
        if parallel.any():
            near[parallel] = -np.inf if inside else np.inf
            far[parallel] = np.inf if inside else -np.inf
        np.maximum(t_enter, near, out=t_enter)
        np.minimum(t_exit, far, out=t_exit)
    hit = (t_enter <= t_exit) & (t_exit > T_MIN)
    t = np.where(t_enter > T_MIN, t_enter, t_exit)  # origin inside: exit face
    return np.where(hit, t, np.inf)


def ray_sphere(origin: np.ndarray, dirs: np.ndarray, center, radius: float) -> np.ndarray:
    """Nearest intersection with a sphere."""
    oc = origin - np.asarray(center, dtype=np.float64)
    a = (dirs * dirs).sum(axis=-1)
    b = 2.0 * dirs @ oc
    c = oc @ oc - radius * radius
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
    t = np.where(t_near > T_MIN, t_near, t_far)
    return np.where((disc >= 0.0) & (t > T_MIN), t, np.inf)


def ray_capsule(origin: np.ndarray, dirs: np.ndarray, a, b, radius: float) -> np.ndarray:
    """Nearest intersection with a capsule (segment a-b swept by a sphere)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    axis = b - a
    axis_sq = float(axis @ axis)
    if axis_sq == 0.0:
        return ray_sphere(origin, dirs, a, radius)

    m = origin - a
    d_ax = dirs @ axis / axis_sq          # axial component of each direction
    m_ax = float(m @ axis) / axis_sq
    d_perp = dirs - d_ax[..., None] * axis
    m_perp = m - m_ax * axis

    qa = (d_perp * d_perp).sum(axis=-1)
    qb = 2.0 * d_perp @ m_perp
    qc = float(m_perp @ m_perp) - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cyl = (-qb - sq) / (2.0 * qa)
    s = m_ax + t_cyl * d_ax               # axial coordinate of the hit, in [0, 1] on the segment
    cyl_ok = (disc >= 0.0) & (qa > 0.0) & (t_cyl > T_MIN) & (s >= 0.0) & (s <= 1.0)
    t_cyl = np.where(cyl_ok, t_cyl, np.inf)

    t_caps = np.minimum(
        ray_sphere(origin, dirs, a, radius),
        ray_sphere(origin, dirs, b, radius),
    )
    return np.minimum(t_cyl, t_caps)
