"""Closed-chain geometry of the ring body.

Joint ``m`` sits at vertex ``m``; segment ``m`` runs from vertex ``m`` to
vertex ``m + 1`` with heading equal to the cumulative sum of external angles
``theta[0..m]`` (reference heading 0, vertex 0 at the origin).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core_rd import MorphogenState

TWO_PI = 2.0 * np.pi
# Shewchuk's static error bound for the 2x2 orientation determinant
_ORIENT_ERRBOUND = (3.0 + 16.0 * np.finfo(float).eps) * np.finfo(float).eps


class ProjectionFailed(RuntimeError):
    def __init__(self, residual: float, iterations: int, angles: np.ndarray):
        self.residual = float(residual)
        self.iterations = int(iterations)
        self.angles = angles
        super().__init__(
            f"closure projection did not converge in {iterations} iterations "
            f"(residual {residual:.3e})"
        )


@dataclass
class PolygonGeometry:
    vertices: np.ndarray  # (N, 2), vertex m is joint m
    segments: np.ndarray  # (N, 2), edge vectors of length cell_length
    closure_residual: np.ndarray  # (2,), -sum(segments)
    angle_sum_error: float
    self_intersects: bool
    crossings: list = field(default_factory=list)  # (i, j, (x, y)) per intersecting pair

    @property
    def n_cells(self) -> int:
        return len(self.vertices)

    @property
    def end_point(self) -> np.ndarray:
        """Where the open chain ends; equals vertex 0 only when closed."""
        return -self.closure_residual

    def is_closed(self, tol: float = 1e-9) -> bool:
        return bool(np.hypot(*self.closure_residual) <= tol and abs(self.angle_sum_error) <= tol)


def angles_from_morphogens(state: MorphogenState) -> np.ndarray:
    """Joint command: passive plus activator quantity, in radians."""
    return state.q_pas + state.q_act


def headings(angles) -> np.ndarray:
    return np.cumsum(np.asarray(angles, dtype=np.float64))


def segment_vectors(angles, cell_length: float = 1.0) -> np.ndarray:
    phi = headings(angles)
    return cell_length * np.column_stack((np.cos(phi), np.sin(phi)))


def closure_residual(angles, cell_length: float = 1.0) -> np.ndarray:
    return -segment_vectors(angles, cell_length).sum(axis=0)


def _orient_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    det = (Fraction(b[0]) - ax) * (Fraction(c[1]) - ay) - (Fraction(b[1]) - ay) * (Fraction(c[0]) - ax)
    return (det > 0) - (det < 0)


def orientation(a, b, c) -> int:
    """Sign of the turn a -> b -> c: +1 left, -1 right, 0 collinear.

    Floating point with a static filter; falls back to exact rationals when
    the determinant is too small to trust.
    """
    acx, acy = a[0] - c[0], a[1] - c[1]
    bcx, bcy = b[0] - c[0], b[1] - c[1]
    left = acx * bcy
    right = acy * bcx
    det = left - right
    bound = _ORIENT_ERRBOUND * (abs(left) + abs(right))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _orient_exact(a, b, c)


def _on_segment(p, q, r) -> bool:
    """r collinear with p-q: does it lie within the bounding box?"""
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])


def segment_pair_intersects(a1, a2, b1, b2) -> bool:
    """True iff closed segments a1-a2 and b1-b2 share at least one point."""
    o1 = orientation(a1, a2, b1)
    o2 = orientation(a1, a2, b2)
    o3 = orientation(b1, b2, a1)
    o4 = orientation(b1, b2, a2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _on_segment(a1, a2, b1):
        return True
    if o2 == 0 and _on_segment(a1, a2, b2):
        return True
    if o3 == 0 and _on_segment(b1, b2, a1):
        return True
    if o4 == 0 and _on_segment(b1, b2, a2):
        return True
    return False


def intersection_point(a1, a2, b1, b2) -> tuple[float, float]:
    """A representative common point of two intersecting segments."""
    a1, a2, b1, b2 = (np.asarray(p, dtype=float) for p in (a1, a2, b1, b2))
    da, db = a2 - a1, b2 - b1
    denom = da[0] * db[1] - da[1] * db[0]
    if denom != 0:
        t = ((b1[0] - a1[0]) * db[1] - (b1[1] - a1[1]) * db[0]) / denom
        t = min(max(t, 0.0), 1.0)
        p = a1 + t * da
        return float(p[0]), float(p[1])
    # parallel/collinear overlap: first endpoint lying on the other segment
    for p, (q1, q2) in ((b1, (a1, a2)), (b2, (a1, a2)), (a1, (b1, b2)), (a2, (b1, b2))):
        if orientation(q1, q2, p) == 0 and _on_segment(q1, q2, p):
            return float(p[0]), float(p[1])
    return float(a1[0]), float(a1[1])


def _chain_points(angles, cell_length: float):
    seg = segment_vectors(angles, cell_length)
    pts = np.vstack((np.zeros((1, 2)), np.cumsum(seg, axis=0)))
    return seg, pts


def find_crossings(points: np.ndarray) -> list:
    """All non-adjacent segment pairs of the ring chain that touch.

    ``points`` holds N + 1 chain points; segment i is points[i] -> points[i+1],
    and segments 0 and N-1 count as adjacent (they meet at the hinge at
    vertex 0).
    """
    n = len(points) - 1
    seg_lo = np.minimum(points[:-1], points[1:])
    seg_hi = np.maximum(points[:-1], points[1:])
    out = []
    for i in range(n - 2):
        # bounding-box prefilter, exact test only on overlapping boxes
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if js.size == 0:
            continue
        overlap = (
            (seg_lo[js, 0] <= seg_hi[i, 0])
            & (seg_hi[js, 0] >= seg_lo[i, 0])
            & (seg_lo[js, 1] <= seg_hi[i, 1])
            & (seg_hi[js, 1] >= seg_lo[i, 1])
        )
        for j in js[overlap]:
            a1, a2 = tuple(points[i]), tuple(points[i + 1])
            b1, b2 = tuple(points[j]), tuple(points[j + 1])
            if segment_pair_intersects(a1, a2, b1, b2):
                out.append((int(i), int(j), intersection_point(a1, a2, b1, b2)))
    return out


def reconstruct_polygon(angles, cell_length: float = 1.0) -> PolygonGeometry:
    theta = np.asarray(angles, dtype=np.float64)
    if theta.ndim != 1 or theta.size < 3:
        raise ValueError(f"need at least 3 joint angles, got shape {theta.shape}")
    seg, pts = _chain_points(theta, cell_length)
    crossings = find_crossings(pts)
    return PolygonGeometry(
        vertices=pts[:-1].copy(),
        segments=seg,
        closure_residual=-seg.sum(axis=0),
        angle_sum_error=float(theta.sum() - TWO_PI),
        self_intersects=bool(crossings),
        crossings=crossings,
    )


def closure_constraints(angles, cell_length: float = 1.0):
    """Constraint values c(theta) (3,) and Jacobian (3, N).

    c = [sum of segment x, sum of segment y, sum(theta) - 2 pi].
    """
    theta = np.asarray(angles, dtype=np.float64)
    phi = np.cumsum(theta)
    cx = cell_length * np.cos(phi)
    cy = cell_length * np.sin(phi)
    c = np.array([cx.sum(), cy.sum(), theta.sum() - TWO_PI])
    # d phi_m / d theta_j = 1 for m >= j, so use reversed cumulative sums
    jac = np.empty((3, theta.size))
    jac[0] = -np.cumsum(cy[::-1])[::-1]
    jac[1] = np.cumsum(cx[::-1])[::-1]
    jac[2] = 1.0
    return c, jac


def project_to_closure(angles, cell_length: float = 1.0, tol: float = 1e-9, max_iter: int = 100) -> np.ndarray:
    """Nearest (least-squares) closed configuration to ``angles``.

    Minimises ``sum((x - angles)**2)`` subject to zero closure residual and
    ``sum(x) == 2 pi``.  Each iteration solves the problem with the
    constraints linearised at the current iterate (Gauss-Newton, minimal-norm
    correction), so fixed points are exactly the KKT points of the original
    problem.  Steps are backtracked on an l1 merit function to keep large
    violations from oscillating.
    """
    target = np.asarray(angles, dtype=np.float64)
    if target.ndim != 1 or target.size < 3:
        raise ValueError(f"need at least 3 joint angles, got shape {target.shape}")
    x = target.copy()
    c, jac = closure_constraints(x, cell_length)
    residual = float(np.abs(c).max())
    penalty = 1.0
    for it in range(1, max_iter + 1):
        dev = x - target
        rhs = jac @ dev - c
        try:
            mult = np.linalg.solve(jac @ jac.T, rhs)
        except np.linalg.LinAlgError:
            mult = np.linalg.lstsq(jac @ jac.T, rhs, rcond=None)[0]
        delta = jac.T @ mult - dev
        penalty = max(penalty, 2.0 * float(np.abs(mult).max()))

        def merit(dv, cv):
            return 0.5 * float(dv @ dv) + penalty * float(np.abs(cv).sum())

        base = merit(dev, c)
        # directional derivative of the merit along delta
        slope = float(dev @ delta) - penalty * float(np.abs(c).sum())
        step = 1.0
        while True:
            x_new = x + step * delta
            c_new, jac_new = closure_constraints(x_new, cell_length)
            if merit(x_new - target, c_new) <= base + 1e-4 * step * min(slope, 0.0) or step < 1e-6:
                break
            step *= 0.5
        x, c, jac = x_new, c_new, jac_new
        residual = float(np.abs(c).max())
        if not np.isfinite(residual):
            break
        if residual <= tol and step * np.abs(delta).max() <= tol:
            return x
    raise ProjectionFailed(residual, max_iter, x)
