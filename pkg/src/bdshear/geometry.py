"""Bounded domains with piecewise-C2 boundaries.

Two kinds of domain are supported: star-shaped regions described by a
trigonometric radius function around a center, and regions bounded by a
closed chain of graph pieces ``x2 = E(x1)`` or ``x1 = E(x2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import (
    CornerPoint,
    CurvatureBoundViolated,
    InconsistentDerivative,
    NotClosed,
    NotInsideUnitSquare,
    NotOnBoundary,
    NotSimple,
    RadiusBoundViolated,
    SlopeBoundViolated,
)

INF = math.inf
CLOSURE_TOL = 1e-12
CORNER_ANGLE_TOL = 1e-9
CORNER_CURVATURE_TOL = 1e-6
ON_BOUNDARY_TOL = 1e-9
MAX_GRAPH_SLOPE = 2.0
MIN_POLYLINE_POINTS = 4096


# --- graph functions -------------------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    """``E(t) = sum_i coeffs[i] * t**i``."""

    coeffs: tuple[float, ...]
    kind: str = field(default="poly", init=False)

    def value(self, t, order: int = 0):
        p = np.polynomial.Polynomial(self.coeffs)
        for _ in range(order):
            p = p.deriv()
        return p(np.asarray(t, dtype=float))

    def to_dict(self) -> dict:
        return {"type": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class TrigPolynomial:
    """``E(t) = a[0] + sum_n a[n] cos(n w t) + b[n-1] sin(n w t)``."""

    a: tuple[float, ...]
    b: tuple[float, ...] = ()
    freq: float = 1.0
    kind: str = field(default="trig", init=False)

    def value(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.a[0] if order == 0 else 0.0)
        # d^k/dt^k cos(x) = cos(x + k pi/2), same shift for sin
        shift = order * np.pi / 2
        for n in range(1, max(len(self.a), len(self.b) + 1)):
            w = n * self.freq
            scale = w**order
            if n < len(self.a):
                out = out + self.a[n] * scale * np.cos(w * t + shift)
            if n - 1 < len(self.b):
                out = out + self.b[n - 1] * scale * np.sin(w * t + shift)
        return out

    def to_dict(self) -> dict:
        return {"type": "trig", "a": list(self.a), "b": list(self.b), "freq": self.freq}


@dataclass(frozen=True)
class CircularArc:
    """``E(t) = center_v + sign * sqrt(radius**2 - (t - center_t)**2)``."""

    center_t: float
    center_v: float
    radius: float
    sign: float = 1.0
    kind: str = field(default="arc", init=False)

    def value(self, t, order: int = 0):
        u = np.asarray(t, dtype=float) - self.center_t
        root = np.sqrt(np.maximum(self.radius**2 - u**2, 0.0))
        if order == 0:
            return self.center_v + self.sign * root
        if order == 1:
            return -self.sign * u / root
        if order == 2:
            return -self.sign * self.radius**2 / root**3
        raise ValueError("only derivatives up to order 2 are available")

    def to_dict(self) -> dict:
        return {
            "type": "arc",
            "center_t": self.center_t,
            "center_v": self.center_v,
            "radius": self.radius,
            "sign": self.sign,
        }


GraphFunction = Polynomial | TrigPolynomial | CircularArc


def graph_function_from_dict(d: dict) -> GraphFunction:
    kind = d["type"]
    if kind == "poly":
        return Polynomial(tuple(float(c) for c in d["coeffs"]))
    if kind == "trig":
        return TrigPolynomial(
            tuple(float(c) for c in d["a"]), tuple(float(c) for c in d.get("b", ())), float(d.get("freq", 1.0))
        )
    if kind == "arc":
        return CircularArc(float(d["center_t"]), float(d["center_v"]), float(d["radius"]), float(d.get("sign", 1.0)))
    raise ValueError(f"unknown graph function type {kind!r}")


# --- boundary pieces and radius curves ------------------------------------------


@dataclass(frozen=True)
class BoundaryPiece:
    """One graph piece of a boundary, traversed from ``start`` to ``end``.

    ``over="x1"`` means the piece is ``{(t, E(t))}``; ``over="x2"`` means it is
    ``{(E(t), t)}``.  ``start`` may exceed ``end`` to reverse the traversal.
    """

    over: Literal["x1", "x2"]
    start: float
    end: float
    func: GraphFunction

    @property
    def direction(self) -> float:
        return 1.0 if self.end >= self.start else -1.0

    @property
    def interval(self) -> tuple[float, float]:
        return (min(self.start, self.end), max(self.start, self.end))

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        e = self.func.value(t)
        pts = np.stack([t, e], axis=-1) if self.over == "x1" else np.stack([e, t], axis=-1)
        return pts

    def tangent(self, t) -> np.ndarray:
        """Unit tangent in traversal direction."""
        d1 = self.func.value(t, 1)
        one = np.ones_like(np.asarray(d1, dtype=float))
        v = np.stack([one, d1], axis=-1) if self.over == "x1" else np.stack([d1, one], axis=-1)
        v = self.direction * v
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def curvature(self, t) -> np.ndarray:
        """Signed curvature in traversal direction."""
        d1 = self.func.value(t, 1)
        d2 = self.func.value(t, 2)
        k = d2 / (1.0 + d1**2) ** 1.5
        return self.direction * (k if self.over == "x1" else -k)

    def slope(self, t) -> np.ndarray:
        """Slope ``dx1/dx2`` of the tangent line, ``inf`` where it is horizontal."""
        d1 = np.atleast_1d(np.asarray(self.func.value(t, 1), dtype=float))
        if self.over == "x2":
            return d1
        with np.errstate(divide="ignore"):
            s = np.where(np.abs(d1) < 1e-14, INF, 1.0 / np.where(d1 == 0, 1.0, d1))
        return s

    def to_dict(self) -> dict:
        return {"over": self.over, "start": self.start, "end": self.end, "func": self.func.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryPiece":
        return cls(d["over"], float(d["start"]), float(d["end"]), graph_function_from_dict(d["func"]))


@dataclass(frozen=True)
class RadiusCurve:
    """Star-shaped boundary ``translate + rho(theta) (cos theta, sin theta)``.

    ``rho(theta) = a[0] + sum_n a[n] cos(n theta) + b[n-1] sin(n theta)``.
    ``rho0`` and ``nu`` are the declared bounds on the radius and on
    ``|rho''|``; ``rho0=None`` declares the measured maximum.
    """

    a: tuple[float, ...]
    b: tuple[float, ...] = ()
    translate: tuple[float, float] = (0.5, 0.5)
    rho0: float | None = None
    nu: float = 1.0

    def _trig(self) -> TrigPolynomial:
        return TrigPolynomial(tuple(self.a), tuple(self.b), 1.0)

    def rho(self, theta, order: int = 0):
        return self._trig().value(theta, order)


# --- polyline utilities -------------------------------------------------------------


class _SegmentIndex:
    """Segments of a closed polyline bucketed into vertical strips."""

    def __init__(self, poly: np.ndarray, nbins: int = 512):
        self.a = poly[:-1]
        self.b = poly[1:]
        lo = min(poly[:, 0].min(), 0.0) - 1e-9
        hi = max(poly[:, 0].max(), 1.0) + 1e-9
        self.lo, self.width, self.nbins = lo, (hi - lo) / nbins, nbins
        s_lo = np.minimum(self.a[:, 0], self.b[:, 0])
        s_hi = np.maximum(self.a[:, 0], self.b[:, 0])
        self.seg_lo, self.seg_hi = s_lo, s_hi
        b0 = self.bin_of(s_lo - 2 * ON_BOUNDARY_TOL)
        b1 = self.bin_of(s_hi + 2 * ON_BOUNDARY_TOL)
        counts = b1 - b0 + 1
        seg = np.repeat(np.arange(len(self.a)), counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        bins = np.repeat(b0, counts) + offs
        order = np.argsort(bins, kind="stable")
        self.seg_sorted = seg[order]
        self.starts = np.searchsorted(bins[order], np.arange(nbins + 1))

    def bin_of(self, x):
        return np.clip(((np.asarray(x) - self.lo) / self.width).astype(np.int64), 0, self.nbins - 1)

    def segments_in(self, b: int) -> np.ndarray:
        return self.seg_sorted[self.starts[b] : self.starts[b + 1]]

    def winding_and_distance(self, pts: np.ndarray, want_distance: bool = True):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        wind = np.zeros(len(pts), dtype=np.int64)
        dist = np.full(len(pts), np.inf)
        bins = self.bin_of(pts[:, 0])
        order = np.argsort(bins, kind="stable")
        bounds = np.searchsorted(bins[order], np.arange(self.nbins + 1))
        for b in range(self.nbins):
            sel = order[bounds[b] : bounds[b + 1]]
            if sel.size == 0:
                continue
            segs = self.segments_in(b)
            if segs.size == 0:
                continue
            p = pts[sel]
            a, c = self.a[segs], self.b[segs]
            for start in range(0, len(p), 4096):
                q = p[start : start + 4096]
                x1 = q[:, 0:1]
                up = (a[None, :, 0] <= x1) & (x1 < c[None, :, 0])
                down = (c[None, :, 0] <= x1) & (x1 < a[None, :, 0])
                span = c[None, :, 0] - a[None, :, 0]
                with np.errstate(divide="ignore", invalid="ignore"):
                    frac = (x1 - a[None, :, 0]) / np.where(span == 0, 1.0, span)
                cross_x2 = a[None, :, 1] + frac * (c[None, :, 1] - a[None, :, 1])
                above = cross_x2 > q[:, 1:2]
                w = np.sum(up & above, axis=1) - np.sum(down & above, axis=1)
                wind[sel[start : start + 4096]] = w
                if want_distance:
                    d = c - a
                    L2 = np.sum(d**2, axis=1)
                    rel = q[:, None, :] - a[None, :, :]
                    tt = np.clip(np.sum(rel * d[None], axis=2) / np.where(L2 == 0, 1.0, L2), 0.0, 1.0)
                    proj = a[None] + tt[..., None] * d[None]
                    dd = np.sqrt(np.min(np.sum((q[:, None, :] - proj) ** 2, axis=2), axis=1))
                    dist[sel[start : start + 4096]] = dd
        return wind, dist


def _segments_intersect(p: np.ndarray, q: np.ndarray, skip_adjacent: bool) -> bool:
    """Proper crossing between segments of two polylines (vectorized, chunked)."""
    a, b = p[:-1], p[1:]
    c, d = q[:-1], q[1:]

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    for start in range(0, len(a), 512):
        A = a[start : start + 512, None]
        B = b[start : start + 512, None]
        o1 = orient(A, B, c[None])
        o2 = orient(A, B, d[None])
        o3 = orient(c[None], d[None], A)
        o4 = orient(c[None], d[None], B)
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        if skip_adjacent:
            i = np.arange(start, start + len(A))[:, None]
            j = np.arange(len(c))[None, :]
            hit &= np.abs(i - j) > 1
        if np.any(hit):
            return True
    return False


# --- domains ----------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """A validated bounded domain.

    Exactly one of ``radius`` (star-shaped) or ``pieces`` (piecewise graph
    boundary) is set.  ``corners`` lists the junctions where the boundary is
    not C2; ``polyline`` is a closed dense sample of the boundary.
    """

    kind: Literal["star", "piecewise"]
    nu: float
    radius: RadiusCurve | None = None
    pieces: tuple[BoundaryPiece, ...] = ()
    corners: tuple[tuple[float, float], ...] = ()
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    polyline: np.ndarray = field(default=None, repr=False, compare=False)
    measured: dict = field(default_factory=dict, compare=False)
    _index: _SegmentIndex = field(default=None, repr=False, compare=False)

    @property
    def L(self) -> int:
        return len(self.pieces) if self.kind == "piecewise" else 0

    @property
    def area(self) -> float:
        x, y = self.polyline[:-1, 0], self.polyline[:-1, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def sample_boundary(self, spacing: float) -> tuple[np.ndarray, np.ndarray]:
        """Boundary points at roughly uniform arc-length ``spacing`` and their slopes.

        Slopes follow the ``dx1/dx2`` convention with ``inf`` for horizontal
        tangents.  Corner points themselves are included with slope ``nan``.
        """
        pts, slopes = [], []
        if self.kind == "star":
            rc = self.radius
            length = float(np.sum(np.linalg.norm(np.diff(self.polyline, axis=0), axis=1)))
            m = max(16, int(math.ceil(length / spacing)))
            th = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
            pts.append(_star_points(rc, th))
            slopes.append(_star_slope(rc, th))
        else:
            for piece in self.pieces:
                lo, hi = piece.start, piece.end
                t = np.linspace(lo, hi, 257)
                seg = np.linalg.norm(np.diff(piece.points(t), axis=0), axis=1).sum()
                m = max(4, int(math.ceil(seg / spacing)) + 1)
                t = np.linspace(lo, hi, m)[:-1]
                pts.append(piece.points(t))
                s = piece.slope(t).astype(float)
                s[0] = np.nan if _is_corner_point(self, piece.points(t[:1])[0]) else s[0]
                slopes.append(s)
        return np.concatenate(pts), np.concatenate(slopes)


def _star_points(rc: RadiusCurve, theta) -> np.ndarray:
    r = rc.rho(theta)
    return np.stack([rc.translate[0] + r * np.cos(theta), rc.translate[1] + r * np.sin(theta)], axis=-1)


def _star_tangent(rc: RadiusCurve, theta) -> np.ndarray:
    r, dr = rc.rho(theta), rc.rho(theta, 1)
    return np.stack([dr * np.cos(theta) - r * np.sin(theta), dr * np.sin(theta) + r * np.cos(theta)], axis=-1)


def _star_slope(rc: RadiusCurve, theta) -> np.ndarray:
    v = _star_tangent(rc, np.atleast_1d(theta))
    norm = np.linalg.norm(v, axis=-1)
    horizontal = np.abs(v[:, 1]) <= 1e-12 * norm
    with np.errstate(divide="ignore", invalid="ignore"):
        s = v[:, 0] / v[:, 1]
    return np.where(horizontal, INF, s)


def _is_corner_point(domain: DomainSpec, x, tol: float = ON_BOUNDARY_TOL) -> bool:
    return any(math.hypot(x[0] - c[0], x[1] - c[1]) <= tol for c in domain.corners)


def _check_inside_unit_square(poly: np.ndarray) -> None:
    if poly.min() < 0.0 or poly.max() > 1.0:
        raise NotInsideUnitSquare("boundary leaves the unit square")


def make_star_domain(radius: RadiusCurve, n_theta: int = 4096) -> DomainSpec:
    """Validate a radius curve and build its star-shaped domain.

    Raises
    ------
    RadiusBoundViolated
        If ``rho <= 0`` somewhere, ``max rho > rho0`` or ``rho0 >= 1``.
    CurvatureBoundViolated
        If the sampled ``sup |rho''|`` exceeds ``nu``.
    NotInsideUnitSquare
        If the disk of radius ``rho0`` around the translate leaves ``[0,1]^2``.
    """
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    rho = radius.rho(theta)
    d2 = float(np.max(np.abs(radius.rho(theta, 2))))
    rmax = float(rho.max())
    if rho.min() <= 0.0:
        raise RadiusBoundViolated(f"radius function is not positive (min {rho.min():.6g})")
    rho0 = rmax if radius.rho0 is None else radius.rho0
    if rho0 >= 1.0:
        raise RadiusBoundViolated(f"rho0 = {rho0:.6g} must be < 1")
    if rmax > rho0 + 1e-15:
        raise RadiusBoundViolated(f"max rho = {rmax:.6g} exceeds rho0 = {rho0:.6g}")
    if d2 > radius.nu:
        raise CurvatureBoundViolated(f"sup |rho''| = {d2:.6g} exceeds nu = {radius.nu:.6g}")
    tx, ty = radius.translate
    if min(tx - rho0, ty - rho0) < 0.0 or max(tx + rho0, ty + rho0) > 1.0:
        raise NotInsideUnitSquare("rho0-disk around the translate leaves the unit square")
    m = max(2 * MIN_POLYLINE_POINTS, n_theta)
    th = np.linspace(0.0, 2 * np.pi, m + 1)
    poly = _star_points(radius, th)
    poly[-1] = poly[0]
    bbox = (float(poly[:, 0].min()), float(poly[:, 1].min()), float(poly[:, 0].max()), float(poly[:, 1].max()))
    return DomainSpec(
        kind="star",
        nu=radius.nu,
        radius=radius,
        corners=(),
        bbox=bbox,
        polyline=poly,
        measured={"sup_rho2": d2, "max_rho": rmax, "rho0": rho0},
        _index=_SegmentIndex(poly),
    )


def _check_derivatives(piece: BoundaryPiece) -> None:
    lo, hi = piece.interval
    t = np.linspace(lo, hi, 18)[1:-1]
    h = 1e-6 * max(hi - lo, 1e-3)
    for order in (1, 2):
        fd = (piece.func.value(t + h, order - 1) - piece.func.value(t - h, order - 1)) / (2 * h)
        exact = piece.func.value(t, order)
        scale = np.maximum(np.abs(exact), 1.0)
        if np.any(np.abs(fd - exact) > 1e-6 * scale):
            raise InconsistentDerivative(f"derivative of order {order} disagrees with finite differences")


def make_piecewise_domain(pieces: Sequence[BoundaryPiece], nu: float) -> DomainSpec:
    """Validate a closed chain of graph pieces and build its domain.

    Raises
    ------
    NotClosed
        If consecutive pieces (cyclically) do not meet within 1e-12.
    NotSimple
        If the sampled boundary crosses itself.
    CurvatureBoundViolated
        If ``max |E''|`` on some piece exceeds ``nu``.
    SlopeBoundViolated
        If ``|E'| > 2`` on some piece, which must then be split and
        re-parameterized over the other coordinate.
    """
    pieces = tuple(pieces)
    if not pieces:
        raise NotClosed("a boundary needs at least one piece")
    max_d2 = 0.0
    for i, piece in enumerate(pieces):
        if piece.start == piece.end:
            raise NotClosed(f"piece {i} has an empty parameter interval")
        _check_derivatives(piece)
        t = np.linspace(piece.start, piece.end, 4097)
        d1 = float(np.max(np.abs(piece.func.value(t, 1))))
        d2 = float(np.max(np.abs(piece.func.value(t, 2))))
        if not np.isfinite(d1) or d1 > MAX_GRAPH_SLOPE:
            raise SlopeBoundViolated(f"piece {i} has |E'| = {d1:.6g} > {MAX_GRAPH_SLOPE}; re-parameterize it")
        if d2 > nu:
            raise CurvatureBoundViolated(f"piece {i} has max |E''| = {d2:.6g} > nu = {nu:.6g}")
        max_d2 = max(max_d2, d2)
    for i, piece in enumerate(pieces):
        nxt = pieces[(i + 1) % len(pieces)]
        gap = np.linalg.norm(piece.points(piece.end) - nxt.points(nxt.start))
        if gap > CLOSURE_TOL:
            raise NotClosed(f"piece {i} ends {gap:.3g} away from the start of piece {(i + 1) % len(pieces)}")

    lengths = []
    for piece in pieces:
        t = np.linspace(piece.start, piece.end, 257)
        lengths.append(np.linalg.norm(np.diff(piece.points(t), axis=0), axis=1).sum())
    total = sum(lengths)
    chunks = []
    coarse = []
    for piece, length in zip(pieces, lengths):
        m = max(256, int(math.ceil(2 * MIN_POLYLINE_POINTS * length / total)))
        chunks.append(piece.points(np.linspace(piece.start, piece.end, m + 1))[:-1])
        coarse.append(piece.points(np.linspace(piece.start, piece.end, 129))[:-1])
    poly = np.concatenate(chunks + [chunks[0][:1]])
    _check_inside_unit_square(poly)
    cpoly = np.concatenate(coarse + [coarse[0][:1]])
    if _segments_intersect(cpoly, cpoly, skip_adjacent=True):
        raise NotSimple("boundary crosses itself")

    corners = []
    for i, piece in enumerate(pieces):
        nxt = pieces[(i + 1) % len(pieces)]
        t_out = piece.tangent(piece.end)
        t_in = nxt.tangent(nxt.start)
        angle = math.atan2(abs(t_out[0] * t_in[1] - t_out[1] * t_in[0]), float(np.dot(t_out, t_in)))
        jump = abs(float(piece.curvature(piece.end)) - float(nxt.curvature(nxt.start)))
        if angle > CORNER_ANGLE_TOL or jump > CORNER_CURVATURE_TOL:
            x = nxt.points(nxt.start)
            corners.append((float(x[0]), float(x[1])))
    bbox = (float(poly[:, 0].min()), float(poly[:, 1].min()), float(poly[:, 0].max()), float(poly[:, 1].max()))
    return DomainSpec(
        kind="piecewise",
        nu=nu,
        pieces=pieces,
        corners=tuple(corners),
        bbox=bbox,
        polyline=poly,
        measured={"max_E2": max_d2, "L": len(pieces)},
        _index=_SegmentIndex(poly),
    )


def contains(domain: DomainSpec, x) -> np.ndarray | bool:
    """Membership in the closed region; accepts one point or an ``(N, 2)`` array.

    Star domains use the exact polar predicate.  Piecewise domains use the
    winding number of the dense boundary polyline; points within the
    polyline's sagitta of the boundary count as inside.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    if domain.kind == "star":
        rc = domain.radius
        d = pts - np.asarray(rc.translate)
        r = np.hypot(d[:, 0], d[:, 1])
        inside = r <= rc.rho(np.arctan2(d[:, 1], d[:, 0])) + 1e-12
    else:
        wind, dist = domain._index.winding_and_distance(pts)
        tol = _sagitta(domain)
        inside = (wind != 0) | (dist <= tol)
    return bool(inside[0]) if single else inside


def contains_grid(domain: DomainSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Membership on the tensor grid ``x1 (rows) x x2 (columns)``.

    Uses the same winding rule as :func:`contains`, evaluated one ``x1`` line
    at a time from the sorted crossings of the boundary with that line.
    Points exactly on the boundary are not given special treatment.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if domain.kind == "star":
        rc = domain.radius
        d1 = x1[:, None] - rc.translate[0]
        d2 = x2[None, :] - rc.translate[1]
        return np.hypot(d1, d2) <= rc.rho(np.arctan2(d2, d1)) + 1e-12
    a = domain.polyline[:-1]
    b = domain.polyline[1:]
    out = np.zeros((len(x1), len(x2)), dtype=bool)
    for start in range(0, len(x1), 256):
        rows = x1[start : start + 256, None]
        up = (a[None, :, 0] <= rows) & (rows < b[None, :, 0])
        down = (b[None, :, 0] <= rows) & (rows < a[None, :, 0])
        span = b[:, 0] - a[:, 0]
        for r in range(len(rows)):
            hit = np.flatnonzero(up[r] | down[r])
            if hit.size == 0:
                continue
            frac = (rows[r, 0] - a[hit, 0]) / span[hit]
            cx = a[hit, 1] + frac * (b[hit, 1] - a[hit, 1])
            sign = np.where(up[r, hit], 1, -1)
            order = np.argsort(cx)
            cx, sign = cx[order], sign[order]
            suffix = np.concatenate([np.cumsum(sign[::-1])[::-1], [0]])
            idx = np.searchsorted(cx, x2, side="right")
            out[start + r] = suffix[idx] != 0
    return out


def _sagitta(domain: DomainSpec) -> float:
    step = float(np.max(np.linalg.norm(np.diff(domain.polyline, axis=0), axis=1)))
    return max(domain.nu * step**2 / 8.0, 0.0) + 1e-12


def tangent_slope(domain: DomainSpec, x) -> float:
    """Slope of the boundary tangent at ``x`` in the ``dx1/dx2`` convention.

    Returns ``inf`` where the tangent is horizontal (``x2`` locally a graph
    over ``x1`` with zero derivative).

    Raises
    ------
    CornerPoint
        If ``x`` is a corner of the boundary.
    NotOnBoundary
        If ``x`` is farther than 1e-9 from the boundary.
    """
    x = np.asarray(x, dtype=float)
    if domain.kind == "star":
        rc = domain.radius
        d = x - np.asarray(rc.translate)
        th = math.atan2(d[1], d[0])
        if abs(math.hypot(*d) - float(rc.rho(th))) > ON_BOUNDARY_TOL:
            raise NotOnBoundary(f"{tuple(x)} is not on the boundary")
        return float(_star_slope(rc, th)[0])
    if _is_corner_point(domain, x):
        raise CornerPoint(f"{tuple(x)} is a corner point")
    for piece in domain.pieces:
        lo, hi = piece.interval
        t = x[0] if piece.over == "x1" else x[1]
        v = x[1] if piece.over == "x1" else x[0]
        if lo - ON_BOUNDARY_TOL <= t <= hi + ON_BOUNDARY_TOL:
            tc = min(max(t, lo), hi)
            if abs(float(piece.func.value(tc)) - v) <= ON_BOUNDARY_TOL:
                return float(piece.slope(tc)[0])
    raise NotOnBoundary(f"{tuple(x)} is not on the boundary")


def corner_points(domain: DomainSpec) -> list[tuple[float, float]]:
    return list(domain.corners)


# --- convenience constructors ---------------------------------------------------


def disk(center: tuple[float, float], r: float, nu: float = 1.0) -> DomainSpec:
    return make_star_domain(RadiusCurve((r,), (), tuple(center), None, nu))


def rectangle(lo: tuple[float, float], hi: tuple[float, float]) -> DomainSpec:
    """Axis-aligned rectangle traversed counter-clockwise."""
    (a1, a2), (b1, b2) = lo, hi
    pieces = [
        BoundaryPiece("x1", a1, b1, Polynomial((a2,))),
        BoundaryPiece("x2", a2, b2, Polynomial((b1,))),
        BoundaryPiece("x1", b1, a1, Polynomial((b2,))),
        BoundaryPiece("x2", b2, a2, Polynomial((a1,))),
    ]
    return make_piecewise_domain(pieces, nu=0.0)


def square(lo: float, hi: float) -> DomainSpec:
    return rectangle((lo, lo), (hi, hi))


def rounded_square(lo: float, hi: float, bulge: float, nu: float = 1.0) -> DomainSpec:
    """Square whose four sides bow outward by ``bulge``; four corners remain."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    # E(t) = edge +/- bulge (1 - ((t - mid)/half)^2)
    q = bulge / half**2

    def side(edge, sign):
        return Polynomial((edge + sign * (bulge - q * mid**2), sign * 2 * q * mid, -sign * q))

    pieces = [
        BoundaryPiece("x1", lo, hi, side(lo, -1.0)),
        BoundaryPiece("x2", lo, hi, side(hi, 1.0)),
        BoundaryPiece("x1", hi, lo, side(hi, 1.0)),
        BoundaryPiece("x2", hi, lo, side(lo, -1.0)),
    ]
    return make_piecewise_domain(pieces, nu=nu)


def circle_pieces(center: tuple[float, float], r: float) -> list[BoundaryPiece]:
    """A circle as four graph arcs with ``|E'| <= 1``, counter-clockwise."""
    c1, c2 = center
    s = r / math.sqrt(2.0)
    return [
        BoundaryPiece("x2", c2 - s, c2 + s, CircularArc(c2, c1, r, 1.0)),
        BoundaryPiece("x1", c1 + s, c1 - s, CircularArc(c1, c2, r, 1.0)),
        BoundaryPiece("x2", c2 + s, c2 - s, CircularArc(c2, c1, r, -1.0)),
        BoundaryPiece("x1", c1 - s, c1 + s, CircularArc(c1, c2, r, -1.0)),
    ]


# --- serialization --------------------------------------------------------------


def domain_to_dict(domain: DomainSpec) -> dict:
    if domain.kind == "star":
        rc = domain.radius
        return {
            "kind": "star",
            "nu": rc.nu,
            "rho0": domain.measured["rho0"],
            "a": list(rc.a),
            "b": list(rc.b),
            "translate": list(rc.translate),
        }
    return {"kind": "piecewise", "nu": domain.nu, "pieces": [p.to_dict() for p in domain.pieces]}


def domain_from_dict(d: dict) -> DomainSpec:
    if d["kind"] == "star":
        rc = RadiusCurve(
            tuple(float(v) for v in d["a"]),
            tuple(float(v) for v in d.get("b", ())),
            tuple(float(v) for v in d.get("translate", (0.5, 0.5))),
            None if d.get("rho0") is None else float(d["rho0"]),
            float(d["nu"]),
        )
        return make_star_domain(rc)
    pieces = [BoundaryPiece.from_dict(p) for p in d["pieces"]]
    shift = d.get("translate")
    if shift is not None and any(shift):
        raise ValueError("translate is only supported for star domains")
    return make_piecewise_domain(pieces, float(d["nu"]))
