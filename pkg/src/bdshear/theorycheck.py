"""Empirical checks of the coefficient-decay and counting estimates on computed coefficients.

Only the horizontal cone (``psi = psi1 (x) psi2``) is analyzed; the vertical
cone is covered by transposing test images.  All positions are in unit-square
coordinates.  Cubes are measured in generator units: pass ``unit = 1/extent``
(see :func:`cube_unit`) so that a cube at scale ``j`` matches the footprint of
the scale-``j`` atoms of a system.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import io
from .cartoon import CartoonFunction, rasterize
from .errors import CornerInCube, NoCorners
from .geometry import INF, DomainSpec, _star_points
from .system import Cone, ShearletSystem, Slice

SHALLOW_LIMIT = 1.5
STEEP_LIMIT = 3.0


def cube_unit(sys: ShearletSystem) -> float:
    """Length of one generator unit in unit-square coordinates."""
    return 1.0 / sys.extent


@dataclass(frozen=True, order=True)
class DyadicCube:
    """``([-1, 1]^2 + p) * 2^(-j/2) * unit``; neighbouring cubes overlap by half."""

    j: int
    p: tuple[int, int]
    unit: float = 1.0

    @property
    def half_side(self) -> float:
        return self.unit * 2.0 ** (-self.j / 2.0)

    @property
    def center(self) -> tuple[float, float]:
        h = self.half_side
        return (h * self.p[0], h * self.p[1])

    @property
    def box(self) -> tuple[float, float, float, float]:
        h = self.half_side
        return (h * (self.p[0] - 1), h * (self.p[1] - 1), h * (self.p[0] + 1), h * (self.p[1] + 1))

    @property
    def cube_id(self) -> str:
        return f"{self.j}:{self.p[0]},{self.p[1]}"

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x0, y0, x1, y1 = self.box
        return (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)


@dataclass
class BoundarySamples:
    points: np.ndarray
    slopes: np.ndarray
    corners: np.ndarray


def sample_boundaries(domains, spacing: float) -> BoundarySamples:
    """Dense samples of the union of the domains' boundaries."""
    pts, slopes, corners = [], [], []
    for d in domains:
        if d is None:
            continue
        p, s = d.sample_boundary(spacing)
        pts.append(p)
        slopes.append(s)
        corners.extend(d.corners)
    return BoundarySamples(
        np.concatenate(pts) if pts else np.zeros((0, 2)),
        np.concatenate(slopes) if slopes else np.zeros(0),
        np.array(corners, dtype=float).reshape(-1, 2),
    )


def _spacing(j: int, unit: float) -> float:
    return unit * 2.0 ** (-j / 2.0) / 64.0


def _refine_extremum(fun, a: float, b: float) -> float:
    res = minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": 1e-13})
    return float(res.x)


def extreme_points(domain: DomainSpec, samples: int = 4096) -> np.ndarray:
    """Boundary points where a coordinate is locally extremal (horizontal or vertical tangents).

    Uniform samples miss these points, and a cube that only touches the
    boundary tangentially meets it there.
    """
    out = []
    if domain.kind == "star":
        th = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        step = th[1]
        xy = _star_points(domain.radius, th)
        for axis in (0, 1):
            v = xy[:, axis]
            for i in range(samples):
                a, b, c = v[i - 1], v[i], v[(i + 1) % samples]
                for sign in (1.0, -1.0):
                    if sign * b <= sign * a and sign * b < sign * c:
                        t = _refine_extremum(
                            lambda x: sign * _star_points(domain.radius, np.array([x]))[0, axis],
                            th[i] - step, th[i] + step,
                        )
                        out.append(_star_points(domain.radius, np.array([t]))[0])
    else:
        for piece in domain.pieces:
            lo, hi = sorted(piece.interval)
            t = np.linspace(lo, hi, samples)
            e = piece.func.value(t)
            for i in range(1, samples - 1):
                for sign in (1.0, -1.0):
                    if sign * e[i] <= sign * e[i - 1] and sign * e[i] < sign * e[i + 1]:
                        x = _refine_extremum(lambda u: sign * float(piece.func.value(u)), t[i - 1], t[i + 1])
                        out.append(piece.points(np.array([x]))[0])
    return np.array(out, dtype=float).reshape(-1, 2)


def cubes_meeting_boundary(j: int, domains, unit: float = 1.0) -> list[DyadicCube]:
    """Cubes of scale ``j`` meeting the union of the domains' boundaries, sorted by ``p``.

    Dense samples find crossings; coordinate extrema of the boundary add the
    cubes it only touches.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    samples = sample_boundaries(domains, _spacing(j, unit))
    extremes = [extreme_points(d) for d in domains if d is not None]
    h = unit * 2.0 ** (-j / 2.0)
    u = np.concatenate([samples.points, *extremes]) / h
    found: set[tuple[int, int]] = set()
    for d0 in (-1, 0, 1):
        for d1 in (-1, 0, 1):
            p0 = np.rint(u[:, 0]) + d0
            p1 = np.rint(u[:, 1]) + d1
            # closed cubes; an extremum is located only to ~sqrt(eps) along its tangent
            ok = (np.abs(u[:, 0] - p0) <= 1.0 + 1e-7) & (np.abs(u[:, 1] - p1) <= 1.0 + 1e-7)
            found.update(zip(p0[ok].astype(int).tolist(), p1[ok].astype(int).tolist()))
    return [DyadicCube(j, p, unit) for p in sorted(found)]


# --- atoms meeting a cube and a curve ----------------------------------------------------


def _occupancy(points: np.ndarray, n: int) -> np.ndarray:
    """2D prefix sums of the indicator of pixels containing at least one point."""
    occ = np.zeros((n, n), dtype=np.int64)
    if len(points):
        idx = np.floor(points * n).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < n), axis=1)
        idx = idx[inside]
        occ[idx[:, 0], idx[:, 1]] = 1
    csum = np.zeros((n + 1, n + 1), dtype=np.int64)
    csum[1:, 1:] = np.cumsum(np.cumsum(occ, axis=0), axis=1)
    return csum


def _boxes_hit(csum: np.ndarray, boxes: np.ndarray, n: int) -> np.ndarray:
    r0 = np.clip(boxes[:, 0], 0, n)
    c0 = np.clip(boxes[:, 1], 0, n)
    r1 = np.clip(boxes[:, 2] + 1, 0, n)
    c1 = np.clip(boxes[:, 3] + 1, 0, n)
    total = csum[r1, c1] - csum[r0, c1] - csum[r1, c0] + csum[r0, c0]
    return (r1 > r0) & (c1 > c0) & (total > 0)


def _h_slices(sys: ShearletSystem, j: int) -> list[Slice]:
    return [sl for sl in sys.slices if sl.cone == Cone.H and sl.j == j]


def atoms_meeting_points(
    sys: ShearletSystem, j: int, points: np.ndarray, exclude: np.ndarray | None = None
) -> dict[int, np.ndarray]:
    """Per shear ``k``: flat positions of scale-``j`` horizontal-cone atoms whose support box holds a point.

    Atoms whose support box holds one of the ``exclude`` points are dropped.
    """
    csum = _occupancy(points, sys.n)
    cex = _occupancy(exclude, sys.n) if exclude is not None and len(exclude) else None
    out = {}
    for sl in _h_slices(sys, j):
        boxes = sys.slice_support_boxes(sl)
        hit = _boxes_hit(csum, boxes, sys.n)
        if cex is not None:
            hit &= ~_boxes_hit(cex, boxes, sys.n)
        out[sl.k] = sl.offset + np.flatnonzero(hit)
    return out


def lambda_jp(sys: ShearletSystem, cube: DyadicCube, domains) -> np.ndarray:
    """Flat positions of the scale-``cube.j`` atoms whose support meets the cube and a boundary.

    Use ``sys.indices[i]`` to turn a position into a ``ShearletIndex``.
    """
    samples = sample_boundaries(domains, _spacing(cube.j, cube.unit))
    pts = samples.points[cube.contains(samples.points)]
    per_k = atoms_meeting_points(sys, cube.j, pts)
    return np.sort(np.concatenate(list(per_k.values()))) if per_k else np.zeros(0, dtype=np.int64)


# --- coefficient decay envelopes ---------------------------------------------------------


def regime(s: float) -> str:
    """``steep`` for ``|s| > 3``, ``shallow`` for ``|s| <= 3/2``, ``overlap`` in between."""
    a = abs(s)
    if a > STEEP_LIMIT:
        return "steep"
    if a <= SHALLOW_LIMIT:
        return "shallow"
    return "overlap"


def envelope(j: int, k: int, s: float) -> float:
    """Predicted coefficient envelope for shear ``k`` at an edge of slope ``s`` (constants dropped)."""
    steep = 2.0 ** (-2.25 * j)
    if abs(s) > STEEP_LIMIT:
        return steep
    d = abs(k + 2.0 ** (j / 2.0) * s)
    aligned = 2.0 ** (-0.75 * j) / max(d, 1.0) ** 3 if d > 0 else 2.0 ** (-0.75 * j)
    if abs(s) <= SHALLOW_LIMIT:
        return aligned
    return min(steep, aligned)


def _representative(points: np.ndarray, slopes: np.ndarray, cube: DyadicCube) -> tuple[np.ndarray, float] | None:
    inside = cube.contains(points)
    if not np.any(inside):
        return None
    p, s = points[inside], slopes[inside]
    good = ~np.isnan(s)
    if not np.any(good):
        return None
    p, s = p[good], s[good]
    i = int(np.argmin(np.sum((p - np.asarray(cube.center)) ** 2, axis=1)))
    return p[i], float(s[i])


@dataclass
class EnvelopeRow:
    j: int
    k: int
    cube: str
    slope: float
    regime: str
    atoms: int
    max_coef: float
    envelope: float

    @property
    def ratio(self) -> float:
        return self.max_coef / self.envelope


@dataclass
class EnvelopeReport:
    rows: list[EnvelopeRow]
    skipped_corner_cubes: int
    constants: dict = field(default_factory=dict)
    stable: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": len(self.rows),
            "skipped_corner_cubes": self.skipped_corner_cubes,
            "constants": {r: {str(j): c for j, c in v.items()} for r, v in self.constants.items()},
            "stable": self.stable,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "k", "cube", "slope", "regime", "atoms", "max_coef", "envelope", "ratio"])
            for r in self.rows:
                w.writerow([r.j, r.k, r.cube, io._format_float(r.slope), r.regime, r.atoms,
                            io._format_float(r.max_coef), io._format_float(r.envelope), io._format_float(r.ratio)])


def _coefficients(f, sys: ShearletSystem, supersample: int = 4) -> np.ndarray:
    if isinstance(f, CartoonFunction):
        f = rasterize(f, sys.n, supersample)
    return sys.analyze_array(np.asarray(getattr(f, "samples", f), dtype=float))


def check_decay_envelopes(
    f,
    sys: ShearletSystem,
    domains,
    j_range,
    coefficients: np.ndarray | None = None,
    edge_domains=None,
) -> EnvelopeReport:
    """Compare horizontal-cone coefficients near smooth boundary pieces with the predicted envelopes.

    Cubes are taken at each scale in ``j_range`` along the boundaries of
    ``edge_domains`` (default: all ``domains``); cubes containing a corner are
    skipped and counted.  Only atoms whose support box meets no corner and no
    boundary point of another slope regime are used, so each atom sees one
    smooth edge piece of one slope class.  For each ``(j, k, cube)`` the
    largest coefficient of those atoms meeting the cube and the edge is
    compared with the envelope at the cube's representative slope.  The empirical constant of a regime at
    scale ``j`` is the largest ratio; it is flagged stable when it varies by
    less than a factor 4 across ``j_range``.
    """
    theta = _coefficients(f, sys) if coefficients is None else coefficients
    edges = domains if edge_domains is None else edge_domains
    unit = cube_unit(sys)
    rows: list[EnvelopeRow] = []
    skipped = 0
    corners = np.array([c for d in domains if d is not None for c in d.corners], dtype=float).reshape(-1, 2)
    for j in j_range:
        samples = sample_boundaries(edges, _spacing(j, unit))
        # boundary points of every domain, tagged by slope regime, to keep atoms within one regime
        every = sample_boundaries(domains, _spacing(j, unit))
        tags = np.array(["none" if np.isnan(s) else regime(s) for s in every.slopes])
        foreign = {name: np.concatenate([corners, every.points[tags != name]]) for name in ("steep", "overlap", "shallow")}
        for cube in cubes_meeting_boundary(j, edges, unit):
            try:
                _check_no_corner(cube, samples.corners)
            except CornerInCube:
                skipped += 1
                continue
            rep = _representative(samples.points, samples.slopes, cube)
            if rep is None:
                continue
            _, s = rep
            name = regime(s)
            pts = samples.points[cube.contains(samples.points)]
            for k, pos in atoms_meeting_points(sys, j, pts, foreign[name]).items():
                if len(pos) == 0:
                    continue
                rows.append(EnvelopeRow(j, k, cube.cube_id, s, name, len(pos),
                                        float(np.max(np.abs(theta[pos]))), envelope(j, k, s)))
    report = EnvelopeReport(rows, skipped)
    for name in ("steep", "overlap", "shallow"):
        per_j: dict[int, float] = {}
        for r in rows:
            if r.regime == name:
                per_j[r.j] = max(per_j.get(r.j, 0.0), r.ratio)
        if per_j:
            report.constants[name] = per_j
            vals = np.array(list(per_j.values()))
            report.stable[name] = bool(vals.min() > 0 and vals.max() / vals.min() < 4.0)
    return report


def _check_no_corner(cube: DyadicCube, corners: np.ndarray) -> None:
    if len(corners) and np.any(cube.contains(corners)):
        raise CornerInCube(f"cube {cube.cube_id} contains a corner point")


def max_coefficient_slope(report: EnvelopeReport, regimes=("steep",)) -> tuple[float, dict[int, float]]:
    """Least-squares slope of ``log2 max|coef|`` against ``j`` over rows in the given regimes."""
    per_j: dict[int, float] = {}
    for r in report.rows:
        if r.regime in regimes:
            per_j[r.j] = max(per_j.get(r.j, 0.0), r.max_coef)
    js = np.array(sorted(per_j))
    if len(js) < 2:
        raise ValueError("need at least two scales")
    vals = np.array([per_j[j] for j in js])
    return float(np.polyfit(js, np.log2(vals), 1)[0]), per_j


def cross_shear_exponent(report: EnvelopeReport, j: int, regimes=("shallow",)) -> tuple[float, np.ndarray, np.ndarray]:
    """Falloff exponent of the largest coefficient across shears, away from the aligned shear.

    For each row at scale ``j`` the shear offset is ``|k + 2^(j/2) s|``; the
    largest coefficient per integer offset ``>= 1`` (taken over cubes) is fitted
    as ``offset^-exponent``.
    """
    best: dict[int, float] = {}
    for r in report.rows:
        if r.j != j or r.regime not in regimes:
            continue
        d = int(round(abs(r.k + 2.0 ** (j / 2.0) * r.slope)))
        if d >= 1:
            best[d] = max(best.get(d, 0.0), r.max_coef)
    d = np.array(sorted(best), dtype=float)
    if len(d) < 3:
        raise ValueError("need at least three shear offsets")
    v = np.array([best[int(x)] for x in d])
    return float(-np.polyfit(np.log2(d), np.log2(v), 1)[0]), d, v


# --- intersection counts --------------------------------------------------------------------


@dataclass
class CountRow:
    j: int
    k: int
    cube: str
    n1: int
    n2: int
    n_both: int
    slope1: float
    slope2: float

    def ratios(self) -> dict:
        s = 2.0 ** (self.j / 2.0)
        out = {"n1_scale": self.n1 / s, "n2_scale": self.n2 / s}
        out["n1_shear"] = self.n1 / (abs(s * self.slope1 + self.k) + 1.0) if np.isfinite(self.slope1) else math.nan
        out["n2_shear"] = self.n2 / (abs(s * self.slope2 + self.k) + 1.0) if np.isfinite(self.slope2) else math.nan
        return out


def _curve_points(curve, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(curve, "points") and hasattr(curve, "slope"):
        lo, hi = curve.interval
        length = float(np.sum(np.linalg.norm(np.diff(curve.points(np.linspace(lo, hi, 257)), axis=0), axis=1)))
        t = np.linspace(lo, hi, max(16, int(math.ceil(length / spacing)) + 1))
        return curve.points(t), curve.slope(t)
    pts, slopes = curve
    return np.asarray(pts, dtype=float), np.asarray(slopes, dtype=float)


def count_intersections(sys: ShearletSystem, cube: DyadicCube, curve1, curve2) -> list[CountRow]:
    """Per shear: atoms meeting ``curve1``, ``curve2`` and both inside ``cube``.

    Curves are boundary pieces or ``(points, slopes)`` pairs.  The slope of a
    curve is taken at its sample nearest the cube centre.
    """
    spacing = _spacing(cube.j, cube.unit)
    slopes = []
    hits = []
    for curve in (curve1, curve2):
        pts, sl = _curve_points(curve, spacing)
        inside = cube.contains(pts)
        if not np.any(inside):
            raise ValueError(f"curve does not meet cube {cube.cube_id}")
        p, s = pts[inside], sl[inside]
        i = int(np.argmin(np.sum((p - np.asarray(cube.center)) ** 2, axis=1)))
        slopes.append(float(s[i]))
        hits.append(atoms_meeting_points(sys, cube.j, p))
    rows = []
    for k in sorted(hits[0]):
        a, b = hits[0][k], hits[1][k]
        rows.append(CountRow(cube.j, k, cube.cube_id, len(a), len(b), len(np.intersect1d(a, b)), slopes[0], slopes[1]))
    return rows


def corner_cube(j: int, corner, unit: float) -> DyadicCube:
    """The scale-``j`` cube whose centre is nearest to ``corner``."""
    h = unit * 2.0 ** (-j / 2.0)
    return DyadicCube(j, (int(round(corner[0] / h)), int(round(corner[1] / h))), unit)


def corner_pieces(domain: DomainSpec, corner) -> tuple:
    """The two boundary pieces of a piecewise domain meeting at ``corner``."""
    c = np.asarray(corner, dtype=float)
    found = []
    for piece in domain.pieces:
        lo, hi = piece.interval
        ends = piece.points(np.array([lo, hi]))
        if np.min(np.linalg.norm(ends - c, axis=1)) < 1e-9:
            found.append(piece)
    if len(found) != 2:
        raise ValueError(f"expected two pieces at corner {tuple(c)}, found {len(found)}")
    return tuple(found)


@dataclass
class CountReport:
    rows: list[CountRow]
    max_ratios: dict
    spread: dict

    def to_dict(self) -> dict:
        return {"rows": len(self.rows), "max_ratios": self.max_ratios, "spread": self.spread}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "k", "cube", "n1", "n2", "n_both", "slope1", "slope2",
                        "n1_scale", "n2_scale", "n1_shear", "n2_shear"])
            for r in self.rows:
                q = r.ratios()
                w.writerow([r.j, r.k, r.cube, r.n1, r.n2, r.n_both, io._format_float(r.slope1), io._format_float(r.slope2)]
                           + [io._format_float(q[x]) for x in ("n1_scale", "n2_scale", "n1_shear", "n2_shear")])


def corner_counts(sys: ShearletSystem, domain: DomainSpec, j_range) -> CountReport:
    """Intersection counts in the cube nearest each corner of ``domain``, across scales.

    ``max_ratios[name][j]`` is the largest ratio over shears and corners at
    scale ``j``; ``spread[name]`` is the max/min of those values over ``j``.
    """
    if not domain.corners:
        raise NoCorners("domain has no corner points")
    unit = cube_unit(sys)
    rows = []
    for corner in domain.corners:
        p1, p2 = corner_pieces(domain, corner)
        for j in j_range:
            rows.extend(count_intersections(sys, corner_cube(j, corner, unit), p1, p2))
    names = ("n1_scale", "n2_scale", "n1_shear", "n2_shear")
    max_ratios: dict = {name: {} for name in names}
    for r in rows:
        for name, v in r.ratios().items():
            if np.isfinite(v):
                max_ratios[name][r.j] = max(max_ratios[name].get(r.j, 0.0), v)
    spread = {}
    for name, per_j in max_ratios.items():
        vals = np.array(list(per_j.values()))
        spread[name] = float(vals.max() / vals.min()) if len(vals) and vals.min() > 0 else math.inf
    return CountReport(rows, max_ratios, spread)


# --- corner scaling ---------------------------------------------------------------------------


def l1_normalizers(sys: ShearletSystem) -> dict[int, float]:
    """Per scale: ``2^(3j/4)`` times the largest grid L1 norm of the scale's atoms.

    Dividing a coefficient by it rescales the atoms to unit L1 norm times
    ``2^(-3j/4)``, so ``|coef| / normalizer <= max|f| 2^(-3j/4)`` by Hölder.
    """
    h2 = 1.0 / sys.n**2
    out: dict[int, float] = {}
    for (j, k), filt in sys.filters.items():
        if j < 0:
            continue
        out[j] = max(out.get(j, 0.0), 2.0 ** (0.75 * j) * h2 * float(np.sum(np.abs(filt.values))))
    return out


@dataclass
class CornerScalingReport:
    eps_median: float
    per_corner_counts: dict
    per_corner_exponents: dict
    growth_exponent: float
    lambda_eps: dict
    eps_exponent: float
    holder_ok: bool
    holder_max: float

    def to_dict(self) -> dict:
        return {
            "eps_median": self.eps_median,
            "per_corner_counts": {str(c): {str(j): v for j, v in d.items()} for c, d in self.per_corner_counts.items()},
            "per_corner_exponents": {str(c): v for c, v in self.per_corner_exponents.items()},
            "growth_exponent": self.growth_exponent,
            "lambda_eps": {io._format_float(e): v for e, v in self.lambda_eps.items()},
            "eps_exponent": self.eps_exponent,
            "holder_ok": self.holder_ok,
            "holder_max": self.holder_max,
        }


def corner_scaling(
    f_corner: CartoonFunction,
    sys: ShearletSystem,
    eps_list,
    j_range=None,
    coefficients: np.ndarray | None = None,
) -> CornerScalingReport:
    """Growth of ``|Lambda_{j,p}(eps)|`` in ``j`` at corner cubes and of ``|Lambda(eps)|`` in ``1/eps``.

    Coefficients are L1-normalized with :func:`l1_normalizers`.  For each
    corner of ``B`` the cube nearest the corner at each scale is used;
    ``Lambda_{j,p}(eps)`` holds the atoms meeting the cube and a boundary with
    normalized magnitude above ``eps``, and only scales
    ``j <= (4/3) log2(1/eps)`` are counted.  The per-corner growth in ``j`` is
    measured at the median normalized magnitude over the corner-cube atoms.

    Raises
    ------
    NoCorners
        If ``B`` has no corner point.
    """
    B = f_corner.B
    if B is None or not B.corners:
        raise NoCorners("the inner set has no corner points")
    eps_arr = np.asarray(eps_list, dtype=float)
    if np.any(np.diff(eps_arr) >= 0):
        raise ValueError("eps_list must be decreasing")
    theta = _coefficients(f_corner, sys) if coefficients is None else coefficients
    js = list(range(2, sys.j_max + 1)) if j_range is None else list(j_range)
    norm = l1_normalizers(sys)
    domains = (B, f_corner.omega)
    unit = cube_unit(sys)

    f_grid = rasterize(f_corner, sys.n).samples if coefficients is None else None
    holder_max = 0.0
    if f_grid is not None:
        fmax = float(np.max(np.abs(f_grid)))
        for sl in sys.slices:
            if sl.cone == Cone.LOW:
                continue
            vals = np.abs(theta[sl.offset : sl.offset + sl.size]) / norm[sl.j]
            if fmax > 0 and len(vals):
                holder_max = max(holder_max, float(vals.max() / (fmax * 2.0 ** (-0.75 * sl.j))))
    holder_ok = holder_max <= 1.0 + 1e-12

    members: dict[tuple, dict[int, np.ndarray]] = {}
    for corner in B.corners:
        members[corner] = {}
        for j in js:
            pos = lambda_jp(sys, corner_cube(j, corner, unit), domains)
            members[corner][j] = np.abs(theta[pos]) / norm[j]
    pooled = np.concatenate([v for d in members.values() for v in d.values()])
    pooled = pooled[pooled > 0]
    eps_med = float(np.median(pooled)) if len(pooled) else 0.0

    counts, exponents = {}, {}
    for corner, per_j in members.items():
        c = {j: int(np.sum(v > eps_med)) for j, v in per_j.items()}
        counts[corner] = c
        good = [j for j in js if c[j] > 0]
        exponents[corner] = (
            float(np.polyfit(good, np.log2([c[j] for j in good]), 1)[0]) if len(good) >= 2 else math.nan
        )
    finite = [v for v in exponents.values() if np.isfinite(v)]
    growth = float(np.mean(finite)) if finite else math.nan

    lam = {}
    for eps in eps_arr:
        cap = (4.0 / 3.0) * math.log2(1.0 / eps) if eps < 1 else 0.0
        total = 0
        for per_j in members.values():
            total += sum(int(np.sum(v > eps)) for j, v in per_j.items() if j <= cap)
        lam[float(eps)] = total
    pos_eps = [e for e in eps_arr if lam[float(e)] > 0]
    eps_exp = (
        float(np.polyfit(np.log2(1.0 / np.array(pos_eps)), np.log2([lam[float(e)] for e in pos_eps]), 1)[0])
        if len(pos_eps) >= 2
        else math.nan
    )
    return CornerScalingReport(eps_med, counts, exponents, growth, lam, eps_exp, holder_ok, holder_max)
