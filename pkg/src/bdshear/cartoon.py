"""Cartoon-like functions ``f0 + f1 * indicator(B)`` supported in a domain, and rasterization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import io
from .errors import C2BoundExceeded, DomainTouchesUnitBoundary, GridMismatch, NotNested
from .geometry import DomainSpec, contains, contains_grid

UNIT_MARGIN = 1e-4
NEST_MARGIN = 1e-4

# sup over the support of |g|, |g'| * radius and |g''| * radius^2 for g(s) = (1 - s^2)^4;
# g' vanishes at s^2 = 1/7 and g'' is extremal at s = 0.
BUMP_SUP = (1.0, 8.0 / math.sqrt(7.0) * (6.0 / 7.0) ** 3, 8.0)


def bump(t, center: float, radius: float, order: int = 0) -> np.ndarray:
    """``(1 - ((t - center)/radius)^2)^4`` and its first two derivatives, zero outside.

    An infinite ``radius`` gives the constant factor 1.
    """
    if math.isinf(radius):
        return np.full(np.shape(t), 1.0 if order == 0 else 0.0)
    s = (np.asarray(t, dtype=float) - center) / radius
    inside = np.abs(s) < 1.0
    q = np.where(inside, 1.0 - s * s, 0.0)
    if order == 0:
        return q**4
    if order == 1:
        return -8.0 * s * q**3 / radius
    if order == 2:
        return q**2 * (56.0 * s * s - 8.0) / radius**2 * inside
    raise ValueError("only derivatives up to order 2 are available")


@dataclass(frozen=True)
class BumpTerm:
    amplitude: float
    center: tuple[float, float]
    radius: tuple[float, float]

    def value(self, x1, x2, d1: int = 0, d2: int = 0):
        return (
            self.amplitude
            * bump(x1, self.center[0], self.radius[0], d1)
            * bump(x2, self.center[1], self.radius[1], d2)
        )

    def c2_bound(self) -> float:
        """Sum over ``|alpha| <= 2`` of the closed-form sup of ``|D^alpha term|``."""
        r1, r2 = self.radius
        g1 = [BUMP_SUP[k] / r1**k for k in range(3)]
        g2 = [BUMP_SUP[k] / r2**k for k in range(3)]
        orders = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        return abs(self.amplitude) * sum(g1[a] * g2[b] for a, b in orders)

    def support_box(self) -> tuple[float, float, float, float]:
        (c1, c2), (r1, r2) = self.center, self.radius
        return (c1 - r1, c2 - r2, c1 + r1, c2 + r2)

    def to_dict(self) -> dict:
        radius = [None if math.isinf(r) else r for r in self.radius]
        return {"amplitude": self.amplitude, "center": list(self.center), "radius": radius}

    @classmethod
    def from_dict(cls, d: dict) -> "BumpTerm":
        radius = tuple(math.inf if r is None else float(r) for r in d["radius"])
        return cls(float(d["amplitude"]), tuple(map(float, d["center"])), radius)


@dataclass(frozen=True)
class SmoothSpec:
    """A finite sum of separable quartic bumps."""

    terms: tuple[BumpTerm, ...] = ()

    def value(self, x1, x2, d1: int = 0, d2: int = 0):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        out = np.zeros(x1.shape)
        for term in self.terms:
            out += term.value(x1, x2, d1, d2)
        return out

    def grid_value(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Values on the tensor grid ``x1 x x2`` using separability."""
        out = np.zeros((len(x1), len(x2)))
        for t in self.terms:
            out += t.amplitude * np.outer(bump(x1, t.center[0], t.radius[0]), bump(x2, t.center[1], t.radius[1]))
        return out

    def c2_bound(self) -> float:
        return sum(t.c2_bound() for t in self.terms)

    def to_list(self) -> list:
        return [t.to_dict() for t in self.terms]

    @classmethod
    def from_list(cls, items) -> "SmoothSpec":
        return cls(tuple(BumpTerm.from_dict(d) for d in items))


@dataclass(frozen=True)
class CartoonFunction:
    """``f = (f0 + f1 * indicator(B)) * indicator(omega)`` with its membership certificate."""

    omega: DomainSpec
    B: DomainSpec | None
    f0: SmoothSpec
    f1: SmoothSpec
    certificate: dict = field(default_factory=dict, compare=False)

    def __call__(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        pts = np.stack([x1.ravel(), x2.ravel()], axis=1)
        val = self.f0.value(x1, x2)
        if self.B is not None:
            val = val + self.f1.value(x1, x2) * contains(self.B, pts).reshape(x1.shape)
        return val * contains(self.omega, pts).reshape(x1.shape)

    def to_dict(self) -> dict:
        from .geometry import domain_to_dict

        return {
            "omega": domain_to_dict(self.omega),
            "B": None if self.B is None else domain_to_dict(self.B),
            "f0": self.f0.to_list(),
            "f1": self.f1.to_list(),
        }


def _min_distance(points: np.ndarray, poly: np.ndarray) -> float:
    a, b = poly[:-1], poly[1:]
    d = b - a
    L2 = np.maximum(np.sum(d**2, axis=1), 1e-300)
    best = np.inf
    for start in range(0, len(points), 256):
        p = points[start : start + 256]
        rel = p[:, None, :] - a[None]
        t = np.clip(np.sum(rel * d[None], axis=2) / L2, 0.0, 1.0)
        diff = rel - t[..., None] * d[None]
        best = min(best, float(np.sqrt(np.min(np.sum(diff**2, axis=2)))))
    return best


def make_cartoon(
    omega: DomainSpec, B: DomainSpec | None, f0: SmoothSpec, f1: SmoothSpec
) -> CartoonFunction:
    """Validate and certify a cartoon function.

    Raises
    ------
    DomainTouchesUnitBoundary
        If ``omega`` comes within 1e-4 of the unit square's boundary.
    NotNested
        If the boundary of ``B`` is not inside ``omega`` with margin 1e-4, or a
        bump of ``f0`` has a support box outside the bounding box of ``omega``.
        Terms of ``f1`` only enter through ``f1 * indicator(B)`` and may have
        infinite radius.
    C2BoundExceeded
        If the certified C2 bound of ``f0`` or ``f1`` exceeds 1.
    """
    x0, y0, x1, y1 = omega.bbox
    unit_margin = min(x0, y0, 1.0 - x1, 1.0 - y1)
    if unit_margin < UNIT_MARGIN:
        raise DomainTouchesUnitBoundary(f"omega is {unit_margin:.3g} from the unit square boundary")
    nest_margin = None
    if B is not None:
        pts = B.polyline[:-1]
        if not np.all(contains(omega, pts)):
            raise NotNested("the boundary of B leaves omega")
        nest_margin = _min_distance(pts, omega.polyline)
        if nest_margin < NEST_MARGIN:
            raise NotNested(f"the boundary of B comes within {nest_margin:.3g} of the boundary of omega")
    if B is None and f1.terms:
        raise NotNested("f1 needs an inner set B")
    for term in f0.terms:
        a0, b0, a1, b1 = term.support_box()
        if a0 < x0 - 1e-12 or b0 < y0 - 1e-12 or a1 > x1 + 1e-12 or b1 > y1 + 1e-12:
            raise NotNested(f"bump support {term.support_box()} leaves the bounding box of omega")
    bounds = {"f0": f0.c2_bound(), "f1": f1.c2_bound()}
    certificate = {
        "omega": {"nu": omega.nu, "L": omega.L, "corners": len(omega.corners)},
        "B": None if B is None else {"nu": B.nu, "L": B.L, "corners": len(B.corners)},
        "c2_bound_f0": bounds["f0"],
        "c2_bound_f1": bounds["f1"],
        "unit_margin": unit_margin,
        "nest_margin": nest_margin,
        "c2_ok": bounds["f0"] <= 1.0 and bounds["f1"] <= 1.0,
        "nested_ok": True,
        "unit_ok": True,
    }
    for name, value in bounds.items():
        if value > 1.0:
            raise C2BoundExceeded(f"certified C2 bound of {name} is {value:.6g} > 1", measured=value)
    return CartoonFunction(omega, B, f0, f1, certificate)


def cartoon_from_dict(d: dict) -> CartoonFunction:
    from .geometry import domain_from_dict

    omega = domain_from_dict(d["omega"])
    B = None if d.get("B") is None else domain_from_dict(d["B"])
    return make_cartoon(omega, B, SmoothSpec.from_list(d.get("f0", [])), SmoothSpec.from_list(d.get("f1", [])))


@dataclass
class ImageGrid:
    """Cell averages on the ``n x n`` grid; sample ``(i, j)`` covers ``[i/n,(i+1)/n] x [j/n,(j+1)/n]``."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[0] != self.samples.shape[1]:
            raise GridMismatch(f"grid must be square, got shape {self.samples.shape}")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def norm(self) -> float:
        """Discrete L2 norm ``sqrt(h^2 sum f^2)``."""
        return float(np.linalg.norm(self.samples) / self.n)

    def inner(self, other: "ImageGrid") -> float:
        return float(np.vdot(self.samples, other.samples) / self.n**2)

    def save(self, path) -> None:
        io.write_grd1(path, self.samples)

    @classmethod
    def load(cls, path) -> "ImageGrid":
        return cls(io.read_grd1(path))


def sample_offsets(supersample: int) -> np.ndarray:
    """Fixed stratified offsets inside a unit cell."""
    return (np.arange(supersample) + 0.5) / supersample


def sample_coordinates(n: int, supersample: int) -> np.ndarray:
    return (np.arange(n)[:, None] + sample_offsets(supersample)[None, :]).ravel() / n


def cell_average(values: np.ndarray, n: int, supersample: int) -> np.ndarray:
    return values.reshape(n, supersample, n, supersample).mean(axis=(1, 3))


def rasterize(f: CartoonFunction, n: int, supersample: int = 4, parts: str = "all") -> ImageGrid:
    """Cell averages of ``f`` from ``supersample**2`` stratified points per cell.

    Parameters
    ----------
    parts : {"all", "smooth", "jump"}
        Rasterize ``f`` itself, only ``f0 * indicator(omega)``, or only
        ``f1 * indicator(B) * indicator(omega)``.
    """
    if n < 1 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    if supersample not in (1, 2, 4, 8, 16):
        raise ValueError("supersample must be one of 1, 2, 4, 8, 16")
    x = sample_coordinates(n, supersample)
    in_omega = contains_grid(f.omega, x, x)
    values = np.zeros((len(x), len(x)))
    if parts in ("all", "smooth") and f.f0.terms:
        values += f.f0.grid_value(x, x)
    if parts in ("all", "jump") and f.B is not None and f.f1.terms:
        values += f.f1.grid_value(x, x) * contains_grid(f.B, x, x)
    return ImageGrid(cell_average(values * in_omega, n, supersample))


def domain_coverage(domain: DomainSpec, n: int, supersample: int = 4) -> np.ndarray:
    """Cell-average of the indicator of ``domain``."""
    x = sample_coordinates(n, supersample)
    return cell_average(contains_grid(domain, x, x).astype(float), n, supersample)


def domain_cells(domain: DomainSpec, n: int, supersample: int = 4) -> np.ndarray:
    """Boolean mask of the cells that meet the closed domain."""
    mask = domain_coverage(domain, n, supersample) > 0
    # cells crossed by the boundary may contain no interior sample point
    pts, _ = domain.sample_boundary(0.25 / n)
    idx = np.clip(np.floor(pts * n).astype(np.int64), 0, n - 1)
    mask[idx[:, 0], idx[:, 1]] = True
    return mask
