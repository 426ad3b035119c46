"""Independent reference implementations used to freeze expected values.

Nothing here calls the package's transform code: atoms are evaluated from the
1D generator samples with their own index arithmetic, Fourier transforms are
dense DFTs of zero-padded samples, and geometric counts are brute force.
"""
from __future__ import annotations

import math

import numpy as np


def atom_on_grid(gen, n: int, extent: float, c: float, ppu: float, cone: int, j: int, k: int, m) -> np.ndarray:
    """Pixel-centre samples of one atom; translations snapped to the pixel lattice.

    ``cone`` is 0 for the low-pass, 1 for the horizontal and 2 for the vertical cone.
    """
    x = (np.arange(n) + 0.5) * extent / n
    a, b = np.meshgrid(x, x, indexing="ij")
    if cone == 2:
        a, b = b, a
        m = (m[1], m[0])
    if cone == 0:
        t1, t2 = c * m[0], c * m[1]
    else:
        t1 = c * (m[0] - k * m[1]) / 2.0**j
        t2 = c * m[1] / 2.0 ** (j / 2.0)
    t1, t2 = round(t1 * ppu) / ppu, round(t2 * ppu) / ppu
    y1, y2 = a - t1, b - t2
    if cone == 0:
        return extent * gen.phi1(y1) * gen.phi1(y2)
    s = 2.0 ** (j / 2.0)
    return extent * 2.0 ** (0.75 * j) * gen.psi1(2.0**j * y1 + k * s * y2) * gen.psi2(s * y2)


def dense_analysis_matrix(sys) -> np.ndarray:
    """Rows are atoms divided by ``n^2``, so ``T @ f.ravel()`` are the L2 inner products."""
    idx = sys.indices
    rows = []
    for i in range(sys.size):
        lam = idx[i]
        rows.append(atom_on_grid(sys.gen, sys.n, sys.extent, sys.c, sys.pixels_per_unit,
                                 int(lam.cone), lam.j, lam.k, lam.m).ravel())
    return np.array(rows) / sys.n**2


def least_squares_dual(T: np.ndarray, theta: np.ndarray, n: int) -> np.ndarray:
    """Minimizer of ``||T f - theta||`` over grid functions (the canonical dual reconstruction)."""
    sol, *_ = np.linalg.lstsq(T, theta, rcond=None)
    return sol.reshape(n, n)


def dft_magnitude(values: np.ndarray, step: float, xi: np.ndarray, pad: int = 64) -> np.ndarray:
    """``|int f(x) exp(-i x xi) dx|`` from a zero-padded FFT, linearly interpolated at ``xi``."""
    size = pad * len(values)
    spec = np.abs(np.fft.rfft(values, size)) * step
    freqs = 2 * np.pi * np.fft.rfftfreq(size, d=step)
    return np.interp(xi, freqs, spec)


def upper_envelope_slope(xi: np.ndarray, mag: np.ndarray) -> float:
    """Negative log-log slope of half-octave bin maxima."""
    lx = np.log2(xi)
    pts = []
    edge = lx.min()
    while edge < lx.max() - 1e-12:
        sel = (lx >= edge) & (lx <= edge + 0.5)
        if np.any(sel):
            i = np.argmax(mag[sel])
            pts.append((lx[sel][i], math.log2(mag[sel][i])))
        edge += 0.5
    x, y = np.array(pts).T
    return float(-np.polyfit(x, y, 1)[0])


def box_meets_circle(box, center, radius) -> bool:
    """Whether the closed box meets the circle (not the disk)."""
    x0, y0, x1, y1 = box
    cx, cy = center
    nx, ny = min(max(cx, x0), x1), min(max(cy, y0), y1)
    nearest = math.hypot(nx - cx, ny - cy)
    farthest = max(math.hypot(x - cx, y - cy) for x in (x0, x1) for y in (y0, y1))
    return nearest <= radius <= farthest


def cubes_meeting_circle(j: int, center, radius, reach: int = 4) -> list[tuple[int, int]]:
    h = 2.0 ** (-j / 2.0)
    out = []
    for p0 in range(-reach, reach + 1):
        for p1 in range(-reach, reach + 1):
            box = (h * (p0 - 1), h * (p1 - 1), h * (p0 + 1), h * (p1 + 1))
            if box_meets_circle(box, center, radius):
                out.append((p0, p1))
    return out


def brute_force_hit(sys, j: int, points: np.ndarray) -> set:
    """Positions of horizontal-cone scale-``j`` atoms with a point inside the atom's sample support box."""
    hits = set()
    px = np.floor(points * sys.n).astype(int)
    for sl in sys.slices:
        if int(sl.cone) != 1 or sl.j != j:
            continue
        boxes = sys.slice_support_boxes(sl)
        for i, (r0, c0, r1, c1) in enumerate(boxes):
            if np.any((px[:, 0] >= r0) & (px[:, 0] <= r1) & (px[:, 1] >= c0) & (px[:, 1] <= c1)):
                hits.add(sl.offset + i)
    return hits


def direct_dft_magnitude(values: np.ndarray, step: float, xi: np.ndarray) -> np.ndarray:
    """``|sum_k f(x_k) exp(-i xi x_k) step|`` evaluated term by term at each ``xi``."""
    x = np.arange(len(values)) * step
    return np.abs(np.exp(-1j * np.outer(xi, x)) @ values) * step
