"""Cone-adapted shearlet system sampled on an ``n x n`` grid.

Atoms are direct samples of the continuum atoms at cell centers.  The unit
square is identified with ``extent`` generator units, so the physical atom is
``extent * 2^(3j/4) psi(S_k A_j extent x - c m)``.  Translations are snapped to
the nearest pixel, which makes every ``(cone, j, k)`` slice a subsampled
cross-correlation with one cached filter; vertical-cone slices reuse the
horizontal filter on the transposed image.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, IndexNotInSystem
from .generators import GeneratorSet

SUPPORT_THRESHOLD = 1e-8


class Cone(IntEnum):
    LOW = 0
    H = 1
    V = 2


@dataclass(frozen=True, order=True)
class ShearletIndex:
    """``(cone, j, k, m)``; ``j`` and ``k`` are 0 for the LOW band."""

    cone: Cone
    j: int
    k: int
    m: tuple[int, int]

    def __str__(self) -> str:
        if self.cone == Cone.LOW:
            return f"LOW m={self.m}"
        return f"{self.cone.name} j={self.j} k={self.k} m={self.m}"


def shear_bound(j: int) -> int:
    """``ceil(2^(j/2))``, computed exactly for integer ``j``."""
    if j % 2 == 0:
        return 2 ** (j // 2)
    return math.isqrt(2**j - 1) + 1


@dataclass
class BaseFilter:
    """Samples of the ``m = 0`` atom of one ``(j, k)`` pair (or the LOW band).

    ``values[t]`` is the atom at pixel ``origin + t``; ``box`` is the bounding
    box (relative to ``origin``) of samples above ``SUPPORT_THRESHOLD * max``.
    """

    j: int
    k: int
    origin: tuple[int, int]
    values: np.ndarray
    box: tuple[int, int, int, int]


@dataclass
class Slice:
    """Coefficient layout of one ``(cone, j, k)`` slice.

    Coefficient ``[a, b]`` of the block uses pixel lag ``(lag1[a], lag2[b])``
    between the image and the base filter, and has translation
    ``(s1[a] + k * s2[b], s2[b])`` for the H cone, the swap of that for the V
    cone, and ``(s1[a], s2[b])`` for the LOW band.
    """

    cone: Cone
    j: int
    k: int
    s1: np.ndarray
    s2: np.ndarray
    lag1: np.ndarray
    lag2: np.ndarray
    offset: int
    filter_key: tuple[int, int]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.s1), len(self.s2))

    @property
    def size(self) -> int:
        return len(self.s1) * len(self.s2)

    def translations(self) -> tuple[np.ndarray, np.ndarray]:
        a, b = np.meshgrid(self.s1, self.s2, indexing="ij")
        if self.cone == Cone.LOW:
            return a.ravel(), b.ravel()
        m1, m2 = (a + self.k * b).ravel(), b.ravel()
        if self.cone == Cone.H:
            return m1, m2
        return m2, m1

    def locate(self, m: tuple[int, int]) -> tuple[int, int] | None:
        """Block position of translation ``m``, or None if it is not enumerated."""
        if self.cone == Cone.V:
            m = (m[1], m[0])
        s2 = m[1]
        s1 = m[0] if self.cone == Cone.LOW else m[0] - self.k * m[1]
        a = np.searchsorted(self.s1, s1)
        b = np.searchsorted(self.s2, s2)
        if a < len(self.s1) and b < len(self.s2) and self.s1[a] == s1 and self.s2[b] == s2:
            return int(a), int(b)
        return None


class IndexSet:
    """Struct-of-arrays view of every enumerated index, in slice order."""

    def __init__(self, slices: list[Slice]):
        self.slices = slices
        parts = {name: [] for name in ("cone", "j", "k", "m1", "m2")}
        for sl in slices:
            m1, m2 = sl.translations()
            parts["cone"].append(np.full(sl.size, int(sl.cone), dtype=np.int8))
            parts["j"].append(np.full(sl.size, sl.j, dtype=np.int16))
            parts["k"].append(np.full(sl.size, sl.k, dtype=np.int32))
            parts["m1"].append(m1.astype(np.int32))
            parts["m2"].append(m2.astype(np.int32))
        for name, arrs in parts.items():
            setattr(self, name, np.concatenate(arrs) if arrs else np.zeros(0, dtype=np.int32))
        self._lex = None

    def __len__(self) -> int:
        return len(self.cone)

    def __getitem__(self, i: int) -> ShearletIndex:
        return ShearletIndex(Cone(int(self.cone[i])), int(self.j[i]), int(self.k[i]), (int(self.m1[i]), int(self.m2[i])))

    def __iter__(self) -> Iterator[ShearletIndex]:
        for i in range(len(self)):
            yield self[i]

    def lexicographic_order(self) -> np.ndarray:
        """Permutation sorting entries by ``(cone, j, k, m1, m2)``."""
        if self._lex is None:
            self._lex = np.lexsort((self.m2, self.m1, self.k, self.j, self.cone))
        return self._lex


def default_extent(n: int, j_max: int) -> float:
    """Image side in generator units putting the finest scale at two samples per unit."""
    return n / 2.0 ** (j_max + 1)


class ShearletSystem:
    """Digital cone-adapted shearlet system ``SH(phi, psi, psi~; c)``.

    Parameters
    ----------
    gen : GeneratorSet
        Separable generators.
    n : int
        Grid side, a power of two.
    j_max : int
        Finest scale.
    c : float
        Translation sampling constant.
    extent : float, optional
        Side of the unit square measured in generator units.  Defaults to
        ``n / 2**(j_max + 1)``.
    workers : int, optional
        Thread cap passed to the FFT backend.
    cache_bytes : int
        Memory budget for cached filter spectra.
    """

    def __init__(
        self,
        gen: GeneratorSet,
        n: int,
        j_max: int,
        c: float = 1.0,
        extent: float | None = None,
        workers: int | None = None,
        cache_bytes: int = 1_500_000_000,
    ):
        if n < 2 or n & (n - 1):
            raise ValueError(f"n must be a power of two, got {n}")
        if c <= 0 or j_max < 0:
            raise ValueError("c must be positive and j_max non-negative")
        self.gen = gen
        self.n = n
        self.j_max = j_max
        self.c = float(c)
        self.extent = float(default_extent(n, j_max) if extent is None else extent)
        self.workers = workers
        self.cache_bytes = cache_bytes
        self.filters: dict[tuple[int, int], BaseFilter] = {}
        self.slices: list[Slice] = []
        self._spectra: dict[tuple[int, int], np.ndarray] = {}
        self._spectra_bytes = 0
        self._build()
        self.indices = IndexSet(self.slices)
        self.size = len(self.indices)

    # -- construction ----------------------------------------------------------

    @property
    def pixels_per_unit(self) -> float:
        return self.n / self.extent

    def params(self) -> dict:
        return {
            "n": self.n,
            "j_max": self.j_max,
            "c": self.c,
            "extent": self.extent,
            "m_flat": list(self.gen.m_flat),
            "r": self.gen.r,
        }

    def key(self) -> tuple:
        return (self.n, self.j_max, self.c, self.extent, self.gen.m_flat, self.gen.r)

    def _cell_coordinates(self, lo: float, hi: float) -> np.ndarray:
        """Pixel indices whose centers (in generator units) fall in ``[lo, hi]``."""
        ppu = self.pixels_per_unit
        first = math.ceil(lo * ppu - 0.5 - 1e-9)
        last = math.floor(hi * ppu - 0.5 + 1e-9)
        return np.arange(first, last + 1)

    def _make_filter(self, j: int, k: int) -> BaseFilter:
        g = self.gen
        e = self.extent
        if j < 0:
            (a, b) = g.phi1.support
            b1 = self._cell_coordinates(a, b)
            y1 = (b1 + 0.5) / self.pixels_per_unit
            f1 = g.phi1(y1)
            values = e * np.outer(f1, f1)
            origin = (int(b1[0]), int(b1[0]))
        else:
            (a1, b1_), (a2, b2) = g.psi1.support, g.psi2.support
            s = 2.0 ** (j / 2.0)
            y2_lo, y2_hi = a2 / s, b2 / s
            corners = [(u1 - k * u2) / 2.0**j for u1 in (a1, b1_) for u2 in (a2, b2)]
            c1 = self._cell_coordinates(min(corners), max(corners))
            c2 = self._cell_coordinates(y2_lo, y2_hi)
            Y1 = (c1 + 0.5) / self.pixels_per_unit
            Y2 = (c2 + 0.5) / self.pixels_per_unit
            u1 = 2.0**j * Y1[:, None] + k * s * Y2[None, :]
            values = e * 2.0 ** (0.75 * j) * g.psi1(u1) * g.psi2(s * Y2)[None, :]
            origin = (int(c1[0]), int(c2[0]))
        big = np.abs(values) > SUPPORT_THRESHOLD * np.abs(values).max()
        r = np.flatnonzero(big.any(axis=1))
        cidx = np.flatnonzero(big.any(axis=0))
        box = (int(r[0]), int(cidx[0]), int(r[-1]), int(cidx[-1]))
        return BaseFilter(j, k, origin, values, box)

    def _lattice(self, step: float, origin: int, first: int, last: int) -> tuple[np.ndarray, np.ndarray]:
        """Translation indices whose snapped support box meets the grid, and their lags.

        The support box covers pixels ``origin + first .. origin + last`` of the
        unshifted filter.
        """
        n = self.n
        lo = -(origin + last)
        hi = n - 1 - (origin + first)
        cand = np.arange(math.floor(lo / step) - 1, math.ceil(hi / step) + 2)
        shift = np.rint(cand * step).astype(np.int64)
        ok = (shift >= lo) & (shift <= hi)
        return cand[ok], shift[ok] + origin

    def _build(self) -> None:
        ppu, c = self.pixels_per_unit, self.c
        offset = 0
        low = self._make_filter(-1, 0)
        self.filters[(-1, 0)] = low
        s1, l1 = self._lattice(c * ppu, low.origin[0], low.box[0], low.box[2])
        s2, l2 = self._lattice(c * ppu, low.origin[1], low.box[1], low.box[3])
        self.slices.append(Slice(Cone.LOW, 0, 0, s1, s2, l1, l2, offset, (-1, 0)))
        offset += len(s1) * len(s2)
        for j in range(self.j_max + 1):
            for k in range(-shear_bound(j), shear_bound(j) + 1):
                self.filters[(j, k)] = self._make_filter(j, k)
        for cone in (Cone.H, Cone.V):
            for j in range(self.j_max + 1):
                for k in range(-shear_bound(j), shear_bound(j) + 1):
                    f = self.filters[(j, k)]
                    s1, l1 = self._lattice(c * ppu / 2.0**j, f.origin[0], f.box[0], f.box[2])
                    s2, l2 = self._lattice(c * ppu / 2.0 ** (j / 2.0), f.origin[1], f.box[1], f.box[3])
                    self.slices.append(Slice(cone, j, k, s1, s2, l1, l2, offset, (j, k)))
                    offset += len(s1) * len(s2)

    # -- FFT machinery ---------------------------------------------------------
    #
    # Slices of one scale share an FFT shape.  When the x1 lattice step is an
    # integer D, the correlation is only needed on rows r0 + D i, so the
    # product spectrum is folded D times along axis 0 and inverted at 1/D of
    # the size; synthesis tiles the small spectrum back.  The cached filter
    # spectrum carries the phase of r0 so both directions use it directly.

    def _group_key(self, sl: Slice) -> int:
        return -1 if sl.cone == Cone.LOW else sl.j

    def _row_step(self, group: int) -> int:
        step = self.c * self.pixels_per_unit / (2.0**group if group >= 0 else 1.0)
        return int(round(step)) if abs(step - round(step)) < 1e-12 and round(step) >= 2 else 1

    def _plan(self) -> dict[int, tuple[tuple[int, int], int, list[Slice]]]:
        if getattr(self, "_plan_cache", None) is not None:
            return self._plan_cache
        members: dict[int, list[Slice]] = {}
        for sl in self.slices:
            members.setdefault(self._group_key(sl), []).append(sl)
        plan = {}
        for key, group in members.items():
            P1 = max(self.filters[sl.filter_key].values.shape[0] for sl in group)
            P2 = max(self.filters[sl.filter_key].values.shape[1] for sl in group)
            D = self._row_step(key)
            M1 = D * sfft.next_fast_len(-(-(self.n + P1 - 1) // D))
            M2 = sfft.next_fast_len(self.n + P2 - 1, real=True)
            if D > 1 and any(np.any((sl.lag1 - sl.lag1[0]) % D) for sl in group):
                D = 1
            plan[key] = ((M1, M2), D, group)
        self._plan_cache = plan
        return plan

    def fft_shape(self, sl: Slice) -> tuple[int, int]:
        return self._plan()[self._group_key(sl)][0]

    def _spectrum(self, sl: Slice) -> np.ndarray:
        """Filter spectrum times the conjugate phase of the slice's row offset."""
        shape, D, _ = self._plan()[self._group_key(sl)]
        cache_key = (sl.filter_key, shape)
        spec = self._spectra.get(cache_key)
        if spec is not None:
            return spec
        spec = sfft.rfft2(self.filters[sl.filter_key].values, shape, workers=self.workers)
        if D > 1:
            r0 = int(sl.lag1[0]) % shape[0]
            phase = np.exp(-2j * np.pi * np.arange(shape[0]) * r0 / shape[0])
            spec *= phase[:, None]
        if self._spectra_bytes + spec.nbytes <= self.cache_bytes:
            self._spectra[cache_key] = spec
            self._spectra_bytes += spec.nbytes
        return spec

    def _check_grid(self, samples: np.ndarray) -> None:
        if samples.shape != (self.n, self.n):
            raise GridMismatch(f"grid of shape {samples.shape} does not match system size {self.n}")

    def _rows(self, sl: Slice, shape, D: int) -> np.ndarray:
        if D == 1:
            return sl.lag1 % shape[0]
        return ((sl.lag1 - sl.lag1[0]) // D + 0) % (shape[0] // D)

    def _correlate(self, conj_image: np.ndarray, sl: Slice, shape, D: int) -> np.ndarray:
        """Correlation of the image with the slice filter at the slice lags."""
        B = self._spectrum(sl)
        R = shape[0] // D
        if D == 1:
            corr = sfft.irfft2(np.conj(conj_image * B), shape, workers=self.workers)
        else:
            half = B.shape[1]
            folded = np.einsum("lrk,lrk->rk", conj_image.reshape(D, R, half), B.reshape(D, R, half))
            corr = sfft.irfft2(np.conj(folded), (R, shape[1]), workers=self.workers) / D
        return corr[np.ix_(self._rows(sl, shape, D), sl.lag2 % shape[1])]

    def _accumulate(self, acc: np.ndarray, block: np.ndarray, sl: Slice, shape, D: int) -> None:
        B = self._spectrum(sl)
        R = shape[0] // D
        Z = np.zeros((R, shape[1]))
        Z[np.ix_(self._rows(sl, shape, D), sl.lag2 % shape[1])] = block
        small = sfft.rfft2(Z, workers=self.workers)
        if D == 1:
            acc += small * B
        else:
            half = B.shape[1]
            acc.reshape(D, R, half)[...] += B.reshape(D, R, half) * small[None]

    def _image_spectra(self, samples: np.ndarray, shape, group: list[Slice]) -> dict:
        """Conjugated spectra of the zero-padded image (and its transpose for the V cone)."""
        out = {}
        for cone in {sl.cone for sl in group}:
            src = samples.T if cone == Cone.V else samples
            # transform the n data rows first, then the padded columns
            rows = sfft.rfft(src, shape[1], axis=1, workers=self.workers)
            out[cone] = np.conj(sfft.fft(rows, shape[0], axis=0, workers=self.workers))
        return out

    def _finish(self, out: np.ndarray, acc: dict, shape) -> None:
        n = self.n
        for cone, spec in acc.items():
            cols = sfft.ifft(spec, axis=0, workers=self.workers)[:n]
            img = sfft.irfft(cols, shape[1], axis=1, workers=self.workers)[:, :n]
            out += img.T if cone == Cone.V else img

    def analyze_array(self, samples: np.ndarray) -> np.ndarray:
        """Flat coefficient vector ``h^2 sum f * atom`` in slice order."""
        samples = np.asarray(samples, dtype=float)
        self._check_grid(samples)
        out = np.empty(self.size)
        h2 = 1.0 / self.n**2
        for shape, D, group in self._plan().values():
            spectra = self._image_spectra(samples, shape, group)
            for sl in group:
                block = self._correlate(spectra[sl.cone], sl, shape, D)
                out[sl.offset : sl.offset + sl.size] = h2 * block.ravel()
        return out

    def synthesize_array(self, values: np.ndarray) -> np.ndarray:
        """``sum_lambda values[lambda] * atom_lambda`` on the grid."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.size,):
            raise GridMismatch(f"coefficient vector of length {values.shape} does not match system size {self.size}")
        out = np.zeros((self.n, self.n))
        for shape, D, group in self._plan().values():
            acc = {}
            for sl in group:
                block = values[sl.offset : sl.offset + sl.size].reshape(sl.shape)
                if not np.any(block):
                    continue
                if sl.cone not in acc:
                    acc[sl.cone] = np.zeros((shape[0], shape[1] // 2 + 1), dtype=complex)
                self._accumulate(acc[sl.cone], block, sl, shape, D)
            self._finish(out, acc, shape)
        return out

    def frame_apply_array(self, samples: np.ndarray) -> np.ndarray:
        """``S f = synthesize(analyze(f))`` fused slice by slice."""
        samples = np.asarray(samples, dtype=float)
        self._check_grid(samples)
        out = np.zeros((self.n, self.n))
        h2 = 1.0 / self.n**2
        for shape, D, group in self._plan().values():
            spectra = self._image_spectra(samples, shape, group)
            acc = {cone: np.zeros((shape[0], shape[1] // 2 + 1), dtype=complex) for cone in spectra}
            for sl in group:
                block = h2 * self._correlate(spectra[sl.cone], sl, shape, D)
                self._accumulate(acc[sl.cone], block, sl, shape, D)
            self._finish(out, acc, shape)
        return out

    # -- index helpers -----------------------------------------------------------

    def slice_of(self, cone: Cone, j: int = 0, k: int = 0) -> Slice:
        for sl in self.slices:
            if sl.cone == cone and (cone == Cone.LOW or (sl.j == j and sl.k == k)):
                return sl
        raise IndexNotInSystem(f"no slice ({Cone(cone).name}, {j}, {k})")

    def position(self, lam: ShearletIndex) -> int:
        """Flat position of ``lam`` in coefficient vectors."""
        try:
            sl = self.slice_of(lam.cone, lam.j, lam.k)
        except IndexNotInSystem:
            raise IndexNotInSystem(f"{lam} is not in the system") from None
        loc = sl.locate(lam.m)
        if loc is None:
            raise IndexNotInSystem(f"{lam} is not in the system")
        return sl.offset + loc[0] * sl.shape[1] + loc[1]

    def pixel_shift(self, lam: ShearletIndex) -> tuple[Slice, int, int]:
        """Slice and pixel lag ``(lag1, lag2)`` of an index (H-cone frame for V atoms)."""
        sl = self.slices[self._slice_number(lam)]
        a, b = sl.locate(lam.m)
        return sl, int(sl.lag1[a]), int(sl.lag2[b])

    def _slice_number(self, lam: ShearletIndex) -> int:
        for i, sl in enumerate(self.slices):
            if sl.cone == lam.cone and (lam.cone == Cone.LOW or (sl.j == lam.j and sl.k == lam.k)):
                if sl.locate(lam.m) is None:
                    break
                return i
        raise IndexNotInSystem(f"{lam} is not in the system")

    def support_box(self, lam: ShearletIndex) -> tuple[int, int, int, int]:
        """Pixel bounding box ``(r0, c0, r1, c1)`` of the atom's significant samples, unclipped."""
        sl, q1, q2 = self.pixel_shift(lam)
        b = self.filters[sl.filter_key].box
        box = (q1 + b[0], q2 + b[1], q1 + b[2], q2 + b[3])
        if sl.cone == Cone.V:
            box = (box[1], box[0], box[3], box[2])
        return box

    def slice_support_boxes(self, sl: Slice) -> np.ndarray:
        """Support boxes of every atom of a slice, shape ``(size, 4)``, block order."""
        b = self.filters[sl.filter_key].box
        q1, q2 = np.meshgrid(sl.lag1, sl.lag2, indexing="ij")
        q1, q2 = q1.ravel(), q2.ravel()
        boxes = np.stack([q1 + b[0], q2 + b[1], q1 + b[2], q2 + b[3]], axis=1)
        if sl.cone == Cone.V:
            boxes = boxes[:, [1, 0, 3, 2]]
        return boxes


def enumerate_indices(c: float, j_max: int, n: int, gen: GeneratorSet, extent: float | None = None) -> IndexSet:
    """Every index of the digital system, in slice order."""
    return ShearletSystem(gen, n, j_max, c, extent, cache_bytes=0).indices


def sample_atom(sys: ShearletSystem, lam: ShearletIndex) -> np.ndarray:
    """Grid samples of one atom (zero outside its footprint)."""
    sl, q1, q2 = sys.pixel_shift(lam)
    base = sys.filters[sl.filter_key].values
    n = sys.n
    out = np.zeros((n, n))
    r0, c0 = max(q1, 0), max(q2, 0)
    r1, c1 = min(q1 + base.shape[0], n), min(q2 + base.shape[1], n)
    if r0 < r1 and c0 < c1:
        out[r0:r1, c0:c1] = base[r0 - q1 : r1 - q1, c0 - q2 : c1 - q2]
    return out.T if sl.cone == Cone.V else out


def direct_atom(sys: ShearletSystem, lam: ShearletIndex, snapped: bool = True) -> np.ndarray:
    """Atom evaluated straight from the generators, bypassing the filter cache."""
    g, e, n = sys.gen, sys.extent, sys.n
    x = (np.arange(n) + 0.5) / n * e
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    if lam.cone == Cone.V:
        X1, X2 = X2, X1
        m = (lam.m[1], lam.m[0])
    else:
        m = lam.m
    ppu = sys.pixels_per_unit
    if lam.cone == Cone.LOW:
        t = np.array([sys.c * m[0], sys.c * m[1]])
    else:
        j, k = lam.j, lam.k
        t = np.array([sys.c * 2.0**-j * (m[0] - k * m[1]), sys.c * 2.0 ** (-j / 2) * m[1]])
    if snapped:
        t = np.rint(t * ppu) / ppu
    Y1, Y2 = X1 - t[0], X2 - t[1]
    if lam.cone == Cone.LOW:
        return e * g.phi1(Y1) * g.phi1(Y2)
    s = 2.0 ** (lam.j / 2)
    return e * 2.0 ** (0.75 * lam.j) * g.psi1(2.0**lam.j * Y1 + lam.k * s * Y2) * g.psi2(s * Y2)


# --- coefficient tables -------------------------------------------------------------


@dataclass
class CoefficientTable:
    """Coefficients with their indices as parallel arrays.

    ``kept`` marks the entries of an N-term subset (None means all entries);
    values outside the kept set are zero.
    """

    cone: np.ndarray
    j: np.ndarray
    k: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    values: np.ndarray
    system_key: tuple | None = None
    kept: np.ndarray | None = None
    _order: np.ndarray | None = field(default=None, repr=False)
    _lex: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_system(cls, sys: ShearletSystem, values: np.ndarray) -> "CoefficientTable":
        ix = sys.indices
        table = cls(ix.cone, ix.j, ix.k, ix.m1, ix.m2, np.asarray(values, dtype=float), sys.key())
        table._lex = ix.lexicographic_order()
        return table

    @classmethod
    def from_entries(cls, entries: list[tuple[ShearletIndex, float]]) -> "CoefficientTable":
        cone = np.array([int(e[0].cone) for e in entries], dtype=np.int8)
        j = np.array([e[0].j for e in entries], dtype=np.int16)
        k = np.array([e[0].k for e in entries], dtype=np.int32)
        m1 = np.array([e[0].m[0] for e in entries], dtype=np.int32)
        m2 = np.array([e[0].m[1] for e in entries], dtype=np.int32)
        return cls(cone, j, k, m1, m2, np.array([e[1] for e in entries], dtype=float))

    def __len__(self) -> int:
        return len(self.values)

    def index(self, i: int) -> ShearletIndex:
        return ShearletIndex(Cone(int(self.cone[i])), int(self.j[i]), int(self.k[i]), (int(self.m1[i]), int(self.m2[i])))

    def lexicographic_order(self) -> np.ndarray:
        if self._lex is None:
            self._lex = np.lexsort((self.m2, self.m1, self.k, self.j, self.cone))
        return self._lex

    def magnitude_order(self) -> np.ndarray:
        """Positions sorted by decreasing magnitude, ties in lexicographic index order."""
        if self._order is None:
            lex = self.lexicographic_order()
            self._order = lex[np.argsort(-np.abs(self.values[lex]), kind="stable")]
        return self._order

    def with_values(self, values: np.ndarray, kept: np.ndarray | None = None) -> "CoefficientTable":
        out = CoefficientTable(self.cone, self.j, self.k, self.m1, self.m2, values, self.system_key, kept)
        out._lex = self._lex
        return out

    def entries(self) -> list[tuple[ShearletIndex, float]]:
        """Kept ``(index, value)`` pairs in magnitude order."""
        pos = self.magnitude_order()
        if self.kept is not None:
            pos = pos[self.kept[pos]]
        return [(self.index(i), float(self.values[i])) for i in pos]

    def norm2(self) -> float:
        return float(np.dot(self.values, self.values))


def _require_system(table: CoefficientTable, sys: ShearletSystem) -> None:
    if table.system_key is not None and table.system_key != sys.key():
        raise GridMismatch("coefficient table was computed for a different system")
    if len(table) != sys.size:
        raise GridMismatch(f"table has {len(table)} entries, system has {sys.size}")


def analyze(f, sys) -> CoefficientTable:
    """Coefficients ``<f, atom>`` in the discrete L2 inner product.

    ``f`` may be an ImageGrid or a plain ``n x n`` array; ``sys`` may be a
    :class:`ShearletSystem` or any object with the same array interface.
    """
    samples = getattr(f, "samples", f)
    base = getattr(sys, "base", sys)
    return CoefficientTable.from_system(base, sys.analyze_array(samples))


def synthesize(theta: CoefficientTable, sys):
    """``sum theta_lambda atom_lambda`` as an ImageGrid."""
    from .cartoon import ImageGrid

    base = getattr(sys, "base", sys)
    _require_system(theta, base)
    return ImageGrid(sys.synthesize_array(theta.values))


# --- SHC1 coefficient files ----------------------------------------------------------

SHC1_MAGIC = b"SHC1"


def write_shc1(path, table: CoefficientTable, sys: ShearletSystem) -> None:
    """JSON header (system parameters and block table) followed by f64 blocks."""
    _require_system(table, sys)
    blocks = []
    for sl in sys.slices:
        blocks.append(
            {
                "cone": Cone(sl.cone).name,
                "j": sl.j,
                "k": sl.k,
                "shape": list(sl.shape),
                "s1": [int(sl.s1[0]), int(sl.s1[-1])] if len(sl.s1) else [],
                "s2": [int(sl.s2[0]), int(sl.s2[-1])] if len(sl.s2) else [],
                "offset": sl.offset,
            }
        )
    header = json.dumps({"format": "SHC1", "system": sys.params(), "count": sys.size, "blocks": blocks}).encode()
    pad = (-len(header)) % 8
    with open(path, "wb") as fh:
        fh.write(SHC1_MAGIC)
        fh.write(np.uint32(len(header) + pad).astype("<u4").tobytes())
        fh.write(header + b" " * pad)
        fh.write(np.ascontiguousarray(table.values, dtype="<f8").tobytes())


def read_shc1(path) -> tuple[dict, np.ndarray]:
    raw = open(path, "rb").read()
    if raw[:4] != SHC1_MAGIC:
        raise GridMismatch(f"{path}: not an SHC1 file")
    hlen = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    header = json.loads(raw[8 : 8 + hlen].decode())
    values = np.frombuffer(raw[8 + hlen :], dtype="<f8").astype(float)
    if len(values) != header["count"]:
        raise GridMismatch(f"{path}: truncated coefficient data")
    return header, values
