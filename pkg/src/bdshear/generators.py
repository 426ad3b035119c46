"""Compactly supported separable shearlet generators.

The wavelet factor is built from the highpass complement of a maximally flat
(Daubechies) lowpass filter and the bump factor is the scaling function of a
second such filter.  Both are realized on a dyadic grid by exact dyadic
refinement of the two-scale relation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import NonConvergent

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Filter1D:
    """A finite real filter.

    Attributes
    ----------
    taps : np.ndarray
        Filter coefficients.
    offset : int
        Integer position of ``taps[0]``.
    role : {"lowpass", "highpass"}
        Whether the taps are a lowpass filter or the highpass complement of one.
    """

    taps: np.ndarray
    offset: int = 0
    role: Literal["lowpass", "highpass"] = "lowpass"

    def __len__(self) -> int:
        return len(self.taps)

    def highpass(self) -> "Filter1D":
        """Quadrature-mirror complement ``g[k] = (-1)^k h[L-1-k]``."""
        L = len(self.taps)
        signs = (-1.0) ** np.arange(L)
        return Filter1D(signs * self.taps[::-1], self.offset, "highpass")

    def response(self, omega: np.ndarray) -> np.ndarray:
        """Normalized frequency response ``sum_k h[k] exp(-i k omega) / sqrt(2)``."""
        k = np.arange(len(self.taps)) + self.offset
        return np.exp(-1j * np.outer(omega, k)) @ self.taps / SQRT2


def maximally_flat_lowpass(m_flat: int) -> Filter1D:
    """Length ``2 * m_flat`` maximally flat half-band lowpass filter.

    The squared magnitude response is the Daubechies polynomial; its minimum
    phase spectral factor is returned, normalized so the taps sum to sqrt(2).

    Parameters
    ----------
    m_flat : int
        Number of zeros at ``omega = pi`` (equivalently, vanishing moments of
        the associated wavelet). Must lie in ``1..12``.
    """
    if not 1 <= m_flat <= 12:
        raise ValueError(f"m_flat must be in 1..12, got {m_flat}")
    if m_flat == 1:
        return Filter1D(np.array([1.0, 1.0]) / SQRT2)
    # Q(y) = sum_k C(m-1+k, k) y^k with y = sin^2(omega/2); each root y_i maps to
    # a reciprocal pair of z-roots through y = (2 - z - 1/z) / 4.
    poly = [comb(m_flat - 1 + k, k) for k in range(m_flat)]
    q = np.array([1.0 + 0j])
    for y in np.roots(poly[::-1]):
        pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        q = np.convolve(q, [1.0, -pair[np.argmin(np.abs(pair))]])
    h = q.real
    for _ in range(m_flat):
        h = np.convolve(h, [1.0, 1.0])
    return Filter1D(h / h.sum() * SQRT2)


@dataclass(frozen=True)
class Sampled1D:
    """A function sampled on ``support[0] + step * arange(len(values))``."""

    values: np.ndarray
    step: float
    support: tuple[float, float]

    @property
    def grid(self) -> np.ndarray:
        return self.support[0] + self.step * np.arange(len(self.values))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.step))

    def __call__(self, x) -> np.ndarray:
        """Piecewise-linear interpolation, zero outside the support."""
        x = np.asarray(x, dtype=float)
        t = (x - self.support[0]) / self.step
        i = np.floor(t).astype(np.int64)
        frac = t - i
        inside = (i >= 0) & (i < len(self.values) - 1)
        out = np.zeros(x.shape)
        ii = i[inside]
        out[inside] = self.values[ii] * (1.0 - frac[inside]) + self.values[ii + 1] * frac[inside]
        # the right endpoint itself
        out[t == len(self.values) - 1] = self.values[-1]
        return out


def _integer_values(h: np.ndarray) -> np.ndarray:
    """Scaling function at the integers 0..L-1 (eigenvector of the refinement matrix)."""
    L = len(h)
    size = L - 1
    if size == 1:
        return np.array([1.0, 0.0])
    M = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            k = 2 * i - j
            if 0 <= k < L:
                M[i, j] = SQRT2 * h[k]
    w, v = np.linalg.eig(M)
    idx = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[idx] - 1.0) > 1e-8:
        raise NonConvergent("refinement matrix has no eigenvalue 1")
    x = v[:, idx].real
    x = x / x.sum()
    return np.append(x, 0.0)


def _refine(h: np.ndarray, phi: np.ndarray, level: int) -> np.ndarray:
    """One dyadic refinement: values at step 2^-level -> step 2^-(level+1)."""
    L = len(h)
    stride = 2**level
    new = np.zeros((L - 1) * 2 * stride + 1)
    for k in range(L):
        off = k * stride
        new[off : off + len(phi)] += SQRT2 * h[k] * phi
    return new


def cascade(filt: Filter1D, r: int) -> Sampled1D:
    """Scaling function of a lowpass filter sampled with step ``2**-r``.

    Values at the integers come from the refinement eigenproblem and are then
    refined dyadically ``r`` times, which is exact at every dyadic node.

    Raises
    ------
    NonConvergent
        If the two finest levels disagree at their shared nodes by more than
        1e-6, or the refinement equation has no fixed point.
    """
    if r < 1:
        raise ValueError("r must be positive")
    if filt.role != "lowpass":
        raise ValueError("cascade expects a lowpass filter")
    h = np.asarray(filt.taps, dtype=float)
    phi = _integer_values(h)
    previous = phi
    for level in range(r):
        previous = phi
        phi = _refine(h, phi, level)
    if np.max(np.abs(phi[::2] - previous)) > 1e-6:
        raise NonConvergent("cascade iterates disagree on shared nodes")
    L = len(h)
    return Sampled1D(phi, 2.0**-r, (float(filt.offset), float(filt.offset + L - 1)))


def wavelet_from(filt: Filter1D, r: int) -> Sampled1D:
    """Wavelet ``psi(x) = sum_k sqrt(2) g[k] phi(2x - k)`` on the step-``2**-r`` grid."""
    phi = cascade(filt, r).values
    g = filt.highpass().taps
    L = len(g)
    npts = (L - 1) * 2**r + 1
    out = np.zeros(npts)
    idx = np.arange(npts)
    for k in range(L):
        t = 2 * idx - k * 2**r
        ok = (t >= 0) & (t < len(phi))
        out[ok] += SQRT2 * g[k] * phi[t[ok]]
    return Sampled1D(out, 2.0**-r, (0.0, float(L - 1)))


@dataclass(frozen=True)
class GeneratorSet:
    """Separable generators ``psi = psi1 (x) psi2`` and ``phi = phi1 (x) phi1``.

    ``psi1`` is the wavelet with ``m_vm`` vanishing moments, ``psi2`` the
    scaling function of the second filter, and ``phi1`` equals ``psi2``.
    The swapped generator ``psi~(x1, x2) = psi(x2, x1)`` needs no storage.
    """

    psi1: Sampled1D
    psi2: Sampled1D
    m_flat: tuple[int, int]
    r: int
    filters: tuple[Filter1D, Filter1D] = field(repr=False, default=None)

    @property
    def phi1(self) -> Sampled1D:
        return self.psi2

    @property
    def h_gen(self) -> float:
        return 2.0**-self.r

    @property
    def m_vm(self) -> int:
        return self.m_flat[0]

    @property
    def psi_norm(self) -> float:
        return self.psi1.norm() * self.psi2.norm()

    @property
    def phi_norm(self) -> float:
        return self.phi1.norm() ** 2

    def psi(self, x1, x2) -> np.ndarray:
        return self.psi1(x1) * self.psi2(x2)

    def psi_tilde(self, x1, x2) -> np.ndarray:
        return self.psi1(x2) * self.psi2(x1)

    def phi(self, x1, x2) -> np.ndarray:
        return self.phi1(x1) * self.phi1(x2)

    def psi_grid(self) -> np.ndarray:
        """2D samples of psi on the generator grid (axis 0 is x1)."""
        return np.outer(self.psi1.values, self.psi2.values)

    def phi_grid(self) -> np.ndarray:
        return np.outer(self.phi1.values, self.phi1.values)

    def save(self, directory) -> None:
        """Write the generator cache: one GRD1 file per 1D factor plus a JSON sidecar."""
        from . import io

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, s in (("psi1", self.psi1), ("psi2", self.psi2), ("phi1", self.phi1)):
            io.write_grd1(d / f"{name}.grd1", s.values)
        sidecar = {
            "m_flat": list(self.m_flat),
            "r": self.r,
            "support": [list(self.psi1.support), list(self.psi2.support), list(self.phi1.support)],
        }
        io.write_json(d / CACHE_SIDECAR, sidecar)


CACHE_SIDECAR = "generators.json"


def load_generator_set(directory) -> GeneratorSet:
    """Read a generator cache written by :meth:`GeneratorSet.save`."""
    from . import io

    d = Path(directory)
    meta = io.read_json(d / CACHE_SIDECAR)
    r = int(meta["r"])
    step = 2.0**-r
    sup = [tuple(map(float, s)) for s in meta["support"]]
    psi1 = Sampled1D(io.read_grd1(d / "psi1.grd1"), step, sup[0])
    psi2 = Sampled1D(io.read_grd1(d / "psi2.grd1"), step, sup[1])
    m = tuple(int(v) for v in meta["m_flat"])
    return GeneratorSet(psi1, psi2, m, r, (maximally_flat_lowpass(m[0]), maximally_flat_lowpass(m[1])))


def cached_generator_set(m_flat_psi1: int, m_flat_psi2: int, r: int, directory=None) -> GeneratorSet:
    """Load the generator set from ``directory`` when its sidecar matches, else build (and cache) it."""
    if directory is not None:
        side = Path(directory) / CACHE_SIDECAR
        if side.exists():
            from . import io

            meta = io.read_json(side)
            if list(meta.get("m_flat", [])) == [m_flat_psi1, m_flat_psi2] and int(meta.get("r", -1)) == r:
                return load_generator_set(directory)
    gen = build_generator_set(m_flat_psi1, m_flat_psi2, r)
    if directory is not None:
        gen.save(directory)
    return gen


def build_generator_set(m_flat_psi1: int = 6, m_flat_psi2: int = 5, r: int = 10) -> GeneratorSet:
    """Build the default separable generator set.

    Parameters
    ----------
    m_flat_psi1 : int
        Flatness of the filter whose highpass complement gives the wavelet factor.
    m_flat_psi2 : int
        Flatness of the filter whose scaling function gives the bump factor.
    r : int
        Dyadic sampling depth (grid step ``2**-r``), at least 8.
    """
    if r < 8:
        raise ValueError("generator grid requires r >= 8")
    f1 = maximally_flat_lowpass(m_flat_psi1)
    f2 = maximally_flat_lowpass(m_flat_psi2)
    return GeneratorSet(
        psi1=wavelet_from(f1, r),
        psi2=cascade(f2, r),
        m_flat=(m_flat_psi1, m_flat_psi2),
        r=r,
        filters=(f1, f2),
    )


def discrete_moments(s: Sampled1D, orders: int) -> np.ndarray:
    """``sum_t t^p s(t) h`` for ``p = 0..orders-1``, centered at the support midpoint."""
    t = s.grid - 0.5 * (s.support[0] + s.support[1])
    return np.array([np.sum(t**p * s.values) * s.step for p in range(orders)])


# --- Fourier-side validation ---------------------------------------------------


def fourier_transform(s: Sampled1D, xi: np.ndarray) -> np.ndarray:
    """``int s(x) exp(-i x xi) dx`` by trapezoid quadrature on the sample grid."""
    xi = np.asarray(xi, dtype=float)
    w = np.full(len(s.values), s.step)
    w[[0, -1]] *= 0.5
    out = np.empty(xi.shape, dtype=complex)
    x = s.grid
    for start in range(0, xi.size, 64):
        block = xi.ravel()[start : start + 64]
        out.ravel()[start : start + 64] = np.exp(-1j * np.outer(block, x)) @ (w * s.values)
    return out


def fourier_derivative(s: Sampled1D, xi: np.ndarray) -> np.ndarray:
    """Derivative in ``xi`` of the Fourier transform, ``int -i x s(x) exp(-i x xi) dx``."""
    xs = Sampled1D(-1j * s.grid * s.values, s.step, s.support)
    return fourier_transform(xs, xi)


def envelope_exponent(xi: np.ndarray, mag: np.ndarray, bins_per_octave: int = 2) -> float:
    """Decay exponent of the upper envelope of ``|f(xi)|`` on a log-spaced grid.

    The envelope is the running maximum over half-octave bins, which removes the
    zeros of oscillating transforms before the log-log least-squares fit.
    """
    lx = np.log2(xi)
    edges = np.arange(lx.min(), lx.max() + 1e-12, 1.0 / bins_per_octave)
    centers, peaks = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (lx >= lo) & (lx <= hi)
        if not np.any(sel):
            continue
        i = np.argmax(mag[sel])
        centers.append(lx[sel][i])
        peaks.append(np.log2(mag[sel][i]))
    slope = np.polyfit(centers, peaks, 1)[0]
    return float(-slope)


@dataclass
class DecayValidationReport:
    """Fitted Fourier decay of the generators.

    ``alpha`` is the low-frequency rise of ``|psi1^|``; ``gamma1`` and
    ``gamma2`` are the high-frequency envelope decay of the two factors.
    ``h_envelope`` samples the per-``xi1`` envelope of the normalized
    ``xi2``-derivative, with its discrete L1 mass and tail diagnostics.
    """

    alpha: float
    gamma1: float
    gamma2: float
    C1: float
    xi1: np.ndarray
    h_envelope: np.ndarray
    h_l1: float
    h_tail_exponent: float
    h_bounded_in_xi2: bool
    ratio_max: float
    alpha_ok: bool
    gamma_ok: bool
    swapped: bool = False

    @property
    def gamma(self) -> float:
        return min(self.gamma1, self.gamma2)

    @property
    def h_integrable(self) -> bool:
        return bool(np.isfinite(self.h_l1) and self.h_tail_exponent > 1.0 and self.h_bounded_in_xi2)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "gamma": self.gamma,
            "C1": self.C1,
            "h_l1": self.h_l1,
            "h_tail_exponent": self.h_tail_exponent,
            "h_bounded_in_xi2": self.h_bounded_in_xi2,
            "h_integrable": self.h_integrable,
            "ratio_max": self.ratio_max,
            "alpha_ok": self.alpha_ok,
            "gamma_ok": self.gamma_ok,
        }


def validate_decay(gen: GeneratorSet, swapped: bool = False, n_freq: int = 256) -> DecayValidationReport:
    """Fit the Fourier decay exponents of ``psi`` and check the derivative condition.

    Parameters
    ----------
    gen : GeneratorSet
        Generators with grid step at most ``2**-8``.
    swapped : bool
        Validate ``psi~`` instead; the exponents are identical with the roles of
        the two frequency axes exchanged, so only the report label changes.
    n_freq : int
        Points per axis of the log-spaced frequency grid.
    """
    if gen.h_gen > 2.0**-8:
        raise ValueError("generator grid step must be at most 2^-8")
    low = np.logspace(-6, -2, 40, base=2.0)
    high = np.logspace(3, 6, 96, base=2.0)
    a1 = np.abs(fourier_transform(gen.psi1, low))
    alpha = float(np.polyfit(np.log2(low), np.log2(a1), 1)[0])
    gamma1 = envelope_exponent(high, np.abs(fourier_transform(gen.psi1, high)))
    gamma2 = envelope_exponent(high, np.abs(fourier_transform(gen.psi2, high)))
    gamma = min(gamma1, gamma2)

    xi = np.logspace(-6, 6, n_freq, base=2.0)
    p1 = np.abs(fourier_transform(gen.psi1, xi))
    p2 = np.abs(fourier_transform(gen.psi2, xi))
    d2 = np.abs(fourier_derivative(gen.psi2, xi))
    env1 = np.minimum(1.0, xi**alpha) * np.minimum(1.0, xi**-gamma)
    env2 = np.minimum(1.0, xi**-gamma)
    C1 = float(np.max(p1 / env1) * np.max(p2 / env2))

    # |d/dxi2 psi^| (1 + |xi2|/|xi1|)^gamma, maximized over xi2 for each xi1
    weight = (1.0 + xi[None, :] / xi[:, None]) ** gamma
    table = p1[:, None] * d2[None, :] * weight
    H = table.max(axis=1)
    half = xi <= xi[-1] / 2.0
    H_half = table[:, half].max(axis=1)
    bounded = bool(np.all(H <= 1.1 * H_half + 1e-300))
    dxi = np.gradient(xi)
    h_l1 = float(np.sum(H * dxi))
    tail = xi >= 8.0
    h_tail = envelope_exponent(xi[tail], H[tail]) if np.count_nonzero(tail) > 4 else np.nan
    ratio_max = float(np.max(table / H[:, None]))
    return DecayValidationReport(
        alpha=alpha,
        gamma1=gamma1,
        gamma2=gamma2,
        C1=C1,
        xi1=xi,
        h_envelope=H,
        h_l1=h_l1,
        h_tail_exponent=float(h_tail),
        h_bounded_in_xi2=bounded,
        ratio_max=ratio_max,
        alpha_ok=alpha > 5.0,
        gamma_ok=gamma >= 4.0,
        swapped=swapped,
    )
