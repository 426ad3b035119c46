"""N-term approximation: thresholding, tail energy, error curves and rate fits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .cartoon import ImageGrid
from .errors import CGNotConverged, InsufficientPoints, NOutOfRange
from .frames import FrameBounds, dual_reconstruct
from .system import CoefficientTable

LOG_POWER = 3.0


def _check_N(table: CoefficientTable, N: int, lo: int) -> None:
    if not lo <= N <= len(table):
        raise NOutOfRange(f"N = {N} outside [{lo}, {len(table)}]")


def n_largest(theta: CoefficientTable, N: int) -> CoefficientTable:
    """The ``N`` entries of largest magnitude; the rest are zeroed.

    Ties in magnitude keep the lexicographically smaller ``(cone, j, k, m)`` first.
    """
    _check_N(theta, N, 1)
    keep = theta.magnitude_order()[:N]
    kept = np.zeros(len(theta), dtype=bool)
    kept[keep] = True
    return theta.with_values(np.where(kept, theta.values, 0.0), kept)


def tail_energies(theta: CoefficientTable, N_list) -> np.ndarray:
    """``sum_{n > N} |theta|_n^2`` for each ``N``, summed from the smallest terms up."""
    sq = np.sort(np.asarray(theta.values, dtype=float) ** 2)
    # tails[i] = sum of the i smallest squares
    tails = np.concatenate([[0.0], np.cumsum(sq)])
    out = []
    for N in N_list:
        _check_N(theta, int(N), 0)
        out.append(tails[len(sq) - int(N)])
    return np.array(out)


def tail_energy(theta: CoefficientTable, N: int) -> float:
    """Sum of squares of all but the ``N`` largest magnitudes."""
    return float(tail_energies(theta, [N])[0])


@dataclass
class RateFit:
    beta: float
    C: float
    beta_log: float
    residual: float
    residual_log: float
    N_min: int
    N_max: int
    points: int
    column: str = "tail"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DecayReport:
    """Tail energy, reconstruction error and frame bound per ``N``."""

    N: np.ndarray
    tail: np.ndarray
    recon: np.ndarray
    bound: np.ndarray
    A: float
    norm2: float
    notes: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [(int(a), float(b), float(c), float(d)) for a, b, c, d in zip(self.N, self.tail, self.recon, self.bound)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "tail_energy", "recon_error", "bound"])
            for N, t, r, b in self.rows():
                w.writerow([N, io._format_float(t), io._format_float(r), io._format_float(b)])

    def write_dat(self, path) -> None:
        lines = ["# N tail_energy recon_error bound"]
        lines += [f"{N} {io._format_float(t)} {io._format_float(r)} {io._format_float(b)}" for N, t, r, b in self.rows()]
        Path(path).write_text("\n".join(lines) + "\n")

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "norm2": self.norm2,
            "rows": [{"N": N, "tail_energy": t, "recon_error": r, "bound": b} for N, t, r, b in self.rows()],
            "fits": {k: v.to_dict() for k, v in self.fits.items()},
            "notes": self.notes,
        }

    def write_json(self, path) -> None:
        io.write_json(path, self.to_dict())


def decay_curve(
    f,
    sys,
    N_list,
    bounds: FrameBounds | None = None,
    tol_cg: float = 1e-6,
    reconstruct: bool = True,
    maxiter: int = 500,
) -> DecayReport:
    """Tail energies and canonical-dual N-term reconstruction errors.

    The analysis pass is shared; each reconstruction starts CG from the
    previous ``N``'s solution.  CG failures are recorded in ``notes`` and the
    returned partial solution is used.  With ``reconstruct=False`` the
    reconstruction column is NaN, and without ``bounds`` so is the bound column.
    """
    samples = np.asarray(getattr(f, "samples", f), dtype=float)
    grid = ImageGrid(samples)
    N_arr = np.asarray(N_list, dtype=np.int64)
    if np.any(np.diff(N_arr) <= 0):
        raise ValueError("N_list must be strictly increasing")
    theta = CoefficientTable.from_system(getattr(sys, "base", sys), sys.analyze_array(samples))
    tails = tail_energies(theta, N_arr)
    recon = np.full(len(N_arr), np.nan)
    notes: dict = {"cg_iterations": [], "cg_failures": {}}
    guess = None
    if reconstruct:
        for i, N in enumerate(N_arr):
            subset = n_largest(theta, int(N))
            try:
                fN = dual_reconstruct(subset, sys, tol=tol_cg, maxiter=maxiter, x0=guess)
                notes["cg_iterations"].append(fN.cg_iterations)
            except CGNotConverged as exc:
                fN = exc.solution
                notes["cg_failures"][int(N)] = exc.residual
                notes["cg_iterations"].append(maxiter)
            guess = fN
            diff = grid.samples - fN.samples
            recon[i] = float(np.sum(diff * diff)) / grid.n**2
    A = np.nan if bounds is None else bounds.A
    return DecayReport(N_arr, tails, recon, tails / A, A, grid.norm() ** 2, notes)


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(res[0]) if len(res) else 0.0
    return float(coef[0]), float(coef[1]), residual


def fit_rate(report: DecayReport, N_min: int, N_max: int, column: str = "tail") -> RateFit:
    """Fit ``C N^-beta`` and ``C N^-beta (log N)^3`` to a column over ``[N_min, N_max]``.

    Raises
    ------
    InsufficientPoints
        If fewer than five usable points fall in the range.
    """
    values = np.asarray(getattr(report, column), dtype=float)
    N = np.asarray(report.N, dtype=float)
    use = (N >= N_min) & (N <= N_max) & (N > 1) & np.isfinite(values) & (values > 0)
    if use.sum() < 5:
        raise InsufficientPoints(f"{int(use.sum())} points in [{N_min}, {N_max}], need 5")
    x = np.log2(N[use])
    y = np.log2(values[use])
    slope, _, res = _line_fit(x, y)
    y_log = y - LOG_POWER * np.log2(np.log(N[use]))
    slope_log, icpt_log, res_log = _line_fit(x, y_log)
    fit = RateFit(-slope, 2.0**icpt_log, -slope_log, res, res_log, int(N_min), int(N_max), int(use.sum()), column)
    report.fits[column] = fit
    return fit


def log_spaced_N(N_min: int, N_max: int, per_octave: int = 2) -> np.ndarray:
    """Distinct integers ``round(2^(i/per_octave))`` covering ``[N_min, N_max]``."""
    lo, hi = math.log2(N_min), math.log2(N_max)
    steps = np.arange(math.floor(lo * per_octave), math.ceil(hi * per_octave) + 1) / per_octave
    vals = np.unique(np.rint(2.0**steps).astype(np.int64))
    return vals[(vals >= N_min) & (vals <= N_max)]
