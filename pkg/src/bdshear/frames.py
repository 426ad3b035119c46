"""Frame operator, frame-bound estimation, domain projection and dual reconstruction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.ndimage import gaussian_filter

from .cartoon import ImageGrid, domain_cells, domain_coverage
from .errors import CGNotConverged, EquivalenceViolated, GridMismatch, NotAFrame
from .geometry import DomainSpec
from .system import CoefficientTable, Cone, ShearletSystem, _require_system

log = logging.getLogger(__name__)


def _samples(f) -> np.ndarray:
    return np.asarray(getattr(f, "samples", f), dtype=float)


def frame_apply(f, sys) -> ImageGrid:
    """``S f = synthesize(analyze(f))``."""
    return ImageGrid(sys.frame_apply_array(_samples(f)))


# --- conjugate gradients -------------------------------------------------------------


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)


def conjugate_gradient(
    apply: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    tol: float = 1e-6,
    maxiter: int = 500,
    x0: np.ndarray | None = None,
) -> CGResult:
    """Solve ``apply(x) = rhs`` for a symmetric positive (semi)definite operator.

    Stops when ``||rhs - apply(x)|| <= tol * ||rhs||``.  The residual is
    updated recursively, so each iteration costs one operator application.
    """
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return CGResult(np.zeros_like(rhs), 0, 0.0, True)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
    r = rhs - apply(x) if x0 is not None else rhs.copy()
    p = r.copy()
    rr = float(np.vdot(r, r))
    history = [np.sqrt(rr) / bnorm]
    it = 0
    while history[-1] > tol and it < maxiter:
        Ap = apply(p)
        pAp = float(np.vdot(p, Ap))
        if pAp <= 0.0:
            break
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(np.vdot(r, r))
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
        history.append(np.sqrt(rr) / bnorm)
    return CGResult(x, it, history[-1], history[-1] <= tol, history)


# --- frame bounds ----------------------------------------------------------------------


@dataclass
class FrameBounds:
    """Estimated optimal frame bounds ``A <= B`` on the grid."""

    A: float
    B: float
    iterations: dict
    tol: float
    params: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.B / self.A

    def to_dict(self) -> dict:
        d = {"A": self.A, "B": self.B, "ratio": self.ratio, "tol": self.tol}
        for name in ("n", "j_max", "c"):
            d[name] = self.params.get(name)
        d["extent"] = self.params.get("extent")
        d["iterations"] = self.iterations
        return d


def _start_vector(sys, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((sys.n, sys.n))
    mask = getattr(sys, "mask", None)
    return x * mask if mask is not None else x


def estimate_bounds(
    sys,
    trials: int = 1,
    tol: float = 1e-3,
    seed: int = 0,
    method: str = "lanczos",
    maxiter: int = 400,
    max_power: int = 200,
    max_inverse: int = 30,
    cg_tol: float | None = None,
) -> FrameBounds:
    """Estimate the extreme eigenvalues of the frame operator.

    Parameters
    ----------
    sys : ShearletSystem or ProjectedSystem
    trials : int
        Independent random starts; the smallest lower and the largest upper
        estimate are reported.
    tol : float
        Relative stopping tolerance on the eigenvalue estimates.
    method : {"lanczos", "power"}
        ``"lanczos"`` runs a fully reorthogonalized Lanczos iteration and stops
        once both extreme Ritz values have moved by less than ``tol``
        (relatively) over the last ten steps, or their Ritz residuals are below
        ``tol``.  ``"power"`` runs power iteration for ``B`` and CG-based
        inverse iteration for ``A``.
    maxiter : int
        Lanczos step cap.
    max_power, max_inverse, cg_tol
        Settings of the ``"power"`` method.

    Raises
    ------
    NotAFrame
        If the lower estimate collapses below ``1e-10 * B`` or CG cannot
        invert the frame operator.
    """
    if trials < 1 or tol <= 0:
        raise ValueError("trials must be >= 1 and tol > 0")
    if method not in ("lanczos", "power"):
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    if method == "power":
        A_est, B_est, info = _power_inverse(sys, rng, trials, tol, max_power, max_inverse, tol if cg_tol is None else cg_tol)
    else:
        A_est, B_est, info = np.inf, 0.0, {"method": "lanczos", "steps": [], "residual_A": [], "residual_B": []}
        for _ in range(trials):
            lo, hi, steps, r_lo, r_hi = _lanczos(sys.frame_apply_array, _start_vector(sys, rng), tol, maxiter)
            A_est, B_est = min(A_est, lo), max(B_est, hi)
            info["steps"].append(steps)
            info["residual_A"].append(r_lo)
            info["residual_B"].append(r_hi)
    if not A_est >= 1e-10 * B_est:
        raise NotAFrame(f"lower bound estimate {A_est:.3g} collapsed relative to B = {B_est:.3g}")
    return FrameBounds(float(A_est), float(B_est), info, tol, _params(sys))


def _lanczos(apply: Callable, x0: np.ndarray, tol: float, maxiter: int, window: int = 10):
    """Extreme Ritz values of a symmetric operator by Lanczos with full reorthogonalization."""
    from scipy.linalg import eigh_tridiagonal

    shape = x0.shape
    basis = np.empty((maxiter + 1, x0.size))
    basis[0] = x0.ravel() / np.linalg.norm(x0)
    alpha, beta, history = [], [], []
    lo = hi = float("nan")
    r_lo = r_hi = float("inf")
    for k in range(maxiter):
        w = apply(basis[k].reshape(shape)).ravel()
        alpha.append(float(w @ basis[k]))
        done = basis[: k + 1]
        for _ in range(2):
            w -= done.T @ (done @ w)
        b = float(np.linalg.norm(w))
        if k == 0:
            theta, vecs = np.array(alpha), np.ones((1, 1))
        else:
            theta, vecs = eigh_tridiagonal(np.array(alpha), np.array(beta))
        lo, hi = float(theta[0]), float(theta[-1])
        r_lo, r_hi = b * abs(vecs[-1, 0]), b * abs(vecs[-1, -1])
        history.append((lo, hi))
        log.debug("lanczos step %d: [%.8g, %.8g] residuals %.3g %.3g", k + 1, lo, hi, r_lo, r_hi)
        if r_lo <= tol * abs(lo) and r_hi <= tol * hi:
            break
        if k >= 2 * window:
            lo_old, hi_old = history[-1 - window]
            if abs(lo_old - lo) <= tol * abs(lo) and abs(hi - hi_old) <= tol * hi:
                break
        if b <= 1e-14 * hi:
            break
        beta.append(b)
        basis[k + 1] = w / b
    return lo, hi, len(alpha), float(r_lo), float(r_hi)


def _power_inverse(sys, rng, trials, tol, max_power, max_inverse, cg_tol):
    apply = sys.frame_apply_array
    A_est, B_est = np.inf, 0.0
    info = {"method": "power", "power": [], "inverse": [], "cg": []}
    for _ in range(trials):
        x = _start_vector(sys, rng)
        x /= np.linalg.norm(x)
        lam = 0.0
        for it in range(1, max_power + 1):
            y = apply(x)
            new = float(np.vdot(x, y))
            x = y / np.linalg.norm(y)
            log.debug("power iteration %d: %.8g", it, new)
            if lam > 0 and abs(new - lam) <= tol * new:
                lam = new
                break
            lam = new
        B_est = max(B_est, lam)
        info["power"].append(it)

        x = _start_vector(sys, rng)
        x /= np.linalg.norm(x)
        mu, guess, cg_total = np.inf, None, 0
        for it in range(1, max_inverse + 1):
            res = conjugate_gradient(apply, x, tol=cg_tol, maxiter=500, x0=guess)
            cg_total += res.iterations
            if not res.converged:
                raise NotAFrame(f"CG failed to invert the frame operator (residual {res.residual:.3g})")
            y = res.x
            new = float(np.vdot(x, y)) / float(np.vdot(y, y))
            log.debug("inverse iteration %d: %.8g after %d CG steps", it, new, res.iterations)
            if new < 1e-10 * B_est:
                raise NotAFrame(f"lower bound estimate {new:.3g} collapsed relative to B = {B_est:.3g}")
            x = y / np.linalg.norm(y)
            guess = x * (1.0 / new)
            converged = abs(mu - new) <= tol * new
            mu = new
            if converged:
                break
        A_est = min(A_est, mu)
        info["inverse"].append(it)
        info["cg"].append(cg_total)
    return A_est, B_est, info


def _params(sys) -> dict:
    base = getattr(sys, "base", sys)
    return base.params() if hasattr(base, "params") else {"n": base.n}


# --- projection onto a domain -----------------------------------------------------------


class ProjectedSystem:
    """The system with every atom multiplied by the indicator of the domain's cells.

    The mask is the indicator of the grid cells meeting the closed domain, so
    multiplication by it is the orthogonal projection onto grid functions
    supported in the domain.  ``coverage`` keeps the cell-average of the
    domain's indicator for reference.
    """

    def __init__(self, base: ShearletSystem, domains: tuple[DomainSpec, ...], mask: np.ndarray, coverage: np.ndarray):
        self.base = base
        self.domains = domains
        self.mask = mask.astype(float)
        self.coverage = coverage
        self._zero = None

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def size(self) -> int:
        return self.base.size

    @property
    def indices(self):
        return self.base.indices

    def key(self) -> tuple:
        return self.base.key()

    def params(self) -> dict:
        return self.base.params()

    def analyze_array(self, samples: np.ndarray) -> np.ndarray:
        return self.base.analyze_array(self.mask * samples)

    def synthesize_array(self, values: np.ndarray) -> np.ndarray:
        return self.mask * self.base.synthesize_array(values)

    def frame_apply_array(self, samples: np.ndarray) -> np.ndarray:
        return self.mask * self.base.frame_apply_array(self.mask * samples)

    def zero_atoms(self) -> np.ndarray:
        """Flags of atoms whose projection vanishes (no nonzero sample on the domain's cells)."""
        if self._zero is None:
            n = self.n
            csum = np.zeros((n + 1, n + 1))
            csum[1:, 1:] = np.cumsum(np.cumsum(self.mask > 0, axis=0), axis=1)
            flags = np.zeros(self.size, dtype=bool)
            for sl in self.base.slices:
                # widen the significance box to every nonzero sample so flagged atoms vanish exactly
                filt = self.base.filters[sl.filter_key]
                nz = filt.values != 0
                rows, cols = np.flatnonzero(nz.any(axis=1)), np.flatnonzero(nz.any(axis=0))
                grow = np.array([rows[0], cols[0], rows[-1], cols[-1]]) - np.array(filt.box)
                if int(sl.cone) == int(Cone.V):
                    grow = grow[[1, 0, 3, 2]]
                boxes = self.base.slice_support_boxes(sl) + grow
                r0 = np.clip(boxes[:, 0], 0, n)
                c0 = np.clip(boxes[:, 1], 0, n)
                r1 = np.clip(boxes[:, 2] + 1, 0, n)
                c1 = np.clip(boxes[:, 3] + 1, 0, n)
                total = csum[r1, c1] - csum[r0, c1] - csum[r1, c0] + csum[r0, c0]
                empty = (r1 <= r0) | (c1 <= c0)
                flags[sl.offset : sl.offset + sl.size] = empty | (total == 0)
            self._zero = flags
        return self._zero


def project_system(sys, omega: DomainSpec, supersample: int = 4) -> ProjectedSystem:
    """Project every atom onto the grid functions supported in ``omega``.

    Projecting a projected system intersects the domains, so projecting twice
    onto the same domain changes nothing.
    """
    if isinstance(sys, ProjectedSystem):
        if any(d is omega for d in sys.domains):
            return sys
        mask = (sys.mask > 0) & domain_cells(omega, sys.n, supersample)
        coverage = np.minimum(sys.coverage, domain_coverage(omega, sys.n, supersample))
        return ProjectedSystem(sys.base, sys.domains + (omega,), mask, coverage)
    mask = domain_cells(omega, sys.n, supersample)
    return ProjectedSystem(sys, (omega,), mask, domain_coverage(omega, sys.n, supersample))


def random_supported_field(mask: np.ndarray, rng: np.random.Generator, smoothness: float | None = None) -> np.ndarray:
    """A smooth random field multiplied by a domain mask."""
    n = mask.shape[0]
    width = n / 32.0 if smoothness is None else smoothness
    field_ = gaussian_filter(rng.standard_normal((n, n)), width, mode="wrap")
    return field_ * mask


@dataclass
class EquivalenceReport:
    trials: int
    max_table_difference: float
    ratios: np.ndarray
    A: float
    B: float
    delta: float

    @property
    def ok(self) -> bool:
        lo, hi = self.A * (1 - self.delta), self.B * (1 + self.delta)
        return bool(self.max_table_difference <= 1e-12 and np.all((self.ratios >= lo) & (self.ratios <= hi)))

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_table_difference": self.max_table_difference,
            "ratio_min": float(self.ratios.min()),
            "ratio_max": float(self.ratios.max()),
            "A": self.A,
            "B": self.B,
            "delta": self.delta,
            "ok": self.ok,
        }


def check_projection_equivalence(
    sys: ShearletSystem,
    omega: DomainSpec,
    trials: int,
    bounds: FrameBounds,
    delta: float = 0.05,
    seed: int = 0,
) -> EquivalenceReport:
    """Compare base and projected coefficients of random functions supported in ``omega``.

    Raises
    ------
    EquivalenceViolated
        If the tables differ by more than 1e-12 (relative) or a frame ratio
        falls outside ``[A (1 - delta), B (1 + delta)]``.
    """
    proj = project_system(sys, omega)
    rng = np.random.default_rng(seed)
    diffs, ratios = [], []
    for _ in range(trials):
        g = random_supported_field(proj.mask, rng)
        base_coef = sys.analyze_array(g)
        proj_coef = proj.analyze_array(g)
        scale = max(np.linalg.norm(base_coef), 1e-300)
        diffs.append(float(np.linalg.norm(proj_coef - base_coef) / scale))
        ratios.append(float(np.dot(proj_coef, proj_coef) / (np.sum(g * g) / sys.n**2)))
    report = EquivalenceReport(trials, max(diffs), np.array(ratios), bounds.A, bounds.B, delta)
    if report.max_table_difference > 1e-12:
        raise EquivalenceViolated(f"coefficient tables differ by {report.max_table_difference:.3g}")
    lo, hi = bounds.A * (1 - delta), bounds.B * (1 + delta)
    bad = [r for r in ratios if not lo <= r <= hi]
    if bad:
        raise EquivalenceViolated(f"frame ratio {bad[0]:.6g} outside [{lo:.6g}, {hi:.6g}]", ratio=bad[0])
    return report


# --- reconstruction -----------------------------------------------------------------------


def dual_reconstruct(
    theta: CoefficientTable,
    sys,
    tol: float = 1e-6,
    maxiter: int = 500,
    x0=None,
) -> ImageGrid:
    """Canonical-dual reconstruction ``S^-1 synthesize(theta)`` by conjugate gradients.

    Raises
    ------
    CGNotConverged
        If the relative residual is still above ``tol`` after ``maxiter`` steps.
    """
    base = getattr(sys, "base", sys)
    _require_system(theta, base)
    rhs = sys.synthesize_array(theta.values)
    guess = None if x0 is None else _samples(x0)
    res = conjugate_gradient(sys.frame_apply_array, rhs, tol=tol, maxiter=maxiter, x0=guess)
    if not res.converged:
        raise CGNotConverged(
            f"CG stopped at relative residual {res.residual:.3g} after {res.iterations} iterations",
            residual=res.residual,
            solution=ImageGrid(res.x),
        )
    out = ImageGrid(res.x)
    out.cg_iterations = res.iterations
    out.cg_residual = res.residual
    return out
