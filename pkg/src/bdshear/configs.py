"""Bundled cartoon configurations."""
from __future__ import annotations

import math

from .cartoon import BumpTerm
from .geometry import BoundaryPiece, CircularArc, Polynomial, domain_to_dict, make_piecewise_domain, rounded_square, square


def _bump(amplitude: float, center: float, radius: float) -> dict:
    return BumpTerm(amplitude, (center, center), (radius, radius)).to_dict()


def _square_in_square(amplitude_f1: float) -> dict:
    return {
        "omega": domain_to_dict(square(0.2, 0.8)),
        "B": domain_to_dict(square(0.4, 0.6)),
        "f0": [_bump(0.004, 0.5, 0.3)],
        "f1": [_bump(amplitude_f1, 0.5, 0.15)],
    }


def _corner() -> dict:
    # rounded outer domain and a square jump set: four corners each
    return {
        "omega": domain_to_dict(rounded_square(0.1, 0.9, 0.03)),
        "B": domain_to_dict(square(0.35, 0.65)),
        "f0": [],
        "f1": [_bump(0.0043, 0.5, 0.3)],
    }


def _smooth() -> dict:
    return {
        "omega": domain_to_dict(rounded_square(0.1, 0.9, 0.03)),
        "B": None,
        "f0": [_bump(0.0043, 0.5, 0.3)],
        "f1": [],
    }


def _curved_edge(radius: float = 1.0) -> dict:
    # indicator of a box whose top and bottom are shallow circular arcs (|s| > 3
    # over a long stretch) and whose sides are straight vertical segments
    lo, hi, mid, half = 0.15, 0.85, 0.5, 0.2
    rise = math.sqrt(radius**2 - (hi - mid) ** 2)
    top_c, bot_c = mid + half - radius, mid - half + radius
    y_lo, y_hi = bot_c - rise, top_c + rise
    B = make_piecewise_domain(
        [
            BoundaryPiece("x1", lo, hi, CircularArc(mid, bot_c, radius, -1.0)),
            BoundaryPiece("x2", y_lo, y_hi, Polynomial((hi,))),
            BoundaryPiece("x1", hi, lo, CircularArc(mid, top_c, radius, 1.0)),
            BoundaryPiece("x2", y_hi, y_lo, Polynomial((lo,))),
        ],
        nu=4.0,
    )
    one = BumpTerm(1.0, (0.5, 0.5), (math.inf, math.inf)).to_dict()
    return {"omega": domain_to_dict(square(0.05, 0.95)), "B": domain_to_dict(B), "f0": [], "f1": [one]}


BUNDLED = {
    "square-in-square": lambda: _square_in_square(0.001),
    "amplitude-10": lambda: _square_in_square(10.0),
    "corner": _corner,
    "smooth": _smooth,
    "curved-edge": _curved_edge,
}


def bundled_cartoon(name: str) -> dict:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise KeyError(f"unknown bundled configuration {name!r}; choose from {sorted(BUNDLED)}") from None
