"""Equilibria, their linear stability and the transcritical bifurcation scan."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import CoincidentRootsError, DomainError, NumericalError
from .model import HALF_PI, Y_MAX, Y_MIN, Params, dq_dalpha, q_of_height

# |alpha0 - alpha0_star| below this is reported as degenerate
DEGENERATE_WINDOW = 1e-6


class Branch(str, enum.Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


class Stability(str, enum.Enum):
    CENTER = "center"
    SADDLE = "saddle"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Equilibrium:
    y_eq: float
    contact_angle: float
    branch: Branch
    stability: Optional[Stability] = None

    x: float = 0.0

    @property
    def state(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.y_eq, 0.0])


@dataclass(frozen=True)
class EigenSet:
    lambda12: tuple[complex, complex]
    lambda34: tuple[complex, complex]
    fx: float
    hy: float

    @property
    def all(self) -> np.ndarray:
        return np.array([*self.lambda12, *self.lambda34], dtype=complex)


@lru_cache(maxsize=None)
def critical_alpha_star(tol: float = 1e-14) -> float:
    """Contact angle maximising ``q``; the two equilibrium branches cross here."""
    return brentq(dq_dalpha, 1.2, 1.5, xtol=tol, rtol=4 * np.finfo(float).eps)


def _check_alpha(alpha0: float) -> None:
    if not 0.0 < alpha0 < HALF_PI:
        raise DomainError(f"alpha0 must lie in (0, pi/2), got {alpha0!r}")


def height_of_angle(alpha: float) -> float:
    """Centre-of-mass height of the isosceles triangle with base angle ``alpha``."""
    _check_alpha(alpha)
    return math.sqrt(math.tan(alpha)) / 3.0


def angle_of_height(y: float) -> float:
    return math.atan(9.0 * y * y)


def primary_equilibrium(params: Params) -> Equilibrium:
    _check_alpha(params.alpha0)
    return Equilibrium(height_of_angle(params.alpha0), params.alpha0, Branch.PRIMARY)


def secondary_equilibrium(params: Params, tol: float = 1e-14) -> Equilibrium:
    """Second positive root ``y1`` of ``q_of_height(y) = q(alpha0)``.

    ``q_of_height`` is unimodal with its peak at the critical height, so the
    root that is not ``y0`` lies on the opposite side of the peak and is
    bracketed between the peak and the far end of the height range.
    """
    alpha0 = params.alpha0
    _check_alpha(alpha0)
    a_star = critical_alpha_star()
    if abs(alpha0 - a_star) < DEGENERATE_WINDOW:
        raise CoincidentRootsError(
            f"alpha0={alpha0!r} is within {DEGENERATE_WINDOW} of the critical angle; "
            "the two equilibria coincide"
        )
    y0 = height_of_angle(alpha0)
    y_star = height_of_angle(a_star)
    q0 = params.q

    def g(y: float) -> float:
        return q_of_height(y) - q0

    far = Y_MAX if y0 < y_star else Y_MIN
    lo, hi = sorted((y_star, far))
    if not g(y_star) > 0.0 or g(far) >= 0.0:
        raise CoincidentRootsError(f"no separable second root for alpha0={alpha0!r}")
    try:
        y1 = brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"secondary equilibrium root finding failed: {exc}") from exc
    if abs(y1 - y0) < 10.0 * tol:
        raise CoincidentRootsError(f"|y1 - y0| = {abs(y1 - y0):.3g} below resolution")
    return Equilibrium(y1, angle_of_height(y1), Branch.SECONDARY)


def jacobian_partials(y_eq: float) -> tuple[float, float]:
    """Closed-form ``(f_x, h_y)`` at the equilibrium of height ``y_eq``.

    Valid at either equilibrium; the pressure coefficient has been eliminated
    using the equilibrium condition.
    """
    y = float(y_eq)
    if not y > 0.0:
        raise DomainError(f"y_eq must be positive, got {y!r}")
    s = 81.0 * y**4
    r = math.sqrt(s + 1.0)
    fx = -1458.0 * y**5 / r**3
    hy = 18.0 * y / r**3 * (s * (r - 4.0) / (r + 4.0) - 5.0)
    return fx, hy


def jacobian_partials_alpha(alpha0: float) -> tuple[float, float]:
    """``(f_x, h_y)`` at the primary equilibrium written in terms of ``alpha0``."""
    s, c = math.sin(alpha0), math.cos(alpha0)
    fx = -6.0 * math.sqrt(s**5 * c)
    hy = (
        -6.0
        * math.sqrt(math.tan(alpha0))
        / (1.0 / c + 4.0)
        * (16.0 * c + 3.0 * math.cos(2 * alpha0) + 4.0 * math.cos(3 * alpha0) + 2.0)
    )
    return fx, hy


def jacobian_matrix(fx: float, hy: float, fy: float = 0.0, hx: float = 0.0) -> np.ndarray:
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [fx, 0.0, fy, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [hx, 0.0, hy, 0.0],
        ]
    )


def _pm_sqrt(v: float) -> tuple[complex, complex]:
    r = complex(math.sqrt(v)) if v >= 0 else complex(0.0, math.sqrt(-v))
    return (r, -r)


def eigenvalues(y_eq: float) -> EigenSet:
    fx, hy = jacobian_partials(y_eq)
    return EigenSet(_pm_sqrt(fx), _pm_sqrt(hy), fx, hy)


def _stability(eig: EigenSet) -> Stability:
    if eig.fx < 0.0 and eig.hy < 0.0:
        return Stability.CENTER
    if eig.fx == 0.0 or eig.hy == 0.0:
        return Stability.DEGENERATE
    return Stability.SADDLE


def classify(params: Params) -> tuple[Equilibrium, Equilibrium]:
    """Both equilibria with stability labels.

    Inside the degenerate window around the critical angle both are returned
    as a single coincident point labelled ``DEGENERATE``.
    """
    p0 = primary_equilibrium(params)
    if abs(params.alpha0 - critical_alpha_star()) < DEGENERATE_WINDOW:
        x0 = Equilibrium(p0.y_eq, p0.contact_angle, Branch.PRIMARY, Stability.DEGENERATE)
        x1 = Equilibrium(p0.y_eq, p0.contact_angle, Branch.SECONDARY, Stability.DEGENERATE)
        return x0, x1
    p1 = secondary_equilibrium(params)
    x0 = Equilibrium(p0.y_eq, p0.contact_angle, p0.branch, _stability(eigenvalues(p0.y_eq)))
    x1 = Equilibrium(p1.y_eq, p1.contact_angle, p1.branch, _stability(eigenvalues(p1.y_eq)))
    return x0, x1


def stable_equilibrium(params: Params) -> Equilibrium:
    x0, x1 = classify(params)
    for eq in (x0, x1):
        if eq.stability is Stability.CENTER:
            return eq
    raise CoincidentRootsError(f"no stable equilibrium separable at alpha0={params.alpha0!r}")


@dataclass(frozen=True)
class ScanRow:
    alpha0: float
    y0: float
    y1: float
    stab0: Stability
    stab1: Stability
    failed: bool = False


def _scan_point(alpha0: float) -> ScanRow:
    params = Params(alpha0)
    y0 = height_of_angle(alpha0)
    try:
        x0, x1 = classify(params)
    except NumericalError:
        stab0 = Stability.DEGENERATE
        if abs(alpha0 - critical_alpha_star()) >= DEGENERATE_WINDOW:
            stab0 = _stability(eigenvalues(y0))
        return ScanRow(alpha0, y0, math.nan, stab0, Stability.DEGENERATE, True)
    return ScanRow(alpha0, x0.y_eq, x1.y_eq, x0.stability, x1.stability)


def bifurcation_scan(alpha_grid: Iterable[float]) -> list[ScanRow]:
    """Branch heights and stability labels over a grid of ``alpha0``.

    Root failures are flagged per row and never abort the scan.
    """
    return [_scan_point(float(a)) for a in alpha_grid]


def write_bifurcation_csv(rows: Iterable[ScanRow], path) -> None:
    from .io import fmt

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("alpha0,y0,y1,stab0,stab1\n")
        for r in rows:
            fh.write(f"{fmt(r.alpha0)},{fmt(r.y0)},{fmt(r.y1)},{r.stab0.value},{r.stab1.value}\n")
