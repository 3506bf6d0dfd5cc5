"""Core Steiner triangular drop model.

All quantities are dimensionless: lengths are scaled by the drop length scale
``ell = V**(1/3)`` and time by the inertial time ``sqrt(rho * V / sigma)``.
The phase-space point is ``(x, w, y, z)`` where ``(x, y)`` is the centre of
mass of the triangle and ``(w, z)`` its velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, SingularStateError

HALF_PI = 0.5 * math.pi

# Validity window for the vertical coordinate; trajectories leaving it are
# reported as domain exits rather than producing non-finite values.
Y_MIN = 1e-6
Y_MAX = 1e6


def q_of_alpha(alpha: float) -> float:
    """Dimensionless pressure coefficient ``2 sin^2(a) sqrt(tan a) / (4 + sec a)``."""
    alpha = float(alpha)
    if not 0.0 < alpha < HALF_PI:
        raise DomainError(f"alpha must lie in (0, pi/2), got {alpha!r}")
    s = math.sin(alpha)
    c = math.cos(alpha)
    return 2.0 * s * s * math.sqrt(s / c) / (4.0 + 1.0 / c)


def dq_dalpha(alpha: float) -> float:
    """Analytic derivative of :func:`q_of_alpha`."""
    s = math.sin(alpha)
    c = math.cos(alpha)
    # d log q / d alpha
    dlog = 2.0 * c / s + 0.5 / (s * c) - (s / (c * c)) / (4.0 + 1.0 / c)
    return q_of_alpha(alpha) * dlog


def q_of_height(y):
    """Pressure coefficient of an isosceles triangle whose centre of mass is at ``y``.

    Equals ``q(arctan(9 y**2))``; works elementwise on arrays.
    """
    y = np.asarray(y, dtype=float)
    r = np.sqrt(81.0 * y**4 + 1.0)
    out = 486.0 * y**5 / ((81.0 * y**4 + 1.0) * (r + 4.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Params:
    """Model parameter ``alpha0`` together with the derived coefficient ``q``.

    ``sigma``, ``rho`` and ``volume`` are optional physical metadata used only
    to convert dimensionless outputs back to physical units.
    """

    alpha0: float
    q: float = field(init=False)
    sigma: Optional[float] = None
    rho: Optional[float] = None
    volume: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "q", q_of_alpha(self.alpha0))

    @property
    def length_scale(self) -> float:
        if self.volume is None:
            raise DomainError("volume metadata is required for dimensional output")
        return self.volume ** (1.0 / 3.0)

    @property
    def time_scale(self) -> float:
        if None in (self.sigma, self.rho, self.volume):
            raise DomainError("sigma, rho and volume are required for dimensional output")
        return math.sqrt(self.rho * self.volume / self.sigma)


@dataclass(frozen=True)
class State:
    x: float
    w: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not self.y > 0.0:
            raise SingularStateError(f"centre of mass must lie above the substrate, got y={self.y!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.w, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, v) -> "State":
        x, w, y, z = (float(c) for c in v)
        return cls(x, w, y, z)


@dataclass(frozen=True)
class TriangleConfig:
    xA: float
    xB: float
    xC: float
    yC: float
    a: float
    b: float
    c: float
    alpha: float
    beta: float
    gamma: float

    @property
    def vertices(self) -> np.ndarray:
        return np.array([[self.xA, 0.0], [self.xB, 0.0], [self.xC, self.yC]])

    def area(self) -> float:
        (x1, y1), (x2, y2), (x3, y3) = self.vertices
        return 0.5 * abs(x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2))


@dataclass(frozen=True)
class ForcePair:
    Fx: float
    Fy: float


def triangle_from_com(x: float, y: float) -> TriangleConfig:
    """Reconstruct the unit-area triangle whose centre of mass is ``(x, y)``."""
    if not y > 0.0:
        raise SingularStateError(f"y must be positive, got {y!r}")
    half = 1.0 / (3.0 * y)
    xA, xB, xC, yC = -half, half, 3.0 * x, 3.0 * y
    a = math.hypot(half - 3.0 * x, yC)
    b = math.hypot(half + 3.0 * x, yC)
    c = 2.0 * half
    # cos(alpha) = (xC - xA)/b, sin(alpha) = yC/b and likewise at B
    alpha = math.atan2(yC, xC - xA)
    beta = math.atan2(yC, xB - xC)
    gamma = math.pi - alpha - beta
    return TriangleConfig(xA, xB, xC, yC, a, b, c, alpha, beta, gamma)


def accelerations(x, y, q, sqrt: Callable = np.sqrt):
    """Return ``(f, h)``, the horizontal and vertical accelerations.

    Generic over the numeric type: works on floats, numpy arrays and the
    truncated Taylor jets used for the manifold series. The expression is
    arranged so that ``f(-x, y) == -f(x, y)`` and ``h(-x, y) == h(x, y)``
    hold bit for bit.
    """
    u = 1.0 / (3.0 * y)
    p = u - 3.0 * x
    m = u + 3.0 * x
    yy = 9.0 * (y * y)
    a = sqrt(p * p + yy)
    b = sqrt(m * m + yy)
    f = p / a - m / b
    h = -3.0 * y * (1.0 / a + 1.0 / b) + q * u * (2.0 * (a + b) * u + a * b)
    return f, h


def _accel_scalar(x: float, y: float, q: float) -> tuple[float, float]:
    # scalar fast path for the integrator; same operation order as accelerations()
    u = 1.0 / (3.0 * y)
    p = u - 3.0 * x
    m = u + 3.0 * x
    yy = 9.0 * (y * y)
    a = math.sqrt(p * p + yy)
    b = math.sqrt(m * m + yy)
    return p / a - m / b, -3.0 * y * (1.0 / a + 1.0 / b) + q * u * (2.0 * (a + b) * u + a * b)


def net_force(x: float, y: float, params: Params) -> ForcePair:
    """Dimensionless net force; equal to the acceleration since the mass is 1."""
    if not y > 0.0:
        raise SingularStateError(f"y must be positive, got {y!r}")
    f, h = _accel_scalar(float(x), float(y), params.q)
    return ForcePair(f, h)


def rhs(state, params: Params) -> np.ndarray:
    """Vector field ``(w, f(x, y), z, h(x, y))`` at ``state``.

    ``state`` may be a :class:`State` or any length-4 sequence.
    """
    if isinstance(state, State):
        x, w, y, z = state.x, state.w, state.y, state.z
    else:
        x, w, y, z = (float(v) for v in state)
    if not Y_MIN <= y <= Y_MAX:
        raise SingularStateError(f"y={y!r} outside the validity window [{Y_MIN}, {Y_MAX}]")
    f, h = _accel_scalar(x, y, params.q)
    if not (math.isfinite(f) and math.isfinite(h)):
        raise SingularStateError(f"non-finite acceleration at x={x!r}, y={y!r}")
    return np.array([w, f, z, h])


# Phase-space involutions. Each accepts a State or an array whose last axis
# holds (x, w, y, z), so whole trajectories can be mapped at once.

_G1 = np.array([-1.0, 1.0, 1.0, -1.0])
_G2 = np.array([1.0, -1.0, 1.0, -1.0])
_S = np.array([-1.0, -1.0, 1.0, 1.0])


def _apply(sign: np.ndarray, state):
    if isinstance(state, State):
        return State.from_array(sign * state.as_array())
    return sign * np.asarray(state, dtype=float)


def apply_G1(state):
    """Time-reversing involution (x, w, y, z) -> (-x, w, y, -z)."""
    return _apply(_G1, state)


def apply_G2(state):
    """Time-reversing involution (x, w, y, z) -> (x, -w, y, -z)."""
    return _apply(_G2, state)


def apply_S(state):
    """Reflection symmetry S = G2 o G1: (x, w, y, z) -> (-x, -w, y, z)."""
    return _apply(_S, state)
