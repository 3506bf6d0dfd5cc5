"""Centre-of-mass motion of a perturbed spherical-cap sessile drop.

The cap is scaled so the wetted disk has unit radius; the unperturbed sphere
has radius ``csc(alpha)`` and the origin sits at its centre. A normal mode
perturbs the outer radius to

    rho(s, phi, t) = csc(alpha) + eps * xi(s) * cos(l phi) * cos(Omega t)

with ``s`` the polar angle. The drop is the sector ``0 <= s <= alpha`` plus
(signed) the cone joining the origin to the wetted disk. Mode shapes ``xi``
are inputs; this module does not solve for them.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericalError


class ComClass(str, enum.Enum):
    BOUNCING = "bouncing"
    ROCKING = "rocking"
    STATIONARY = "stationary"


EPS_WARN = 0.05


@dataclass(frozen=True)
class CapMode:
    """One spherical-cap normal mode.

    ``xi`` is either a callable of ``s`` or a pair ``(s_samples, xi_samples)``
    covering ``[0, alpha]``; samples are interpolated by a cubic spline.
    ``k`` is carried only as a label.
    """

    alpha: float
    l: int
    epsilon: float
    xi: Union[Callable, tuple]
    Omega: float = 1.0
    k: Optional[int] = None
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < math.pi:
            raise DomainError(f"contact angle must lie in (0, pi), got {self.alpha!r}")
        if int(self.l) != self.l or self.l < 0:
            raise DomainError(f"l must be a non-negative integer, got {self.l!r}")
        object.__setattr__(self, "l", int(self.l))
        if not self.epsilon >= 0.0:
            raise DomainError(f"epsilon must be non-negative, got {self.epsilon!r}")
        if self.epsilon > EPS_WARN:
            warnings.warn(f"epsilon={self.epsilon} is not small; O(eps^2) terms may matter", RuntimeWarning, stacklevel=3)
        if not callable(self.xi):
            s, v = (np.asarray(a, dtype=float) for a in self.xi)
            if s.ndim != 1 or s.shape != v.shape or len(s) < 4:
                raise DomainError("sampled profile needs matching 1D arrays of at least 4 points")
            if np.any(np.diff(s) <= 0.0):
                raise DomainError("profile samples must have strictly ascending s")
            if abs(s[0]) > 1e-9 or abs(s[-1] - self.alpha) > 1e-9:
                raise DomainError("profile samples must span [0, alpha]")
            if not np.all(np.isfinite(v)):
                raise DomainError("profile samples must be finite")
            object.__setattr__(self, "_spline", CubicSpline(s, v))
        with np.errstate(all="ignore"):
            probe = self.profile(np.linspace(0.0, self.alpha, 257))
        if not np.all(np.isfinite(probe)):
            raise DomainError("xi must be finite on [0, alpha]")

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        if callable(self.xi):
            return np.broadcast_to(np.asarray(self.xi(s), dtype=float), s.shape)
        return self._spline(s)

    @property
    def radius(self) -> float:
        return 1.0 / math.sin(self.alpha)


@dataclass
class ComTrace:
    times: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray
    M: np.ndarray
    classification: ComClass


# ---------------------------------------------------------------------------
# closed forms for the unperturbed cap


def unperturbed_volume(alpha: float) -> float:
    return math.pi / 6.0 * (math.cos(alpha) + 2.0) * math.tan(alpha / 2.0) / math.cos(alpha / 2.0) ** 2


def unperturbed_z_moment(alpha: float) -> float:
    """``z``-moment about the sphere centre; independent of ``alpha``."""
    return math.pi / 4.0


def cone_volume(alpha: float) -> float:
    """Signed contribution of the cone between the origin and the wetted disk."""
    return -math.pi / 3.0 / math.tan(alpha)


def cone_z_moment(alpha: float) -> float:
    return -math.pi / 4.0 / math.tan(alpha) ** 2


# ---------------------------------------------------------------------------
# reduced first-order formulas


def _gauss(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _polar_integral(mode: CapMode, weight: Callable, n: int = 128) -> float:
    s, w = _gauss(n, 0.0, mode.alpha)
    return float(np.sum(w * mode.profile(s) * weight(s)))


def volume_first_order(mode: CapMode) -> float:
    """Coefficient of ``eps cos(Omega t)`` in the volume (non-zero for l = 0 only)."""
    if mode.l != 0:
        return 0.0
    return 2.0 * math.pi / math.sin(mode.alpha) ** 2 * _polar_integral(mode, np.sin)


def _check_unstable(mode: CapMode) -> None:
    if mode.l == 1 and mode.k == 1:
        raise DomainError("the (k, l) = (1, 1) mode is unstable; the oscillatory ansatz does not apply")


def classify_mode(mode: CapMode) -> ComClass:
    """Bouncing for l = 0, rocking for l = 1, stationary for l >= 2."""
    _check_unstable(mode)
    if mode.l == 0:
        return ComClass.BOUNCING
    if mode.l == 1:
        return ComClass.ROCKING
    return ComClass.STATIONARY


def cap_volume(mode: CapMode, t=0.0):
    """Drop volume to first order in ``eps``."""
    t = np.asarray(t, dtype=float)
    out = unperturbed_volume(mode.alpha) + mode.epsilon * np.cos(mode.Omega * t) * volume_first_order(mode)
    return float(out) if out.ndim == 0 else out


def com_moments(mode: CapMode, t=0.0) -> tuple:
    """``(M, M xbar, M ybar, M zbar)`` to first order in ``eps``.

    The three wavenumber cases are separate code paths; each uses the
    already-limited formula for its case.
    """
    _check_unstable(mode)
    t = np.asarray(t, dtype=float)
    amp = mode.epsilon * np.cos(mode.Omega * t)
    csc3 = 1.0 / math.sin(mode.alpha) ** 3
    M0 = unperturbed_volume(mode.alpha)
    Mz0 = unperturbed_z_moment(mode.alpha)
    zero = np.zeros_like(amp)
    if mode.l == 0:
        M = M0 + amp * volume_first_order(mode)
        Mx = zero
        Mz = Mz0 + amp * math.pi * csc3 * _polar_integral(mode, lambda s: np.sin(2.0 * s))
    elif mode.l == 1:
        M = M0 + zero
        Mx = amp * math.pi * csc3 * _polar_integral(mode, lambda s: np.sin(s) ** 2)
        Mz = Mz0 + zero
    else:
        M = M0 + zero
        Mx = zero
        Mz = Mz0 + zero
    return M, Mx, zero.copy(), Mz


def com_trace(mode: CapMode, t_grid) -> ComTrace:
    """Centre-of-mass coordinates over ``t_grid`` at first order in ``eps``."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if not np.all(np.isfinite(t)):
        raise DomainError("t_grid must be finite")
    cls = classify_mode(mode)
    M, Mx, My, Mz = com_moments(mode, t)
    return ComTrace(t, Mx / M, My / M, Mz / M, M, cls)


# ---------------------------------------------------------------------------
# independent oracle: direct quadrature over the perturbed domain


def _oracle(mode: CapMode, t: float, n_s: int, n_phi: int) -> np.ndarray:
    s, ws = _gauss(n_s, 0.0, mode.alpha)
    phi, wp = _gauss(n_phi, 0.0, 2.0 * math.pi)
    S, P = np.meshgrid(s, phi, indexing="ij")
    W = np.outer(ws, wp)
    rho = mode.radius + mode.epsilon * np.outer(mode.profile(s), np.cos(mode.l * phi)) * math.cos(mode.Omega * t)
    # radial integrals done exactly: int r^2 dr = rho^3/3, int r^3 dr = rho^4/4
    r3 = rho**3 / 3.0
    r4 = rho**4 / 4.0
    sinS = np.sin(S)
    M = cone_volume(mode.alpha) + np.sum(W * r3 * sinS)
    Mx = np.sum(W * r4 * sinS**2 * np.cos(P))
    My = np.sum(W * r4 * sinS**2 * np.sin(P))
    Mz = cone_z_moment(mode.alpha) + np.sum(W * r4 * sinS * np.cos(S))
    return np.array([M, Mx, My, Mz])


def com_oracle_3d(mode: CapMode, t: float = 0.0, n: int = 128, tol: float = 1e-10) -> tuple:
    """Full volume and moments by a Gauss-Legendre product rule in ``(s, phi)``.

    Keeps all orders in ``eps``. The error is estimated by comparing with
    the half-resolution rule.

    Raises
    ------
    NumericalError
        If the estimated error exceeds ``tol`` (relative to the volume).
    """
    fine = _oracle(mode, float(t), n, n)
    coarse = _oracle(mode, float(t), max(n // 2, 2), max(n // 2, 2))
    err = float(np.max(np.abs(fine - coarse)))
    if err > tol * max(1.0, abs(fine[0])):
        raise NumericalError(f"quadrature resolution n={n} too coarse (estimated error {err:.2e})")
    return tuple(float(v) for v in fine)


# ---------------------------------------------------------------------------
# built-in smooth test profiles


def builtin_profile(name: str, alpha: float) -> Callable:
    """Smooth profiles on ``[0, alpha]`` scaled to unit maximum modulus."""
    profiles = {
        "constant": lambda s: np.ones_like(s),
        "linear": lambda s: 1.0 - s / alpha,
        "cosine": lambda s: np.cos(math.pi * s / alpha),
        "bump": lambda s: np.sin(math.pi * s / alpha),
        "quadratic": lambda s: 1.0 - 2.0 * (s / alpha) ** 2,
    }
    if name not in profiles:
        raise DomainError(f"unknown profile {name!r}; available: {sorted(profiles)}")
    return profiles[name]


BUILTIN_PROFILES = ("constant", "linear", "cosine", "bump", "quadratic")


def random_profile(rng: np.random.Generator, alpha: float, terms: int = 4) -> Callable:
    """Random cosine series on ``[0, alpha]`` with unit maximum modulus."""
    coef = rng.uniform(-1.0, 1.0, terms) / np.arange(1, terms + 1)
    grid = np.linspace(0.0, alpha, 2001)
    basis = np.cos(np.outer(grid, np.arange(terms)) * math.pi / alpha)
    scale = np.max(np.abs(basis @ coef))

    def xi(s):
        s = np.asarray(s, dtype=float)
        return np.cos(np.multiply.outer(s, np.arange(terms)) * math.pi / alpha) @ coef / scale

    return xi


def read_profile_csv(path) -> tuple:
    """Read ``(s, xi)`` samples from a CSV with header ``s,xi``."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DomainError(f"cannot parse mode-shape CSV {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise DomainError("mode-shape CSV must have columns s,xi")
    return data[:, 0], data[:, 1]


def write_trace_csv(trace: ComTrace, path) -> None:
    from .io import fmt

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,xbar,ybar,zbar,M,class\n")
        for row in zip(trace.times, trace.xbar, trace.ybar, trace.zbar, trace.M):
            fh.write(",".join(fmt(v) for v in row) + f",{trace.classification.value}\n")
