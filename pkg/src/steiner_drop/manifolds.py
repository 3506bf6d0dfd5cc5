"""Invariant manifolds through the stable equilibrium.

The bouncing manifold ``x = w = 0`` carries the one-degree-of-freedom
Hamiltonian ``H(y, z) = z**2/2 + U(y)`` with ``U' = -h(0, y)``.

The rocking manifold is the graph ``y = g(x, w)``. Writing ``F = f(x, g)``
and the derivative along the reduced flow ``L[p] = p_x w + p_w F``, the
surface is invariant iff ``L[L[g]] = h(x, g)``. Expanding around the
equilibrium, the degree-n part of that equation reads
``(L0**2 - h_y) g_n = -c_n`` where ``L0`` is the linearised operator and
``c_n`` collects lower-order terms, so the coefficients follow degree by
degree from small linear solves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .equilibria import (
    Branch,
    Equilibrium,
    Stability,
    classify,
    critical_alpha_star,
    jacobian_partials,
    jacobian_partials_alpha,
    primary_equilibrium,
    secondary_equilibrium,
)
from .errors import DomainError, NumericalError, SingularManifoldError
from .jets import Jet, jet_sqrt
from .model import HALF_PI, Params, accelerations

TRUST_RADIUS = 0.15
SINGULAR_GUARD = 1e-4
# relative size of the smallest resonance eigenvalue below which a solve is refused
RESONANCE_GUARD = 1e-4

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


# ---------------------------------------------------------------------------
# bouncing manifold


def h_axis(y, params: Params):
    """Vertical acceleration on the symmetry axis, ``h(0, y)``."""
    return accelerations(0.0, y, params.q)[1]


@dataclass
class ReducedHamiltonian:
    """Potential of the bouncing-manifold dynamics, tabulated on ``y_nodes``.

    Values between nodes are completed by a 32-point Gauss-Legendre integral
    from the nearest node, which is exact to round-off on the short interval.
    """

    alpha0: float
    y_ref: float
    y_nodes: np.ndarray
    U_nodes: np.ndarray
    params: Params = field(repr=False)

    def U(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0.0):
            raise DomainError("potential is defined for y > 0 only")
        k = np.clip(np.searchsorted(self.y_nodes, y) - 1, 0, len(self.y_nodes) - 1)
        k = np.where(
            (k + 1 < len(self.y_nodes))
            & (np.abs(self.y_nodes[np.minimum(k + 1, len(self.y_nodes) - 1)] - y) < np.abs(self.y_nodes[k] - y)),
            k + 1,
            k,
        )
        y0 = self.y_nodes[k]
        half = 0.5 * (y - y0)
        mid = 0.5 * (y + y0)
        nodes = mid[..., None] + half[..., None] * _GL_X
        integral = half * np.sum(_GL_W * h_axis(nodes, self.params), axis=-1)
        out = self.U_nodes[k] - integral
        return float(out) if out.ndim == 0 else out

    def dU(self, y):
        return -h_axis(np.asarray(y, dtype=float), self.params)

    def H(self, y, z):
        return 0.5 * np.asarray(z, dtype=float) ** 2 + self.U(y)


def reduced_potential(params: Params, y_grid=None) -> ReducedHamiltonian:
    """Tabulate ``U(y) = -int_{y_ref}^{y} h(0, s) ds`` with adaptive quadrature.

    ``y_ref`` is the primary equilibrium height, where ``U = 0``.
    """
    if y_grid is None:
        y_grid = np.geomspace(0.01, 20.0, 600)
    y_grid = np.asarray(y_grid, dtype=float)
    if np.any(y_grid <= 0.0) or np.any(np.diff(y_grid) <= 0.0):
        raise DomainError("y_grid must be strictly positive and increasing")
    y_ref = primary_equilibrium(params).y_eq
    nodes = np.union1d(y_grid, [y_ref])
    iref = int(np.searchsorted(nodes, y_ref))
    U = np.zeros_like(nodes)

    def seg(a: float, b: float) -> float:
        val, err = quad(lambda s: h_axis(s, params), a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        if not math.isfinite(val) or err > 1e-10 * max(1.0, abs(val)):
            raise NumericalError(f"potential quadrature failed on [{a}, {b}] (err={err:.2g})")
        return val

    for k in range(iref + 1, len(nodes)):
        U[k] = U[k - 1] - seg(nodes[k - 1], nodes[k])
    for k in range(iref - 1, -1, -1):
        U[k] = U[k + 1] + seg(nodes[k], nodes[k + 1])
    return ReducedHamiltonian(params.alpha0, y_ref, nodes, U, params)


def saddle_energy(params: Params, ham: Optional[ReducedHamiltonian] = None) -> float:
    """Energy of the saddle on the bouncing manifold (the separatrix level)."""
    ham = ham or reduced_potential(params)
    x0, x1 = classify(params)
    saddle = x1 if x1.stability is Stability.SADDLE else x0
    return float(ham.U(saddle.y_eq))


def separatrix(
    params: Params,
    ds: float = 1e-3,
    eps: float = 1e-7,
    t_max: float = 60.0,
    scheme: str = "rk-adaptive",
) -> dict:
    """Stable and unstable manifolds of the saddle in the reduced ``(z, y)`` plane.

    Returns a mapping from branch name to a dict with the ``(z, y)`` polyline
    and a termination flag (``escaped``, ``returned`` or ``t_max``). Stable
    branches are obtained by integrating backward in time, done here as
    forward integration of the G2-reflected seed followed by reflecting back.
    """
    from .dynamics import integrate

    if params.alpha0 >= critical_alpha_star():
        raise DomainError("the saddle x1 exists on the secondary branch only below the critical angle")
    y1 = secondary_equilibrium(params).y_eq
    _, hy = jacobian_partials(y1)
    lam = math.sqrt(hy)
    out = {}
    for name, sgn, direction in (
        ("unstable+", 1.0, 1.0),
        ("unstable-", -1.0, 1.0),
        ("stable+", 1.0, -1.0),
        ("stable-", -1.0, -1.0),
    ):
        # eigenvector (1, lam) is unstable, (1, -lam) is stable
        seed = np.array([0.0, 0.0, y1 + sgn * eps, sgn * eps * lam * direction])
        start = seed if direction > 0 else seed * np.array([1.0, -1.0, 1.0, -1.0])
        traj = integrate(start, params, dt=ds, t_end=t_max, scheme=scheme, stop_y=(0.02, 10.0))
        states = traj.states
        dist = np.hypot(states[:, 2] - y1, states[:, 3])
        flag = "t_max"
        stop = len(states)
        left = np.nonzero(dist > 1e3 * eps)[0]
        if left.size:
            back = np.nonzero(dist[left[0]:] < 1e2 * eps)[0]
            if back.size:
                stop = left[0] + back[0] + 1
                flag = "returned"
        if flag != "returned" and any(e.kind in ("escape", "domain-exit") for e in traj.events):
            flag = "escaped"
        states = states[:stop]
        zs = states[:, 3] if direction > 0 else -states[:, 3]
        out[name] = {"z": zs, "y": states[:, 2], "flag": flag}
    return out


def write_separatrix_csv(branches: dict, path) -> None:
    from .io import fmt

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("z,y,branch\n")
        for name in sorted(branches):
            b = branches[name]
            for z, y in zip(b["z"], b["y"]):
                fh.write(f"{fmt(z)},{fmt(y)},{name}\n")


# ---------------------------------------------------------------------------
# rocking manifold


@dataclass(frozen=True)
class ManifoldSeries:
    alpha0: float
    branch: Branch
    y_center: float
    order: int
    coeffs: dict  # (i, j) -> coefficient of x**i w**j, degree >= 1

    def coefficient(self, i: int, j: int) -> float:
        if i == 0 and j == 0:
            return self.y_center
        return self.coeffs.get((i, j), 0.0)

    def jet(self) -> Jet:
        return Jet.from_coeffs(self.coeffs, self.order, constant=self.y_center)

    def gradient(self, x, w):
        g = self.jet()
        return g.derivative(0)(x, w), g.derivative(1)(x, w)

    def z_on_manifold(self, x, w, params: Params):
        """Vertical velocity on the surface, ``g_x w + g_w f(x, g)``."""
        gx, gw = self.gradient(x, w)
        f, _ = accelerations(x, evaluate_g(self, x, w, warn=False), params.q)
        return gx * np.asarray(w, dtype=float) + gw * f

    def state_on_manifold(self, x: float, w: float, params: Params) -> np.ndarray:
        y = evaluate_g(self, x, w)
        return np.array([x, w, y, float(self.z_on_manifold(x, w, params))])

    def to_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "branch": self.branch.value,
            "y_center": self.y_center,
            "order": self.order,
            "coeffs": [
                {"i": i, "j": j, "value": v} for (i, j), v in sorted(self.coeffs.items(), key=lambda t: (t[0][0] + t[0][1], -t[0][0]))
            ],
        }


def evaluate_g(series: ManifoldSeries, x, w, warn: bool = True):
    """Height of the rocking surface above ``(x, w)``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if warn and np.any(np.hypot(x, w) > TRUST_RADIUS):
        warnings.warn(
            f"evaluating the manifold series beyond its trust radius {TRUST_RADIUS}",
            RuntimeWarning,
            stacklevel=2,
        )
    return series.jet()(x, w)


def _linear_operator(n: int, fx: float, hy: float) -> np.ndarray:
    """Matrix of ``L0**2 - h_y`` on degree-n monomials, basis x**i w**(n-i)."""
    D = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        j = n - i
        if i >= 1:
            D[i - 1, i] += i  # x**i w**j -> i x**(i-1) w**(j+1)
        if j >= 1:
            D[i + 1, i] += j * fx  # -> j fx x**(i+1) w**(j-1)
    return D @ D - hy * np.eye(n + 1)


def _even_indices(n: int) -> list[int]:
    return [i for i in range(n + 1) if i % 2 == 0 and (n - i) % 2 == 0]


def series_matrix(n: int, fx: float, hy: float, even: bool = True) -> np.ndarray:
    M = _linear_operator(n, fx, hy)
    if even:
        idx = _even_indices(n)
        M = M[np.ix_(idx, idx)]
    return M


def _resonance_gap(fx: float, hy: float, order: int) -> float:
    # eigenvalues of L0**2 - h_y on even monomials are k**2 fx - hy, k = 0, 2, ..., n
    gaps = [abs(k * k * fx - hy) / (abs(hy) + k * k * abs(fx)) for k in range(0, order + 1, 2)]
    return min(gaps)


def _equilibrium_for(params: Params, branch) -> Equilibrium:
    if branch is None or branch == "stable":
        x0, x1 = classify(params)
        for eq in (x0, x1):
            if eq.stability is Stability.CENTER:
                return eq
        raise SingularManifoldError(f"no stable equilibrium at alpha0={params.alpha0!r}")
    branch = Branch(branch)
    if branch is Branch.PRIMARY:
        return primary_equilibrium(params)
    return secondary_equilibrium(params)


def invariance_residual(g: Jet, q: float) -> Jet:
    """Truncated Taylor series of ``L[L[g]] - h(x, g)``."""
    X = Jet.variable(0, g.order)
    W = Jet.variable(1, g.order)
    F, H = accelerations(X, g, q, sqrt=jet_sqrt)

    def L(p: Jet) -> Jet:
        return p.derivative(0) * W + p.derivative(1) * F

    return L(L(g)) - H


def rocking_series(
    params: Params,
    order: int = 4,
    branch: Union[str, Branch, None] = "stable",
    enforce_parity: bool = True,
    guard: float = SINGULAR_GUARD,
) -> ManifoldSeries:
    """Power series of the rocking manifold ``y = g(x, w)`` up to ``order``.

    Parameters
    ----------
    params : Params
    order : int
        Highest total degree kept.
    branch : {"stable", "primary", "secondary"}
        Equilibrium the surface passes through.
    enforce_parity : bool
        Solve only for monomials even in both variables. With ``False`` the
        full system is solved and odd coefficients come out at round-off.
    guard : float
        Refuse within this distance (in alpha0) of a singular value.

    Raises
    ------
    SingularManifoldError
        Near a resonance of the degree-by-degree linear systems.
    """
    if order < 1:
        raise DomainError("order must be >= 1")
    eq = _equilibrium_for(params, branch)
    if eq.branch is Branch.PRIMARY:
        for a in singular_alphas(4 if order >= 4 else 2):
            if abs(params.alpha0 - a) < guard:
                raise SingularManifoldError(
                    f"alpha0={params.alpha0!r} is within {guard} of the singular value {a:.6f}"
                )

    yc = eq.y_eq
    # linear coefficients of f and h at the equilibrium, from the same jet arithmetic
    lin = accelerations(Jet.variable(0, 1), Jet.variable(1, 1, yc), params.q, sqrt=jet_sqrt)
    fx, hy = lin[0].c[1, 0], lin[1].c[0, 1]
    if _resonance_gap(fx, hy, order) < RESONANCE_GUARD:
        raise SingularManifoldError(
            f"series linear system is resonant at alpha0={params.alpha0!r} (branch {eq.branch.value})"
        )

    coeffs: dict = {}
    for n in range(1, order + 1):
        g = Jet.from_coeffs(coeffs, order, constant=yc)
        c_n = invariance_residual(g, params.q).degree_part(n)  # index i <-> x**i w**(n-i)
        idx = _even_indices(n) if enforce_parity else list(range(n + 1))
        if not idx:
            continue
        M = _linear_operator(n, fx, hy)[np.ix_(idx, idx)]
        try:
            sol = np.linalg.solve(M, -c_n[idx])
        except np.linalg.LinAlgError as exc:
            raise SingularManifoldError(f"singular linear system at degree {n}") from exc
        for k, i in enumerate(idx):
            if sol[k] != 0.0 or not enforce_parity:
                coeffs[(i, n - i)] = float(sol[k])
    return ManifoldSeries(params.alpha0, eq.branch, yc, order, coeffs)


# closed forms for the quadratic coefficients on the primary branch


def _a3_parts(alpha0: float) -> tuple[float, float]:
    c = math.cos(alpha0)
    A = 14 * c + 4 * math.cos(2 * alpha0) + 6 * math.cos(3 * alpha0) + 1
    B = 8 * c + 7 * math.cos(2 * alpha0) + 8 * math.cos(3 * alpha0) + 1
    csc = 1.0 / math.sin(alpha0)
    num = -3.0 * A * B * math.sqrt(1.0 / math.tan(alpha0)) * csc**2
    den = 4.0 * (A * A * csc**4 - 4.0 * (4 * c + 1) ** 2)
    return num, den


def _a5_parts(alpha0: float) -> tuple[float, float]:
    c = math.cos(alpha0)
    B = 8 * c + 7 * math.cos(2 * alpha0) + 8 * math.cos(3 * alpha0) + 1
    num = math.sin(alpha0) * (4 * c + 1) * B
    den = 2.0 * (
        208 * c
        + 388 * math.cos(2 * alpha0)
        + 148 * math.cos(3 * alpha0)
        + 191 * math.cos(4 * alpha0)
        + 44 * math.cos(5 * alpha0)
        + 32 * math.cos(6 * alpha0)
        + 239
    )
    return num, den


def rocking_closed_form(alpha0: float) -> tuple[float, float]:
    """Closed-form ``(a3, a5)``: coefficients of ``x**2`` and ``w**2`` at x0."""
    if not 0.0 < alpha0 < HALF_PI:
        raise DomainError(f"alpha0 must lie in (0, pi/2), got {alpha0!r}")
    n3, d3 = _a3_parts(alpha0)
    n5, d5 = _a5_parts(alpha0)
    if abs(d3) < 1e-13 * (1.0 + abs(n3)) or abs(d5) < 1e-13 * (1.0 + abs(n5)):
        raise SingularManifoldError(f"closed-form denominator vanishes at alpha0={alpha0!r}")
    return n3 / d3, n5 / d5


def _bracketed_roots(fn, lo: float, hi: float, n: int = 4000) -> list[float]:
    grid = np.linspace(lo, hi, n)
    vals = np.array([fn(a) for a in grid])
    roots = []
    for k in range(n - 1):
        if vals[k] == 0.0:
            roots.append(float(grid[k]))
        elif vals[k] * vals[k + 1] < 0.0:
            roots.append(brentq(fn, grid[k], grid[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def quartic_determinant(alpha0: float) -> float:
    """Determinant of the degree-4 even-parity system on the primary branch."""
    fx, hy = jacobian_partials_alpha(alpha0)
    return float(np.linalg.det(series_matrix(4, fx, hy)))


@lru_cache(maxsize=None)
def _singular_alphas(order: int) -> tuple[float, ...]:
    lo, hi = 0.05, HALF_PI - 1e-3
    roots = _bracketed_roots(lambda a: _a3_parts(a)[1], lo, hi)
    if order >= 4:
        roots += _bracketed_roots(quartic_determinant, lo, hi)
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if not merged or abs(r - merged[-1]) > 1e-8:
            merged.append(r)
    return tuple(merged)


def singular_alphas(order: int = 2) -> list[float]:
    """Parameter values where the primary-branch series breaks down.

    ``order=2`` gives the zeros of the closed-form ``x**2`` denominator; the
    quartic order adds the zeros of the degree-4 system determinant.
    """
    if order not in (2, 4):
        raise DomainError("order must be 2 or 4")
    return list(_singular_alphas(order))


def alpha_dagger() -> float:
    """The non-critical quadratic-order singular value (about 0.870)."""
    a_star = critical_alpha_star()
    return min(singular_alphas(2), key=lambda a: abs(a - 0.87) if abs(a - a_star) > 1e-3 else math.inf)


def manifold_deviation(series: ManifoldSeries, states: np.ndarray) -> np.ndarray:
    """``|y - g(x, w)|`` along an array of states."""
    states = np.asarray(states, dtype=float)
    return np.abs(states[:, 2] - evaluate_g(series, states[:, 0], states[:, 1], warn=False))
