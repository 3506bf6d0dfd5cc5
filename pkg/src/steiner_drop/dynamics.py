"""Time integration, escape detection, Poincare sections and torus sweeps."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .equilibria import Equilibrium, stable_equilibrium
from .errors import (
    DomainError,
    NumericalError,
    SingularManifoldError,
    SingularStateError,
)
from .model import Y_MAX, Y_MIN, Params, State, _accel_scalar, accelerations, apply_G2

SCHEMES = ("symmetric", "symmetric4", "rk-adaptive")

# escape thresholds on y (dimensionless)
Y_FLAT = 0.02
Y_TALL = 10.0
CONFIRM_TIME = 10.0

SECTION_TOL = 1e-10


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "escape", "section-crossing", "domain-exit", "step-failure"
    detail: str = ""


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n, 4): x, w, y, z
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def as_rows(self) -> np.ndarray:
        return np.column_stack([self.times, self.states])


def _as_vector(state0) -> np.ndarray:
    if isinstance(state0, State):
        return state0.as_array()
    v = np.asarray(state0, dtype=float).reshape(4)
    if not v[2] > 0.0:
        raise SingularStateError(f"initial y must be positive, got {v[2]!r}")
    return v


_CBRT2 = 2.0 ** (1.0 / 3.0)
# substep weights of each scheme; the triple jump composes Verlet steps symmetrically
_SUBSTEPS = {
    "symmetric": (1.0,),
    "symmetric4": (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2)),
}


def _verlet(v0, q, dt, nsteps, stride, y_lo, y_hi, weights=(1.0,)):
    """Position (drift-kick-drift) Verlet, optionally composed; returns rows, steps done and event."""
    x, w, y, z = (float(c) for c in v0)
    subs = [(c * dt, 0.5 * c * dt) for c in weights]
    xs, ws, ys, zs = [x], [w], [y], [z]
    event = None
    n_done = 0
    for k in range(1, nsteps + 1):
        for sdt, hdt in subs:
            x += hdt * w
            y += hdt * z
            if not y_lo <= y <= y_hi:
                event = ("domain-exit", k)
                break
            f, h = _accel_scalar(x, y, q)
            if not (math.isfinite(f) and math.isfinite(h)):
                event = ("step-failure", k)
                break
            w += sdt * f
            z += sdt * h
            x += hdt * w
            y += hdt * z
        if event is not None:
            break
        n_done = k
        if k % stride == 0 or k == nsteps:
            xs.append(x)
            ws.append(w)
            ys.append(y)
            zs.append(z)
        if not y_lo <= y <= y_hi:
            event = ("domain-exit", k)
            if k % stride and k != nsteps:
                xs.append(x)
                ws.append(w)
                ys.append(y)
                zs.append(z)
            break
    return np.column_stack([xs, ws, ys, zs]), n_done, event


def integrate(
    state0,
    params: Params,
    dt: float = 1e-3,
    t_end: float = 500.0,
    scheme: str = "symmetric",
    stride: int = 1,
    stop_y: Optional[tuple] = None,
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> Trajectory:
    """Integrate the four-dimensional system from ``state0``.

    Parameters
    ----------
    state0 : State or array-like
        Initial ``(x, w, y, z)``.
    params : Params
    dt : float
        Step of the symmetric scheme; output spacing for both schemes.
    t_end : float
    scheme : {"symmetric", "symmetric4", "rk-adaptive"}
        ``symmetric`` is the time-reversible position Verlet method (order 2).
        ``symmetric4`` composes three Verlet substeps into a fourth-order
        method that is still exactly time-symmetric.
        ``rk-adaptive`` (DOP853) is meant for cross-validation.
    stride : int
        Keep every ``stride``-th step in the output.
    stop_y : (lo, hi), optional
        Stop early once ``y`` leaves this interval (recorded as an escape
        event). The hard validity window ``[Y_MIN, Y_MAX]`` always applies.

    Returns
    -------
    Trajectory
        Truncated at the first domain exit or failed step, with an event.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if not dt > 0.0 or not t_end >= 0.0:
        raise DomainError("dt must be positive and t_end non-negative")
    stride = max(1, int(stride))
    v0 = _as_vector(state0)
    nsteps = int(round(t_end / dt))
    y_lo, y_hi = Y_MIN, Y_MAX
    if stop_y is not None:
        y_lo, y_hi = max(y_lo, stop_y[0]), min(y_hi, stop_y[1])
    events = []

    if scheme in _SUBSTEPS:
        rows, n_done, event = _verlet(v0, params.q, dt, nsteps, stride, y_lo, y_hi, _SUBSTEPS[scheme])
        steps = np.arange(0, n_done + 1, stride)
        if steps[-1] != n_done and len(steps) < len(rows):
            steps = np.append(steps, n_done)
        times = steps * dt
        if event is not None:
            kind, k = event
            if kind == "domain-exit" and stop_y is not None and Y_MIN < rows[-1, 2] < Y_MAX:
                kind = "escape"
            events.append(Event(k * dt, kind, f"y={rows[-1, 2]:.6g}"))
    else:
        t_eval = np.arange(0, nsteps + 1, stride) * dt
        if nsteps % stride:
            t_eval = np.append(t_eval, nsteps * dt)
        q = params.q

        def fun(t, v):
            f, h = _accel_scalar(v[0], v[2], q)
            return [v[1], f, v[3], h]

        def leave_lo(t, v):
            return v[2] - y_lo

        def leave_hi(t, v):
            return v[2] - y_hi

        leave_lo.terminal = leave_hi.terminal = True
        sol = solve_ivp(
            fun, (0.0, nsteps * dt), v0, method="DOP853", t_eval=t_eval,
            rtol=rtol, atol=atol, events=[leave_lo, leave_hi],
        )
        if sol.status == -1:
            raise NumericalError(f"adaptive integration failed: {sol.message}")
        times, rows = sol.t, sol.y.T
        for te in list(sol.t_events[0]) + list(sol.t_events[1]):
            kind = "escape" if stop_y is not None else "domain-exit"
            events.append(Event(float(te), kind, ""))
    meta = {
        "scheme": scheme,
        "dt": dt,
        "t_end": t_end,
        "stride": stride,
        "alpha0": params.alpha0,
        "q": params.q,
    }
    return Trajectory(np.asarray(times, dtype=float), np.asarray(rows, dtype=float), events, meta)


def reversibility_error(state0, params: Params, dt: float = 1e-3, t_end: float = 10.0) -> float:
    """Max-norm distance after forward, G2, forward, G2."""
    v0 = _as_vector(state0)
    fwd = integrate(v0, params, dt=dt, t_end=t_end, stride=10**9)
    back = integrate(apply_G2(fwd.final), params, dt=dt, t_end=t_end, stride=10**9)
    return float(np.max(np.abs(apply_G2(back.final) - v0)))


# ---------------------------------------------------------------------------
# initial conditions


def initial_condition(params: Params, radius: float, phi: float, base: Optional[Equilibrium] = None) -> State:
    """Position-only perturbation of the stable equilibrium at angle ``phi`` from vertical.

    The velocities are zero, so the seed lies in the fixed set of G2.
    """
    if not radius > 0.0:
        raise DomainError("radius must be positive")
    if not 0.0 <= phi <= math.pi:
        raise DomainError(f"phi must lie in [0, pi], got {phi!r}")
    base = base or stable_equilibrium(params)
    return State(radius * math.sin(phi), 0.0, base.y_eq + radius * math.cos(phi), 0.0)


def rocking_phi(params: Params, radius: float, series=None) -> float:
    """Angle at which the seed circle meets the curve ``y = g(x, 0)``."""
    from .manifolds import evaluate_g, rocking_series

    series = series or rocking_series(params)
    yc = series.y_center

    def gap(phi: float) -> float:
        return yc + radius * math.cos(phi) - evaluate_g(series, radius * math.sin(phi), 0.0, warn=False)

    return brentq(gap, 0.0, math.pi, xtol=1e-15)


# ---------------------------------------------------------------------------
# escape detection


def _confirm(state, params: Params, meta: dict, side: str, y_flat: float, y_tall: float) -> bool:
    cont = integrate(
        state, params, dt=meta.get("dt", 1e-3), t_end=CONFIRM_TIME,
        scheme=meta.get("scheme", "symmetric"), stride=10,
    )
    y = cont.states[:, 2]
    if side == "stretched":
        return bool(np.all(np.diff(y) > 0.0) and np.all(y > y_tall))
    return bool(np.all(np.diff(y) < 0.0) and np.all(y < y_flat))


def escape_detect(
    trajectory: Trajectory,
    params: Params,
    y_flat: float = Y_FLAT,
    y_tall: float = Y_TALL,
) -> str:
    """Classify a trajectory as ``bounded``, ``escaped-flat`` or ``escaped-stretched``.

    A threshold crossing counts only if continuing the integration for
    ``CONFIRM_TIME`` from that point shows monotone divergence.
    """
    y = trajectory.states[:, 2]
    candidates = []
    tall = np.nonzero(y > y_tall)[0]
    flat = np.nonzero(y < y_flat)[0]
    if tall.size:
        candidates.append((tall[0], "stretched"))
    if flat.size:
        candidates.append((flat[0], "flat"))
    for idx, side in sorted(candidates):
        if _confirm(trajectory.states[idx], params, trajectory.meta, side, y_flat, y_tall):
            trajectory.events.append(Event(float(trajectory.times[idx]), "escape", side))
            return f"escaped-{side}"
    for ev in trajectory.events:
        if ev.kind == "domain-exit":
            side = "flat" if y[-1] < 1.0 else "stretched"
            return f"escaped-{side}"
    return "bounded"


# ---------------------------------------------------------------------------
# Poincare section x = 0, w > 0


@dataclass
class SectionMap:
    times: np.ndarray
    crossings: np.ndarray  # shape (n, 3): w, y, z
    source: str = ""
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.times)


def _hermite(p0, p1, d0, d1, h, s):
    """Cubic Hermite interpolant on [0, h] at normalized s in [0, 1]."""
    s2, s3 = s * s, s * s * s
    return (
        (2 * s3 - 3 * s2 + 1) * p0
        + (s3 - 2 * s2 + s) * h * d0
        + (-2 * s3 + 3 * s2) * p1
        + (s3 - s2) * h * d1
    )


def _derivatives(states: np.ndarray, q: float) -> np.ndarray:
    f, h = accelerations(states[:, 0], states[:, 2], q)
    return np.column_stack([states[:, 1], f, states[:, 3], h])


def interpolate_state(trajectory: Trajectory, k: int, s: float, q: float) -> np.ndarray:
    """State at fraction ``s`` of the step between samples ``k`` and ``k + 1``."""
    a, b = trajectory.states[k], trajectory.states[k + 1]
    da, db = _derivatives(trajectory.states[k:k + 2], q)
    h = trajectory.times[k + 1] - trajectory.times[k]
    return _hermite(a, b, da, db, h, s)


def _refine_crossing(trajectory: Trajectory, k: int, index: int, level: float, q: float, tol: float) -> float:
    a, b = trajectory.states[k], trajectory.states[k + 1]
    da, db = _derivatives(trajectory.states[k:k + 2], q)
    h = trajectory.times[k + 1] - trajectory.times[k]

    def val(s: float) -> float:
        return _hermite(a[index], b[index], da[index], db[index], h, s) - level

    lo, hi = 0.0, 1.0
    flo = val(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = val(mid)
        if abs(fm) < tol or hi - lo < 1e-16:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def poincare(trajectory: Trajectory, params: Optional[Params] = None, tol: float = SECTION_TOL) -> SectionMap:
    """Crossings of ``x = 0`` with ``w > 0``, refined on the cubic Hermite interpolant."""
    q = params.q if params is not None else trajectory.meta["q"]
    x = trajectory.states[:, 0]
    w = trajectory.states[:, 1]
    if np.all(np.abs(x) < tol) and np.all(np.abs(w) < tol):
        warnings.warn("trajectory lies in x = 0: section is not transversal", RuntimeWarning, stacklevel=2)
        return SectionMap(np.empty(0), np.empty((0, 3)), trajectory.meta.get("id", ""), degenerate=True)
    idx = np.nonzero((x[:-1] < 0.0) & (x[1:] >= 0.0))[0]
    times, pts = [], []
    for k in idx:
        s = _refine_crossing(trajectory, k, 0, 0.0, q, tol)
        st = interpolate_state(trajectory, k, s, q)
        if st[1] <= 0.0:
            continue
        times.append(trajectory.times[k] + s * (trajectory.times[k + 1] - trajectory.times[k]))
        pts.append(st[1:])
    if len(times) < 2:
        warnings.warn("fewer than two section crossings", RuntimeWarning, stacklevel=2)
    return SectionMap(np.asarray(times), np.asarray(pts).reshape(-1, 3), trajectory.meta.get("id", ""))


def section_gap(section: SectionMap) -> float:
    """Largest gap between consecutive crossings ordered by angle around their centroid.

    For crossings filling a closed curve this shrinks as the curve fills in.
    """
    pts = section.crossings
    if len(pts) < 3:
        return math.inf
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 2] - c[2], pts[:, 1] - c[1])
    order = np.argsort(ang)
    p = pts[order]
    d = np.linalg.norm(np.diff(np.vstack([p, p[:1]]), axis=0), axis=1)
    return float(d.max())


def first_return(trajectory: Trajectory, index: int, params: Optional[Params] = None) -> tuple[float, np.ndarray]:
    """First time component ``index`` recrosses its initial value in the initial direction.

    Intended for orbits seeded on the fixed set of G2, where the first such
    crossing closes one period.
    """
    q = params.q if params is not None else trajectory.meta["q"]
    level = trajectory.states[0, index]
    d0 = _derivatives(trajectory.states[:1], q)[0, index]
    if d0 == 0.0:
        raise NumericalError("component is stationary at the start")
    sgn = math.copysign(1.0, d0)
    v = sgn * (trajectory.states[:, index] - level)
    idx = np.nonzero((v[1:-1] < 0.0) & (v[2:] >= 0.0))[0] + 1
    if not idx.size:
        raise NumericalError("no return within the trajectory")
    k = int(idx[0])
    s = _refine_crossing(trajectory, k, index, level, q, 1e-14)
    t = trajectory.times[k] + s * (trajectory.times[k + 1] - trajectory.times[k])
    return float(t), interpolate_state(trajectory, k, s, q)


# ---------------------------------------------------------------------------
# torus visualisation


def torus_embed(trajectory, variant: str = "verbatim") -> np.ndarray:
    """Map 4D states to 3D points for torus pictures.

    ``verbatim`` uses ``[y + x y/r, z + x y/r, w]`` with ``r = sqrt(y**2 + z**2)``;
    ``corrected`` uses ``z + x z/r`` in the second slot.
    """
    states = trajectory.states if isinstance(trajectory, Trajectory) else np.atleast_2d(trajectory)
    x, w, y, z = states.T
    r = np.hypot(y, z)
    if np.any(r == 0.0):
        raise DomainError("embedding undefined where y = z = 0")
    if variant == "verbatim":
        e2 = z + x * y / r
    elif variant == "corrected":
        e2 = z + x * z / r
    else:
        raise DomainError(f"unknown embedding variant {variant!r}")
    return np.column_stack([y + x * y / r, e2, w])


# ---------------------------------------------------------------------------
# sweeps over the seed angle


PRESETS = {
    "torus-pi4": {"alpha0": math.pi / 4, "phis": [0.0, 0.1, math.pi / 4, 1.475]},
    "torus-dagger": {"alpha0": "dagger", "phis": [0.0, 0.1, math.pi / 4, math.pi / 2]},
    "torus-2pi5": {"alpha0": 2 * math.pi / 5, "phis": [0.0, 0.1, math.pi / 4, 1.418]},
    "torus-1.45": {"alpha0": 1.45, "phis": [0.0, 0.1, math.pi / 4, 1.366]},
}


def preset_alpha0(name: str) -> float:
    from .manifolds import alpha_dagger

    if name not in PRESETS:
        raise DomainError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    a = PRESETS[name]["alpha0"]
    return alpha_dagger() if a == "dagger" else float(a)


@dataclass
class SweepEntry:
    phi: float
    label: str
    trajectory: Optional[Trajectory]
    classification: str
    max_manifold_dev: float
    section_count: int
    note: str = ""


@dataclass
class SweepResult:
    alpha0: float
    radius: float
    entries: list
    meta: dict


def _run_seed(args) -> tuple:
    alpha0, radius, phi, dt, t_end, stride, scheme, series = args
    params = Params(alpha0)
    seed = initial_condition(params, radius, phi)
    traj = integrate(seed, params, dt=dt, t_end=t_end, scheme=scheme, stride=stride)
    cls = escape_detect(traj, params)
    dev = math.nan
    if series is not None:
        from .manifolds import manifold_deviation

        dev = float(manifold_deviation(series, traj.states).max())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        count = len(poincare(traj, params))
    return traj, cls, dev, count


def sweep(
    params: Params,
    radius: float = 0.05,
    phi_list: Sequence[float] = (0.0, 0.1, math.pi / 4),
    dt: float = 1e-3,
    t_end: float = 500.0,
    include_rocking: bool = True,
    stride: int = 1,
    scheme: str = "symmetric",
    workers: int = 1,
) -> SweepResult:
    """Integrate seeds on a circle of ``radius`` around the stable equilibrium.

    When ``include_rocking`` is set the on-manifold seed angle is appended,
    or a note is recorded if no rocking manifold exists at this ``alpha0``.
    Results are ordered by ``phi`` whatever the worker count.
    """
    from .manifolds import rocking_series

    phis = [float(p) for p in phi_list]
    labels = {p: "seed" for p in phis}
    series = None
    note = ""
    try:
        series = rocking_series(params)
    except SingularManifoldError as exc:
        note = f"no differentiable rocking manifold ({exc})"
    if include_rocking and series is not None:
        p_rock = rocking_phi(params, radius, series)
        phis.append(p_rock)
        labels[p_rock] = "rocking"
    for p in phis:
        if p == 0.0:
            labels[p] = "bouncing"
    phis = sorted(set(phis))
    jobs = [(params.alpha0, radius, p, dt, t_end, stride, scheme, series) for p in phis]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, jobs))
    else:
        results = [_run_seed(j) for j in jobs]
    entries = []
    for p, (traj, cls, dev, count) in zip(phis, results):
        traj.meta["id"] = f"phi={p:.17g}"
        entries.append(SweepEntry(p, labels[p], traj, cls, dev, count))
    if include_rocking and series is None:
        entries.append(SweepEntry(math.nan, "rocking", None, "n/a", math.nan, 0, note))
    meta = {
        "alpha0": params.alpha0,
        "radius": radius,
        "dt": dt,
        "t_end": t_end,
        "scheme": scheme,
        "perturbation": "position-only, zero velocity (fixed set of G2)",
        "rocking_manifold": "available" if series is not None else note,
    }
    return SweepResult(params.alpha0, radius, entries, meta)


def write_sweep_summary(result: SweepResult, path) -> None:
    from .io import fmt

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phi,bounded,max_manifold_dev,section_count\n")
        for e in result.entries:
            if e.trajectory is None:
                continue
            fh.write(f"{fmt(e.phi)},{str(e.classification == 'bounded').lower()},{fmt(e.max_manifold_dev)},{e.section_count}\n")
