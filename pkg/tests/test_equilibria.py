import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steiner_drop.equilibria import (
    DEGENERATE_WINDOW,
    Branch,
    Stability,
    angle_of_height,
    bifurcation_scan,
    classify,
    critical_alpha_star,
    eigenvalues,
    height_of_angle,
    jacobian_matrix,
    jacobian_partials,
    jacobian_partials_alpha,
    primary_equilibrium,
    secondary_equilibrium,
    stable_equilibrium,
    write_bifurcation_csv,
)
from steiner_drop.errors import CoincidentRootsError, DomainError
from steiner_drop.model import Params, accelerations, q_of_alpha, q_of_height


def scan_roots(q0, lo=1e-3, hi=1e4, n=200001):
    """Sign changes of q_of_height - q0 on a log grid, refined by bisection."""
    y = np.geomspace(lo, hi, n)
    g = q_of_height(y) - q0
    roots = []
    for k in np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]:
        a, b = y[k], y[k + 1]
        for _ in range(200):
            m = 0.5 * (a + b)
            if (q_of_height(m) - q0) * (q_of_height(a) - q0) <= 0:
                b = m
            else:
                a = m
        roots.append(0.5 * (a + b))
    return roots


def fd_jacobian(y_eq, q, h=1e-6):
    f_x = (accelerations(h, y_eq, q)[0] - accelerations(-h, y_eq, q)[0]) / (2 * h)
    f_y = (accelerations(0.0, y_eq + h, q)[0] - accelerations(0.0, y_eq - h, q)[0]) / (2 * h)
    h_x = (accelerations(h, y_eq, q)[1] - accelerations(-h, y_eq, q)[1]) / (2 * h)
    h_y = (accelerations(0.0, y_eq + h, q)[1] - accelerations(0.0, y_eq - h, q)[1]) / (2 * h)
    return f_x, f_y, h_x, h_y


def test_critical_angle():
    a = critical_alpha_star()
    assert a == pytest.approx(1.3908278965, abs=1e-9)
    assert math.degrees(a) == pytest.approx(79.7, abs=0.05)


def test_primary_height_closed_forms():
    assert primary_equilibrium(Params(math.pi / 4)).y_eq == pytest.approx(1 / 3, rel=1e-15)
    for a in (0.3, 0.9, 1.4):
        y = height_of_angle(a)
        assert angle_of_height(y) == pytest.approx(a, rel=1e-14)


@pytest.mark.parametrize("a", [0.2, 0.6, 0.9, 1.2, 1.35, 1.42, 1.5, 1.55])
def test_secondary_matches_dense_scan(a):
    roots = scan_roots(q_of_alpha(a))
    assert len(roots) == 2
    y0 = height_of_angle(a)
    other = max(roots, key=lambda r: abs(r - y0))
    assert secondary_equilibrium(Params(a)).y_eq == pytest.approx(other, rel=1e-10)


def test_secondary_at_1_2():
    x1 = secondary_equilibrium(Params(1.2))
    assert x1.y_eq == pytest.approx(1.250656722, rel=1e-9)
    assert x1.branch is Branch.SECONDARY


def test_coincident_roots_rejected():
    a = critical_alpha_star()
    with pytest.raises(CoincidentRootsError):
        secondary_equilibrium(Params(a + 0.1 * DEGENERATE_WINDOW))
    x0, x1 = classify(Params(a))
    assert x0.stability is Stability.DEGENERATE and x1.stability is Stability.DEGENERATE


@given(st.floats(0.1, 1.55))
def test_jacobian_matches_finite_difference(a):
    p = Params(a)
    for eq in (primary_equilibrium(p),):
        fx, hy = jacobian_partials(eq.y_eq)
        ofx, ofy, ohx, ohy = fd_jacobian(eq.y_eq, p.q)
        assert fx == pytest.approx(ofx, rel=1e-6, abs=1e-7)
        assert hy == pytest.approx(ohy, rel=1e-6, abs=1e-7)
        assert abs(ofy) < 1e-7 and abs(ohx) < 1e-7


def test_jacobian_forms_agree():
    for a in np.linspace(0.1, 1.5, 29):
        assert jacobian_partials_alpha(a) == pytest.approx(jacobian_partials(height_of_angle(a)), rel=1e-12)
    assert jacobian_partials(1 / 3)[0] == pytest.approx(-3 / math.sqrt(2), rel=1e-14)


@given(st.floats(0.1, 1.55))
def test_eigenvalues_pair_and_match_matrix(a):
    y = height_of_angle(a)
    eig = eigenvalues(y)
    assert eig.lambda12[0] == -eig.lambda12[1]
    assert eig.lambda34[0] == -eig.lambda34[1]
    ref = np.sort_complex(np.linalg.eigvals(jacobian_matrix(eig.fx, eig.hy)))
    assert np.allclose(np.sort_complex(eig.all), ref, atol=1e-10)


def test_transcritical_labels():
    a_star = critical_alpha_star()
    below, above = classify(Params(1.2)), classify(Params(1.45))
    assert below[0].stability is Stability.CENTER and below[1].stability is Stability.SADDLE
    assert above[0].stability is Stability.SADDLE and above[1].stability is Stability.CENTER
    assert stable_equilibrium(Params(1.45)).branch is Branch.SECONDARY
    assert a_star > 1.2


def test_bifurcation_scan_rows_and_csv(tmp_path):
    rows = bifurcation_scan(np.linspace(0.05, 1.55, 40))
    assert not any(r.failed for r in rows)
    for r in rows:
        assert q_of_height(r.y1) == pytest.approx(q_of_alpha(r.alpha0), rel=1e-10)
    path = tmp_path / "b.csv"
    write_bifurcation_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "alpha0,y0,y1,stab0,stab1"
    assert len(lines) == 41


def test_bifurcation_scan_flags_unreachable_root():
    rows = bifurcation_scan([0.001, 1.0])
    assert rows[0].failed and math.isnan(rows[0].y1)
    assert rows[0].stab0 is Stability.CENTER
    assert not rows[1].failed


def test_domain_errors():
    with pytest.raises(DomainError):
        Params(1.7)
    with pytest.raises(DomainError):
        height_of_angle(-0.1)


@pytest.mark.parametrize("a", [0.3, math.pi / 4, 1.2, 1.5])
def test_horizontal_force_vanishes_only_on_axis(a):
    # equilibria off the symmetry axis would need f(x, y) = 0 with x != 0
    q = q_of_alpha(a)
    xs = np.linspace(-2.0, 2.0, 401)
    x, y = np.meshgrid(xs[xs != 0.0], np.geomspace(1e-2, 1e2, 301))
    f, _ = accelerations(x, y, q)
    assert np.all(np.sign(f) == -np.sign(x))
