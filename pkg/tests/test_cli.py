import json
import math

import pytest

from steiner_drop import cli
from steiner_drop.errors import NumericalError


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_equilibria_quarter_pi(capsys, tmp_path):
    code, out, _ = run(capsys, "equilibria", "--alpha0", 0.7853981633974483, "--out", tmp_path)
    assert code == 0
    assert "primary,0.3333333333," in out
    data = json.loads((tmp_path / "equilibria.json").read_text())
    assert data["equilibria"][0]["y"] == pytest.approx(1 / 3)
    assert (tmp_path / "config.json").exists()


def test_equilibria_labels_and_warning(capsys):
    code, out, err = run(capsys, "equilibria", "--alpha0", 1.2)
    assert code == 0 and "primary" in out and ",center," in out.splitlines()[1] and ",saddle," in out.splitlines()[2]
    code, _, err = run(capsys, "equilibria", "--alpha0", 1.391)
    assert code == 0 and "critical angle" in err


def test_equilibria_degrees_and_domain_error(capsys):
    code, out, _ = run(capsys, "equilibria", "--alpha0", 45, "--degrees")
    assert "0.3333333333" in out
    code, _, err = run(capsys, "equilibria", "--alpha0", 1.6)
    assert code == cli.EXIT_DOMAIN and "error" in err
    code, _, _ = run(capsys, "equilibria")
    assert code == cli.EXIT_DOMAIN


def test_manifold(capsys, tmp_path):
    code, out, _ = run(capsys, "manifold", "--alpha0", 1.45, "--branch", "secondary", "--out", tmp_path)
    assert code == 0
    assert "x^2 w^0: 2.106374841" in out and "x^0 w^2: 0.919354941" in out and "y_center: 0.6503904436" in out
    data = json.loads((tmp_path / "manifold.json").read_text())
    assert data["singularity_report"]["singular_alphas"]["order4"][0] == pytest.approx(0.5172679632, abs=1e-8)
    code, _, err = run(capsys, "manifold", "--alpha0", 0.870)
    assert code == cli.EXIT_DOMAIN and "singular" in err


def test_manifold_even_coefficients(capsys, tmp_path):
    code, _, _ = run(capsys, "manifold", "--alpha0", 0.7854, "--out", tmp_path)
    data = json.loads((tmp_path / "manifold.json").read_text())
    assert code == 0
    assert all(c["i"] % 2 == 0 and c["j"] % 2 == 0 for c in data["coeffs"])


def test_bifurcation(capsys, tmp_path):
    code, out, _ = run(capsys, "bifurcation", "--n", 50, "--out", tmp_path)
    assert code == 0 and "1 stability change" in out
    lines = (tmp_path / "bifurcation.csv").read_text().splitlines()
    assert lines[0] == "alpha0,y0,y1,stab0,stab1" and len(lines) == 51
    code, _, _ = run(capsys, "bifurcation")
    assert code == cli.EXIT_DOMAIN


def test_simulate_recipes(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--recipe", "bouncing", "--t-end", 10, "--out", tmp_path / "b")
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert code == 0 and summary["classification"] == "bounded"
    assert summary["max_abs_x"] == 0.0 and summary["energy_drift"] < 1e-6
    assert (tmp_path / "b" / "embedding-verbatim.csv").exists()

    code, _, _ = run(capsys, "simulate", "--recipe", "rocking", "--t-end", 20, "--embedding", "corrected", "--out", tmp_path / "r")
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["max_manifold_dev"] < 5e-6
    assert (tmp_path / "r" / "embedding-corrected.csv").exists()

    code, _, _ = run(capsys, "simulate", "--recipe", "escape", "--out", tmp_path / "e")
    summary = json.loads((tmp_path / "e" / "summary.json").read_text())
    assert summary["classification"].startswith("escaped")
    assert any(e["kind"] == "escape" for e in summary["events"])
    header = (tmp_path / "e" / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x,w,y,z"


def test_simulate_needs_initial_condition(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--alpha0", 1.0, "--out", tmp_path)
    assert code == cli.EXIT_DOMAIN


def test_sweep(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "--list-presets")
    assert code == 0 and out.count("torus-") == 4
    code, out, _ = run(capsys, "sweep", "--preset", "torus-dagger", "--t-end", 5, "--out", tmp_path)
    assert code == 0
    meta = json.loads((tmp_path / "sweep.json").read_text())
    assert "no differentiable rocking manifold" in meta["rocking_manifold"]
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert rows[0] == "phi,bounded,max_manifold_dev,section_count"
    assert all(r.split(",")[1] == "true" for r in rows[1:])


def test_sessile(capsys, tmp_path):
    code, out, _ = run(capsys, "sessile", "--alpha", 1.396, "--l", 0, "--out", tmp_path / "a")
    assert code == 0 and "class=bouncing" in out
    lines = (tmp_path / "a" / "com_trace.csv").read_text().splitlines()
    assert lines[0] == "t,xbar,ybar,zbar,M,class" and lines[1].endswith("bouncing")
    code, _, err = run(capsys, "sessile", "--l", 1, "--k", 1, "--out", tmp_path / "b")
    assert code == cli.EXIT_DOMAIN and "unstable" in err
    code, out, _ = run(capsys, "sessile", "--l", 3, "--epsilon", 0, "--out", tmp_path / "c")
    assert code == 0 and "class=stationary" in out


def test_sessile_sampled_profile(capsys, tmp_path):
    alpha = 1.2
    path = tmp_path / "xi.csv"
    path.write_text("s,xi\n" + "".join(f"{alpha * k / 20!r},{1 - k / 20!r}\n" for k in range(21)))
    code, out, _ = run(capsys, "sessile", "--alpha", alpha, "--l", 1, "--k", 3, "--xi-csv", path, "--out", tmp_path / "o")
    assert code == 0 and "class=rocking" in out


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha0": 1.2}))
    _, out, _ = run(capsys, "equilibria", "--config", cfg)
    assert "primary,0.5345976288" in out
    _, out, _ = run(capsys, "equilibria", "--config", cfg, "--alpha0", 0.7853981633974483)
    assert "primary,0.3333333333" in out
    cfg.write_text(json.dumps({"alpha-min": 0.1, "n": 5, "out": str(tmp_path / "b")}))
    assert run(capsys, "bifurcation", "--config", cfg)[0] == 0
    assert len((tmp_path / "b" / "bifurcation.csv").read_text().splitlines()) == 6
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "equilibria", "--config", cfg)[0] == cli.EXIT_DOMAIN
    assert run(capsys, "equilibria", "--config", tmp_path / "missing.json")[0] == cli.EXIT_DOMAIN


def test_snapshot_reproduces_outputs(capsys, tmp_path):
    a = tmp_path / "a"
    run(capsys, "simulate", "--recipe", "torus", "--t-end", 20, "--out", a)
    snap = json.loads((a / "config.json").read_text())
    assert snap["command"] == "simulate" and snap["phi"] == pytest.approx(math.pi / 4)
    b = tmp_path / "b"
    run(capsys, "simulate", "--config", a / "config.json", "--out", b)
    for name in ("trajectory.csv", "section.csv", "summary.json", "embedding-verbatim.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(*_a, **_k):
        raise NumericalError("forced")

    monkeypatch.setattr(cli.equilibria, "classify", boom)
    monkeypatch.setattr(cli.equilibria, "primary_equilibrium", boom)
    code, _, err = run(capsys, "equilibria", "--alpha0", 1.0)
    assert code == cli.EXIT_NUMERICAL and "forced" in err
