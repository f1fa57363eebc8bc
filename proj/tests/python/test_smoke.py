import json
import math

import numpy as np
import pytest

import vortex_demailly as vd


@pytest.fixture(scope="module")
def theta32():
    grid = vd.Grid(32)
    return grid, vd.theta_section(grid)


def test_laplacian_of_cosine():
    grid = vd.Grid(32)
    x, _ = grid.coordinates()
    u = np.cos(2 * math.pi * x)
    assert np.max(np.abs(vd.laplacian(grid, u) + math.pi * u)) < 1e-10


def test_poisson_inverts_laplacian():
    grid = vd.Grid(32)
    x, y = grid.coordinates()
    u = np.sin(2 * math.pi * (x + y))
    back = vd.poisson_solve(grid, vd.laplacian(grid, u), mean=0.0)
    assert np.max(np.abs(back - u)) < 1e-10


def test_theta_section(theta32):
    _, section = theta32
    assert section.phik2.shape == (32, 32)
    assert abs(section.phik2.max() - 0.5) < 1e-12
    assert section.theta_terms > 0


def test_solve_t0_and_fd(theta32):
    _, section = theta32
    params = vd.Params()
    state = vd.solve_t0("sys1", params, section)
    assert np.max(np.abs(vd.residual_sys1_psi(state, params))) < 1e-10
    assert state.phig2.max() < 1.0
    assert vd.fd_check(state, vd.Params(alpha=0.5, t=0.3), "sys1_psi", n_probes=5) < 1e-7


@pytest.mark.parametrize("system", ["sys1", "sys2"])
def test_solve_system_reaches_endpoint(theta32, system):
    _, section = theta32
    out = vd.solve_system(system, section)
    assert out["final_t"] == 1.0
    assert all(step["bounds_passed"] for step in out["steps"])
    p1 = out["params"].at(1.0)
    assert vd.positivity(out["final_state"], p1)["passed"]


def test_errors_carry_kind(theta32):
    _, section = theta32
    with pytest.raises(vd.VortexError) as info:
        vd.solve_t0("sys3", vd.Params(), section)
    assert info.value.kind == "ConfigError"
    with pytest.raises(vd.VortexError):
        vd.parse_config("n = 15\n")


def test_run_writes_schema_versioned_summary(tmp_path):
    cfg = vd.parse_config(f"system = sys1\nn = 16\noutput_dir = {tmp_path / 'run'}\n")
    assert cfg.system == "sys1"
    assert vd.run(cfg) == 0
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["schema_version"] == vd.SUMMARY_SCHEMA_VERSION
    assert summary["status"] == "ok"
    assert (tmp_path / "run" / "trace.csv").exists()
    assert vd.verify(tmp_path / "run") == 0
