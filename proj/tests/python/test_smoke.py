import json
import os
import subprocess

import numpy as np
import pytest

import perisurf as ps

SMALL = """[scenario]
name = smoke
seed = 7
measurement_half_width = 4*pi
measurement_step = pi/30
source_half_count = 2
translation = 1
noise_level = 0
[truth]
periodic = 1.5, 1/8
perturbation = example2
perturbation_cell = 1
[discretization]
mesh_n1 = 8
mesh_n2 = 4
truncation = 3
fourier_modes = 16
sampling_m1 = 40
sampling_m2 = 10
sampling_a = -4*pi
sampling_b = 4*pi
[inversion]
initial_guess = truth
"""


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    s = ps.parse_scenario(SMALL)
    s.validate()
    data = tmp_path_factory.mktemp("data")
    info = ps.simulate(s, str(data))
    return s, data, info


def test_scenario_round_trip():
    s = ps.parse_scenario(SMALL)
    back = ps.parse_scenario(s.serialize())
    assert back == s
    assert back.hash() == s.hash()
    s.seed = 8
    assert back.hash() != s.hash()


def test_bad_scenario_raises_input_error():
    with pytest.raises(ps.InputError, match="line 2"):
        ps.parse_scenario("[scenario]\nbogus = 1\n")
    with pytest.raises(ps.Error):
        ps.parse_scenario("[scenario]\nwavenumber = -1\n").validate()


def test_example_configs_load():
    root = os.environ.get("PERISURF_SOURCE_DIR")
    if not root:
        pytest.skip("source dir unknown")
    for name in ("example1", "example2"):
        s = ps.load_scenario(os.path.join(root, "configs", name + ".ini"))
        assert s.mesh_n1 == 32 and s.truncation == 8


def test_hankel_at_one():
    h0, h1 = ps.hankel1_01(1.0)
    assert h0 == pytest.approx(0.7651976865579666 + 0.08825696421567696j, rel=1e-10)
    assert h1 == pytest.approx(0.4400505857449335 - 0.7812128213002887j, rel=1e-10)


def test_cgne_matches_lstsq():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(12, 4)) + 1j * rng.normal(size=(12, 4))
    b = rng.normal(size=12) + 1j * rng.normal(size=12)
    x, iterations, residuals = ps.cgne_dense(A, b, max_iterations=40, tolerance=1e-13)
    ref = np.linalg.lstsq(np.vstack([A.real, A.imag]), np.concatenate([b.real, b.imag]), rcond=None)[0]
    assert np.allclose(x, ref, rtol=1e-8, atol=1e-10)
    assert all(r1 <= r0 * (1 + 1e-12) for r0, r1 in zip(residuals, residuals[1:]))


def test_quick_verify_passes():
    checks = ps.verify(quick=True)
    assert checks
    failed = [c["name"] for c in checks if not c["passed"]]
    assert not failed


def test_simulate_writes_data(small):
    s, data, info = small
    assert info["sampling_records"] == 5
    assert info["herglotz_records"] == 2
    assert info["scenario_hash"] == s.hash()
    assert {"sampling.csv", "herglotz.csv", "scenario.ini"} <= set(os.listdir(data))


def test_sampling_locates_the_perturbation(small, tmp_path):
    s, data, _ = small
    r = ps.sample(s, str(data), str(tmp_path))
    assert r["J"] == 1
    assert 1.2 <= r["c0"] <= 1.9
    assert r["indicator"].shape == (40, 10)
    report = json.loads((tmp_path / "sampling_report.json").read_text())
    assert report["J"] == 1


def test_invert_from_truth_stays_put(small, tmp_path):
    s, data, _ = small
    r = ps.invert(s, str(data), str(tmp_path))
    assert r["part1"]["status"] == "converged"
    assert r["part2"]["status"] == "converged"
    assert r["part1"]["initial_residual"] < s.epsilon
    assert r["curve"].shape[1] == 5
    assert r["periodic_error"] < 0.05


def test_cli_exit_codes(tmp_path):
    cli = os.environ.get("PERISURF_CLI")
    if not cli:
        pytest.skip("CLI not built")
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nbogus = 1\n")
    out = tmp_path / "out"
    r = subprocess.run([cli, "simulate", "--config", str(bad), "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 1
    assert json.loads(r.stderr.strip().splitlines()[-1])["error"] == "InputError"

    env = dict(os.environ, PERISURF_THREADS="zero")
    r = subprocess.run([cli, "verify", "--quick"], capture_output=True, text=True, env=env)
    assert r.returncode == 1

    r = subprocess.run([cli, "frobnicate"], capture_output=True, text=True)
    assert r.returncode == 1
