import csv
import json

import numpy as np
import pytest

from memnet.cli import main
from memnet.mesh import generate_disk_mesh, load_mesh, save_mesh
from memnet.network import WeightedNetwork, save_network


@pytest.fixture(scope="module")
def mesh_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "disk3.mesh"
    save_mesh(generate_disk_mesh(1.0, 3), path)
    return str(path)


@pytest.fixture(scope="module")
def radius_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "radius.json"
    save_network(WeightedNetwork(points=[(0, 0), (1, 0)], edges=[[0, 1]], theta=[1.0]), path)
    return str(path)


class TestMeshCommand:
    def test_level0_file(self, tmp_path):
        out = tmp_path / "disk.mesh"
        assert main(["mesh", "--shape", "disk", "--radius", "1", "--refine", "0",
                     "--out", str(out)]) == 0
        mesh = load_mesh(out)
        assert mesh.n_triangles == 6

    def test_refine_counts(self, tmp_path):
        out = tmp_path / "disk2.mesh"
        assert main(["mesh", "--refine", "2", "--out", str(out)]) == 0
        assert load_mesh(out).n_triangles == 6 * 4**2

    def test_missing_out_is_usage_error(self):
        assert main(["mesh", "--refine", "0"]) == 2


class TestEvalCommand:
    def test_empty_network_poisson(self, mesh_file, capsys):
        assert main(["eval", "--mesh", mesh_file, "--empty-network"]) == 0
        energy = float(capsys.readouterr().out.split("=")[1])
        assert abs(energy + np.pi / 16) < 5e-3

    def test_m_zero_matches_empty(self, mesh_file, radius_file, capsys):
        main(["eval", "--mesh", mesh_file, "--empty-network"])
        e_empty = float(capsys.readouterr().out.split("=")[1])
        main(["eval", "--mesh", mesh_file, "--network", radius_file, "--m", "0"])
        e_zero = float(capsys.readouterr().out.split("=")[1])
        assert abs(e_empty - e_zero) < 1e-12

    def test_report_solution_profile_outputs(self, mesh_file, radius_file, tmp_path, capsys):
        report = tmp_path / "report.json"
        solution = tmp_path / "solution.csv"
        profile = tmp_path / "profile.csv"
        code = main([
            "eval", "--mesh", mesh_file, "--network", radius_file, "--L", "1",
            "--m", "0.5", "--factor", "energy", "--load", "const:1",
            "--out", str(report), "--solution", str(solution), "--profile", str(profile),
        ])
        assert code == 0
        data = json.loads(report.read_text())
        assert data["factor_convention"] == "energy_consistent"
        assert data["residual_norm"] <= 1e-10
        assert len(data["per_arc_tangential_gradient"]) == 1
        with open(solution) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["vertex_index", "x", "y", "u"]
        assert len(rows) == 1 + load_mesh(mesh_file).n_vertices
        with open(profile) as fh:
            prows = list(csv.reader(fh))
        assert prows[0] == ["x0", "y0", "x1", "y1", "theta", "grad_tau"]

    def test_dirac_load_parsing(self, mesh_file, radius_file, capsys):
        code = main([
            "eval", "--mesh", mesh_file, "--network", radius_file,
            "--load", "dirac:-0.5,0,1;0.5,0,-1",
        ])
        assert code == 0

    def test_mass_mismatch_is_runtime_error(self, mesh_file, radius_file):
        assert main(["eval", "--mesh", mesh_file, "--network", radius_file, "--L", "3"]) == 1

    def test_missing_mesh_file_is_runtime_error(self, radius_file):
        assert main(["eval", "--mesh", "/nonexistent.mesh", "--network", radius_file]) == 1


class TestOptimizeCommand:
    def test_seeded_runs_identical_bytes(self, mesh_file, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            code = main([
                "optimize", "--mesh", mesh_file, "--L", "1", "--budget", "200",
                "--nd", "3", "--population", "50", "--local-budget", "50",
                "--refine-nd", "4", "--seed", "9", "--out", str(out),
            ])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_result_file_contents(self, mesh_file, tmp_path):
        out = tmp_path / "r.json"
        net_out = tmp_path / "net.json"
        main([
            "optimize", "--mesh", mesh_file, "--L", "1", "--budget", "120",
            "--nd", "3", "--population", "40", "--local-budget", "30",
            "--refine-nd", "4", "--seed", "1", "--out", str(out),
            "--network-out", str(net_out),
        ])
        data = json.loads(out.read_text())
        assert data["config"]["seed"] == 1
        assert "best_energy" in data and "history" in data
        hist = [v for _, v in data["history"]]
        assert all(a <= b for a, b in zip(hist, hist[1:]))
        from memnet.network import load_network

        net = load_network(net_out)
        assert np.isclose(net.mass(), 1.0, atol=1e-8)

    def test_zero_budget_is_config_error(self, mesh_file, tmp_path):
        code = main(["optimize", "--mesh", mesh_file, "--L", "1", "--budget", "0",
                     "--out", str(tmp_path / "x.json")])
        assert code == 2


class TestTableCommands:
    def test_homog1d_csv(self, tmp_path, capsys):
        out = tmp_path / "h.csv"
        assert main(["homog1d", "--periods", "1,4,16,64", "--out", str(out)]) == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "periods"
        last = rows[-1]
        assert abs(float(last[2]) + 0.1) < 1e-3

    def test_dirac_decreasing_column(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        assert main(["dirac", "--L", "0.5", "--refinements", "2,3,4", "--out", str(out)]) == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        energies = [float(r[3]) for r in rows[1:]]
        assert energies[0] > energies[1] > energies[2]

    def test_table1_small_levels(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        assert main(["table1", "--levels", "3,4,5", "--out", str(out)]) == 0
        with open(out) as fh:
            rows = {r[0]: r for r in list(csv.reader(fh))[1:]}
        # the energy-consistent diameter value reproduces the reference
        diam = rows["diameter"]
        assert abs(float(diam[3]) - float(diam[2])) < 5e-3

    def test_config_file_supplies_flags(self, tmp_path):
        conf = tmp_path / "conf.json"
        out = tmp_path / "m.mesh"
        conf.write_text(json.dumps({"refine": 1, "out": str(out)}))
        assert main(["mesh", "--config", str(conf)]) == 0
        assert load_mesh(out).n_triangles == 24

    def test_explicit_flag_beats_config(self, tmp_path):
        conf = tmp_path / "conf.json"
        out = tmp_path / "m.mesh"
        conf.write_text(json.dumps({"refine": 1}))
        assert main(["mesh", "--config", str(conf), "--refine", "2", "--out", str(out)]) == 0
        assert load_mesh(out).n_triangles == 6 * 16

    def test_threads_env_fallback(self, monkeypatch):
        from memnet.cli import _resolve_threads

        monkeypatch.setenv("MEMNET_THREADS", "3")
        assert _resolve_threads(None) == 3
        assert _resolve_threads(2) == 2
        monkeypatch.delenv("MEMNET_THREADS")
        assert _resolve_threads(None) == 1
