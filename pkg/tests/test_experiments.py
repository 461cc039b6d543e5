import json

import numpy as np
import pytest

from nonmarkov.cli import main
from nonmarkov.config import make_config
from nonmarkov.experiments import (
    run_fd_convergence,
    run_measure,
    run_sweep_mu,
    run_sweep_sigma,
    run_toy_scaling,
)


def small_dephasing(out, **extra):
    base = dict(experiment="measure", model="dephasing", n_pairs=6,
                t_max=2.0, n_points=21, seed=11, out=str(out), plot=False)
    base.update(extra)
    return make_config(**base)


def read_lines(path):
    return path.read_text().splitlines()


def test_run_measure_outputs(tmp_path):
    cfg = small_dephasing(tmp_path, plot=True)
    summary = run_measure(cfg)

    csv_path = tmp_path / "measure.csv"
    json_path = tmp_path / "measure.json"
    assert csv_path.exists() and json_path.exists()
    assert (tmp_path / "measure.png").exists()
    assert summary["figure"] == "measure.png"

    lines = read_lines(csv_path)
    assert lines[0] == "# schema=nonmarkov.measure.v1"
    assert lines[1].startswith("# config=")
    assert lines[2] == "t,sigma_avg,sigma_plus,sigma_minus,d_avg"
    assert len(lines) == 3 + cfg.n_points
    # the config echo parses back to the resolved config, minus keys that
    # describe execution context rather than the computation
    echo = json.loads(lines[1][len("# config="):])
    expected = {k: v for k, v in cfg.as_dict().items()
                if k not in ("max_qubits", "out", "plot", "workers")}
    assert echo == expected

    payload = json.loads(json_path.read_text())
    m = payload["measures"]
    for key in ("n_avg", "n_pure", "n_blp_lower"):
        assert m[key]["value"] >= 0.0
        assert m[key]["ci"]["level"] == 0.90
        assert m[key]["ci"]["lower"] <= m[key]["ci"]["upper"]
    assert m["n_avg"]["value"] <= m["n_pure"]["value"] + 1e-12
    assert m["n_pure"]["value"] <= m["n_blp_lower"]["value"] + 1e-12
    assert payload["correlation_time"] == 1.0
    assert payload["fd_step"] == 0.05  # min(dt/2, tau_c/10) = dt/2 here


def test_csv_byte_identical_across_workers_and_reruns(tmp_path):
    out1, out2, out3 = (tmp_path / d for d in ("a", "b", "c"))
    run_measure(small_dephasing(out1, workers=1))
    run_measure(small_dephasing(out2, workers=3))
    run_measure(small_dephasing(out3, workers=1))
    data1 = (out1 / "measure.csv").read_bytes()
    assert data1 == (out2 / "measure.csv").read_bytes()
    assert data1 == (out3 / "measure.csv").read_bytes()


def test_zero_coupling_chain_measures_vanish(tmp_path):
    cfg = make_config(experiment="measure", model="chain", n_system=1,
                      coupling_mean=0.0, coupling_std=0.0, n_pairs=4,
                      t_max=5.0, n_points=21, seed=3, out=str(tmp_path),
                      plot=False)
    summary = run_measure(cfg)
    m = summary["measures"]
    assert m["n_avg"]["value"] <= 1e-8
    assert m["n_pure"]["value"] <= 1e-8
    assert m["n_blp_lower"]["value"] <= 1e-8
    assert summary["noise_strength"] == 0.0
    assert summary["correlation_time"] == float("inf")


def test_run_sweep_mu_small(tmp_path):
    cfg = make_config(experiment="sweep-mu", n_system=1, n_pairs=4,
                      t_max=2.0, n_points=21, seed=2, out=str(tmp_path),
                      plot=False, mu_values=(0.2, 0.8))
    summary = run_sweep_mu(cfg)
    lines = read_lines(tmp_path / "sweep-mu.csv")
    assert lines[2] == ("mu,n_avg,n_avg_ci_lower,n_avg_ci_upper,"
                        "n_pure,n_pure_ci_lower,n_pure_ci_upper")
    assert len(lines) == 5
    points = summary["points"]
    assert [p["mu"] for p in points] == [0.2, 0.8]
    # single realization: per-point diagnostics are length-1 lists
    assert all(len(p["noise_strength"]) == 1 for p in points)
    assert all(len(p["fd_step"]) == 1 for p in points)


def test_run_sweep_sigma_pooled(tmp_path):
    cfg = make_config(experiment="sweep-sigma", n_system=1, n_pairs=4,
                      n_realizations=3, t_max=2.0, n_points=21, seed=2,
                      out=str(tmp_path), plot=False, sigma_values=(0.0, 0.3))
    summary = run_sweep_sigma(cfg)
    points = summary["points"]
    assert [p["sigma_j"] for p in points] == [0.0, 0.3]
    for p in points:
        assert len(p["noise_strength"]) == 3
        assert len(p["correlation_time"]) == 3
        m = p["measures"]
        assert m["n_avg"]["value"] <= m["n_pure"]["value"] + 1e-12
        assert m["n_pure"]["ci"]["lower"] <= m["n_pure"]["ci"]["upper"]
    # sigma_j = 0 pools identical couplings, but omegas still differ by draw
    lams = points[0]["noise_strength"]
    assert lams[0] == lams[1] == lams[2]


def test_sweep_point_matches_pooled_streams(tmp_path):
    # with one realization, the mu sweep at a single point must reproduce a
    # plain measure run configured with the same coupling mean
    cfg_sweep = make_config(experiment="sweep-mu", n_system=1, n_pairs=5,
                            t_max=2.0, n_points=21, seed=8,
                            out=str(tmp_path / "s"), plot=False,
                            mu_values=(0.6,))
    sweep = run_sweep_mu(cfg_sweep)
    cfg_measure = make_config(experiment="measure", model="chain", n_system=1,
                              coupling_mean=0.6, n_pairs=5, t_max=2.0,
                              n_points=21, seed=8, out=str(tmp_path / "m"),
                              plot=False)
    measure = run_measure(cfg_measure)
    assert (sweep["points"][0]["measures"]["n_pure"]["value"]
            == measure["measures"]["n_pure"]["value"])


def test_run_fd_convergence(tmp_path):
    cfg = make_config(experiment="fd-convergence", model="dephasing",
                      n_pairs=2, seed=4, out=str(tmp_path), plot=False, n_h=6)
    summary = run_fd_convergence(cfg)
    lines = read_lines(tmp_path / "fd-convergence.csv")
    assert lines[2] == "h_over_tau_c,rel_error"
    assert len(lines) == 3 + 6
    assert abs(summary["loglog_slope"] - 2.0) < 0.3
    assert summary["correlation_time"] == 1.0
    assert summary["sigma_exact"] < 0.0


def test_fd_convergence_requires_interaction(tmp_path):
    cfg = make_config(experiment="fd-convergence", model="chain", n_system=1,
                      coupling_mean=0.0, coupling_std=0.0, out=str(tmp_path),
                      plot=False)
    with pytest.raises(ValueError):
        run_fd_convergence(cfg)


def test_run_toy_scaling(tmp_path):
    cfg = make_config(experiment="toy-scaling", n_pairs=30, seed=6,
                      out=str(tmp_path), plot=False,
                      spectator_values=(0, 1, 2))
    summary = run_toy_scaling(cfg)
    points = summary["points"]
    assert [p["system_qubits"] for p in points] == [1, 2, 3]
    pure = [p["measures"]["n_pure"]["value"] for p in points]
    avg = [p["measures"]["n_avg"]["value"] for p in points]
    blp = [p["measures"]["n_blp_lower"]["value"] for p in points]
    assert pure[0] > 0.0
    # adding a spectator dilutes the ensemble-average measures...
    assert pure[0] > pure[1] > pure[2]
    assert avg[0] > avg[1] > avg[2]
    # ...but the sampled worst case falls off more slowly
    assert (blp[0] - blp[-1]) / blp[0] < (pure[0] - pure[-1]) / pure[0]
    lines = read_lines(tmp_path / "toy-scaling.csv")
    assert lines[2] == "n_spectators,n_avg,n_pure,n_blp_lower"


def test_cli_success_and_outputs(tmp_path):
    code = main([
        "measure", "--out", str(tmp_path), "--pairs", "4", "--seed", "5",
        "--set", "model=dephasing", "--set", "n_points=11",
        "--set", "t_max=1.0", "--no-plot",
    ])
    assert code == 0
    assert (tmp_path / "measure.csv").exists()
    assert (tmp_path / "measure.json").exists()
    assert not (tmp_path / "measure.png").exists()
    payload = json.loads((tmp_path / "measure.json").read_text())
    assert payload["config"]["n_pairs"] == 4
    assert payload["config"]["plot"] is False


def test_cli_config_file(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "model = dephasing\nn_pairs = 4\nn_points = 11\nt_max = 1.0\nplot = false\n"
    )
    code = main(["measure", "--config", str(cfg_file), "--out", str(tmp_path),
                 "--pairs", "6"])
    assert code == 0
    payload = json.loads((tmp_path / "measure.json").read_text())
    assert payload["config"]["n_pairs"] == 6  # flag beats the file


def test_cli_error_codes(tmp_path):
    # invalid config value -> 2
    assert main(["measure", "--out", str(tmp_path), "--set", "n_pairs=1",
                 "--no-plot"]) == 2
    # unknown config key -> 2
    assert main(["measure", "--out", str(tmp_path), "--set", "bogus=1",
                 "--no-plot"]) == 2
    # missing config file -> 2
    assert main(["measure", "--config", str(tmp_path / "absent.cfg"),
                 "--out", str(tmp_path)]) == 2
    # config validates but the run itself fails -> 1
    assert main(["fd-convergence", "--out", str(tmp_path), "--no-plot",
                 "--set", "coupling_mean=0", "--set", "coupling_std=0"]) == 1
    # malformed --set and missing subcommand are argparse errors
    with pytest.raises(SystemExit):
        main(["measure", "--set", "n_pairs"])
    with pytest.raises(SystemExit):
        main([])


def test_float_cells_roundtrip(tmp_path):
    run_measure(small_dephasing(tmp_path))
    lines = read_lines(tmp_path / "measure.csv")
    cells = lines[3].split(",")
    # %.17g preserves doubles exactly
    assert float(cells[0]) == 0.0
    for cell in cells[1:]:
        assert float(cell) == float(repr(float(cell)))


def test_sigma_zero_flat_chain_has_degenerate_gap(tmp_path):
    # with no coupling disorder and no frequency disorder every pooled
    # realization is the same Hamiltonian
    cfg = make_config(experiment="sweep-sigma", n_system=1, n_pairs=4,
                      n_realizations=2, omega_std=0.0, t_max=2.0, n_points=21,
                      seed=12, out=str(tmp_path), plot=False,
                      sigma_values=(0.0,))
    summary = run_sweep_sigma(cfg)
    p = summary["points"][0]
    assert p["noise_strength"][0] == p["noise_strength"][1]
    assert p["correlation_time"][0] == p["correlation_time"][1]
