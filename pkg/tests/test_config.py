import pytest

from nonmarkov.config import (
    ExperimentConfig,
    coerce_value,
    make_config,
    parse_config_file,
)


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.experiment == "measure"
    assert cfg.model == "chain"
    assert cfg.n_system == 3  # 3 system + 4 environment qubits
    assert cfg.t_max == 5.0
    assert cfg.n_points == 101
    assert cfg.n_pairs == 200
    assert cfg.seed == 42
    assert cfg.fd_step is None
    assert cfg.plot is True
    assert cfg.n_realizations == 1


def test_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ValueError):
        ExperimentConfig(model="ising")
    with pytest.raises(ValueError):
        ExperimentConfig(env_state="thermal")
    with pytest.raises(ValueError):
        ExperimentConfig(n_pairs=1)
    with pytest.raises(ValueError):
        ExperimentConfig(n_points=1)
    with pytest.raises(ValueError):
        ExperimentConfig(t_max=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(fd_step=-0.1)
    with pytest.raises(ValueError):
        ExperimentConfig(seed=-1)
    with pytest.raises(ValueError):
        ExperimentConfig(workers=0)
    with pytest.raises(ValueError):
        ExperimentConfig(n_realizations=0)
    with pytest.raises(ValueError):
        ExperimentConfig(mu_values=())
    with pytest.raises(ValueError):
        ExperimentConfig(sigma_values=(0.1, -0.2))
    with pytest.raises(ValueError):
        ExperimentConfig(h_min_factor=0.5, h_max_factor=0.1)


def test_resolved_env_state():
    assert ExperimentConfig().resolved_env_state() == "zeros"
    assert ExperimentConfig(model="dephasing").resolved_env_state() == "plus"
    assert ExperimentConfig(env_state="plus").resolved_env_state() == "plus"
    assert ExperimentConfig(model="dephasing", env_state="zeros").resolved_env_state() == "zeros"


def test_coerce_value():
    assert coerce_value("n_pairs", "300") == 300
    assert coerce_value("t_max", "2.5") == 2.5
    assert coerce_value("fd_step", "auto") is None
    assert coerce_value("fd_step", "0.01") == 0.01
    assert coerce_value("max_qubits", "none") is None
    assert coerce_value("plot", "false") is False
    assert coerce_value("plot", "1") is True
    assert coerce_value("mu_values", "0.1, 0.5, 1.0") == (0.1, 0.5, 1.0)
    assert coerce_value("spectator_values", "0,2,4") == (0, 2, 4)
    with pytest.raises(ValueError):
        coerce_value("n_pairs", "many")
    with pytest.raises(ValueError):
        coerce_value("plot", "maybe")
    with pytest.raises(ValueError):
        coerce_value("no_such_key", "1")


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# desk-scale run\n"
        "experiment = sweep-mu\n"
        "n_pairs = 50\n"
        "\n"
        "mu_values = 0.2, 0.8\n"
        "plot = off\n"
    )
    overrides = parse_config_file(path)
    assert overrides == {
        "experiment": "sweep-mu",
        "n_pairs": 50,
        "mu_values": (0.2, 0.8),
        "plot": False,
    }
    bad = tmp_path / "bad.cfg"
    bad.write_text("n_pairs 50\n")
    with pytest.raises(ValueError):
        parse_config_file(bad)


def test_make_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n_pairs = 50\nseed = 7\nfd_step = 0.02\n")
    cfg = make_config(path, n_pairs=80)
    assert cfg.n_pairs == 80  # explicit flag beats the file
    assert cfg.seed == 7  # file beats the default
    assert cfg.fd_step == 0.02
    # keyword None means "flag absent": the file value stays
    cfg = make_config(path, seed=None)
    assert cfg.seed == 7
    # a raw --set override applies even when it parses to None
    cfg = make_config(path, raw_overrides={"fd_step": "auto"})
    assert cfg.fd_step is None
    with pytest.raises(ValueError):
        make_config(bogus_key=1)


def test_as_dict_roundtrip():
    cfg = ExperimentConfig(experiment="toy-scaling", n_pairs=32)
    d = cfg.as_dict()
    assert d["experiment"] == "toy-scaling"
    assert d["mu_values"] == list(cfg.mu_values)
    rebuilt = ExperimentConfig(**{k: tuple(v) if isinstance(v, list) else v
                                  for k, v in d.items()})
    assert rebuilt == cfg
