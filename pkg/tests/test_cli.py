import json

import numpy as np
import pytest
from sklearn.base import clone

from stableheat.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERDICT, SCHEMA, main
from stableheat.estimators import HeatKernelDensity, KernelValidator
from stableheat.kernels import KernelSpec

from conftest import cauchy

UNIT = {"family": "constant", "alpha": 1.0, "kappa0": 2.0, "params": {"a": 1.0}}
WINDOW = {"t": 0.0, "s": 1.0, "dim": 1, "extent": 10.0, "spacing": 0.05}


def _run(tmp_path, config, command, name="cfg.json", out="out", extra=()):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return main([command, "--config", str(path), "--out", str(tmp_path / out), *extra])


def test_help_carries_schema(capsys):
    with pytest.raises(SystemExit):
        main(["density", "--help"])
    assert "configuration (JSON object)" in capsys.readouterr().out
    assert "exit status" in SCHEMA


def test_bad_alpha_is_config_error(tmp_path, capsys):
    code = _run(tmp_path, {"kernel": dict(UNIT, alpha=2.5), "window": WINDOW}, "density")
    assert code == EXIT_CONFIG
    assert "kernel.alpha" in capsys.readouterr().err


def test_missing_window_is_config_error(tmp_path, capsys):
    assert _run(tmp_path, {"kernel": UNIT}, "density") == EXIT_CONFIG
    assert "window" in capsys.readouterr().err


def test_density_output_and_hash(tmp_path):
    assert _run(tmp_path, {"kernel": UNIT, "window": WINDOW}, "density") == EXIT_OK
    rows = np.loadtxt(tmp_path / "out" / "density.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(rows[:, -1] - cauchy(rows[:, 0]))) < 1e-6
    side = json.loads((tmp_path / "out" / "density.json").read_text())
    assert len(side["config_hash"]) == 64


def test_hash_ignores_key_order(tmp_path):
    _run(tmp_path, {"kernel": UNIT, "window": WINDOW}, "density", "a.json", "a")
    _run(tmp_path, {"window": WINDOW, "kernel": UNIT}, "density", "b.json", "b")
    ha = json.loads((tmp_path / "a" / "density.json").read_text())["config_hash"]
    hb = json.loads((tmp_path / "b" / "density.json").read_text())["config_hash"]
    assert ha == hb


def test_validate_is_byte_identical(tmp_path):
    cfg = {"kernel": UNIT, "window": {"t": 0.0, "s": 1.0, "dim": 1}}
    assert _run(tmp_path, cfg, "validate", out="r1") == EXIT_OK
    assert _run(tmp_path, cfg, "validate", out="r2") == EXIT_OK
    for f in ("report.json", "report.csv"):
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes()


def test_underpowered_compare_exits_with_verdict(tmp_path, capsys):
    cfg = {"kernel": UNIT, "window": {"t": 0.0, "s": 1.0, "dim": 1, "extent": 10.0, "spacing": 0.1},
           "compare": {"methods": ["fourier", "simulate"], "paths": 1000}}
    assert _run(tmp_path, cfg, "compare") == EXIT_VERDICT
    assert "use at least" in capsys.readouterr().err


def test_perturb_writes_kato_ladder(tmp_path):
    cfg = {"kernel": dict(UNIT, alpha=1.5), "window": {"t": 0.0, "s": 1.0, "dim": 1, "extent": 8.0,
                                                        "spacing": 0.0625},
           "drift": {"family": "smooth", "params": {"amp": 1.0, "freq": 1.0}}}
    assert _run(tmp_path, cfg, "perturb") == EXIT_OK
    kato = np.loadtxt(tmp_path / "out" / "kato.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(kato[:, 1]) < 0)


def test_estimator_matches_cauchy_and_clones():
    est = HeatKernelDensity(kernel=KernelSpec(alpha=1.0, kappa0=2.0), extent=10.0, spacing=0.05).fit()
    x = np.array([[0.0], [1.0], [3.3]])
    np.testing.assert_allclose(est.density(x), cauchy(x.ravel()), atol=1e-6)
    np.testing.assert_allclose(est.score_samples(x), np.log(cauchy(x.ravel())), atol=1e-5)
    twin = clone(est)
    assert twin.get_params() == est.get_params() and not hasattr(twin, "values_")
    assert est.sample(5, random_state=1).shape == (5, 1)


def test_validator_score():
    v = KernelValidator(kernel={"family": "constant", "alpha": 1.0, "kappa0": 2.0}).fit()
    assert v.passed_ and v.score() == 1.0
