import numpy as np
import pytest

import cimsim

IDEAL = {"noise.ideal": "true"}


def test_version_and_config():
    assert cimsim.__version__
    text = cimsim.default_config()
    assert "[noise]" in text and "seed = 1" in text
    assert cimsim.config_hash() == cimsim.config_hash({})
    assert cimsim.config_hash({"noise.seed": "2"}) != cimsim.config_hash()
    assert "seed = 9" in cimsim.resolve_config({"noise.seed": "9"})


def test_oracle_matches_ideal_macro():
    rng = np.random.default_rng(1)
    rows, outputs = 72, 16
    weights = rng.integers(0, 16, size=(rows, outputs), dtype=np.uint8)
    inputs = [int(x) for x in rng.integers(0, 256, size=rows)]
    codes, sat = cimsim.integer_oracle(inputs, weights, r_in=8, r_w=4, r_out=8)
    macro = cimsim.Macro({**IDEAL, "macro.units": "2"})
    macro.load_weights(weights)
    out = macro.run(inputs)
    assert list(out["codes"]) == list(codes)
    assert len(sat) == outputs


def test_zero_inputs_midcode():
    codes, _ = cimsim.integer_oracle([0] * 10, np.ones((10, 3), dtype=np.uint8), 8, 4, 8)
    assert codes == [128, 128, 128]


def test_bundle_round_trip(tmp_path):
    b = cimsim.reference_bundle("cnn", 3)
    data = b.to_bytes()
    assert data[:4] == b"CIMB"
    again = cimsim.ModelBundle.from_bytes(data)
    assert again.to_bytes() == data
    assert again.layers[0].weights.shape == (again.layers[0].config.rows, again.layers[0].config.c_out)
    path = tmp_path / "net.cimb"
    b.save(str(path))
    assert cimsim.ModelBundle.load(str(path)).to_bytes() == data
    with pytest.raises(cimsim.LoadError):
        cimsim.ModelBundle.from_bytes(data[:20])


def test_build_bundle_from_python():
    layer = cimsim.BundleLayer()
    cfg = cimsim.LayerConfig()
    cfg.name = "fc"
    cfg.kind = cimsim.LayerKind.Fc
    cfg.c_in, cfg.c_out = 8, 4
    cfg.r_in, cfg.r_w, cfg.r_out = 4, 2, 8
    layer.config = cfg
    layer.weights = np.arange(32, dtype=np.uint8).reshape(8, 4) % 4
    b = cimsim.ModelBundle()
    b.input_c = 8
    b.layers = [layer]
    b.calibration = None
    b.validate()
    images = np.zeros((2, 1, 1, 8), dtype=np.int32)
    r = cimsim.run_network(b, images, [], IDEAL, True, 1)
    assert r["scores"] == [[128] * 4, [128] * 4]


def test_noise_spec_round_trip():
    spec = {
        "gammas": [1, 2, 4],
        "rms_lsb": [0.4, 0.5, 0.9],
        "settling_inl_lsb": 0.9,
        "injection_bound_lsb": 1.0,
        "sa_residual_sigma_lsb": 0.5,
    }
    text = cimsim.write_noise_spec(spec)
    assert text.startswith("field,gamma,value\n")
    assert cimsim.read_noise_spec(text) == spec
    with pytest.raises(cimsim.ConfigError):
        cimsim.write_noise_spec({**spec, "rms_lsb": [0.9, 0.5, 0.4]})


def test_cycles_examples():
    l = cimsim.LayerConfig()
    l.c_in, l.c_out = 64, 16
    c = cimsim.cycles_per_output(l)
    assert c["t_in"] == 36 and c["regime"] == "input-dominated"
    for mode in ("serial", "pipelined"):
        assert cimsim.simulate_timeline(l, 6, 5, mode) == cimsim.closed_form_cycles(l, 6, 5, mode)


def test_reference_network_ideal_agreement():
    b = cimsim.reference_bundle("mlp", 2)
    rng = np.random.default_rng(5)
    images = rng.integers(0, 1 << b.layers[0].config.r_in, size=(4, b.input_h, b.input_w, b.input_c), dtype=np.int32)
    r = cimsim.run_network(b, images, [0, 1, 2, 3], IDEAL, True, 2)
    assert len(r["predictions"]) == 4
    if r["oracle_predictions"]:
        assert r["predictions"] == r["oracle_predictions"]


def test_alpha_and_errors():
    assert cimsim.alpha_eff("serial", 1) > 10 * cimsim.alpha_eff("baseline")
    with pytest.raises(cimsim.ConfigError):
        cimsim.resolve_config({"noise.sede": "1"})
    with pytest.raises(ValueError):
        cimsim.alpha_eff("diagonal", 1)
    l = cimsim.LayerConfig()
    l.c_out = 0
    with pytest.raises(cimsim.ConfigError):
        l.validate()
    assert issubclass(cimsim.UnmappableError, RuntimeError)
    assert issubclass(cimsim.LoadError, ValueError)


def test_characterize_small():
    out = cimsim.characterize(IDEAL, gammas=[1, 4], iters=2, fill_step=32, cal_samples=10)
    assert [s["gamma"] for s in out["summary"]] == [1, 4]
    assert all(s["max_rms"] == 0 for s in out["summary"])
    assert out["noise_spec"]["gammas"] == [1, 4]
