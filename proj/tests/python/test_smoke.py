import json
import os

import numpy as np
import pytest

import sparse_bvm as sb

CONFIG = {
    "dataset": {"truth": "smooth_prod", "n": 120, "p": 1, "design": "grid", "seed": 3},
    "prior": {"hidden": [4], "adaptive_s": True},
    "chain": {"n_iter": 800, "burn_in": 200, "seed": 5},
    "functional": {"kind": "linear", "a": 1.0, "ci_level": 0.95},
}


def fixture(name):
    with open(os.path.join(os.environ["SBVM_FIXTURE_DIR"], name)) as f:
        return f.read()


def test_simulate_is_deterministic_and_additive():
    a = sb.simulate(CONFIG)
    b = sb.simulate(CONFIG)
    assert a["x"].shape == (120, 1)
    np.testing.assert_array_equal(a["y"], b["y"])
    np.testing.assert_array_equal(a["y"], a["f0"] + a["eps"])


def test_config_errors_name_the_field():
    with pytest.raises(sb.SbvmError, match="chain.n_itr"):
        sb.validate_config({"chain": {"n_itr": 5}})
    with pytest.raises(ValueError):
        sb.validate_config({"dataset": {"truth": "missing"}})


def test_fit_traces():
    d = sb.simulate(CONFIG)
    out = sb.fit(CONFIG, d["x"], d["y"])
    assert len(out["s"]) == 600
    assert 0.0 <= out["summary"]["acceptance"]["weights"]["rate"] <= 1.0
    assert out["final_network"]["format"] == "sbvm-network"
    again = sb.fit(CONFIG, d["x"], d["y"])
    assert again["s"] == out["s"]


def test_bvm_report():
    d = sb.simulate(CONFIG)
    r = sb.bvm(CONFIG, d["x"], d["y"], d["eps"])
    assert r["n_draws"] == 600
    assert r["ci_lower"] <= r["ci_upper"]
    assert 0.0 <= r["ks_distance"] <= 1.0


def test_coverage_at_full_level():
    cfg = dict(CONFIG, functional={"kind": "linear", "ci_level": 1.0}, study={"replications": 20, "master_seed": 4})
    s = sb.coverage(cfg, workers=2)
    assert s["coverage_rate"] == 1.0
    assert s["completed"] == 20


def test_regions_on_fixture():
    net = fixture("two_unit_network.json")
    x = np.random.default_rng(0).uniform(size=(400, 2))
    cells = sb.regions(net, x)
    assert len(cells) <= 5
    f = sb.forward(net, x)
    for c in cells:
        rows = np.array(c["members"])
        np.testing.assert_allclose(x[rows] @ c["slope"] + c["intercept"], f[rows], atol=1e-12)


def test_construct():
    net = json.loads(fixture("two_unit_network.json"))
    out = sb.construct(net)
    assert out["s_new"] == out["s_star"] + 2 * 2 - out["top_nonzero"]
    x = np.random.default_rng(1).uniform(size=(1000, 2))
    np.testing.assert_allclose(sb.forward(out["network"], x), sb.forward(net, x), atol=1e-12)
    net["layers"][1]["weights"] = [[0, 0]]
    with pytest.raises(sb.SbvmError, match="no connected output node"):
        sb.construct(net)
