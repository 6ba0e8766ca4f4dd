"""Moment propagation probe: fixed-point behavior and report plumbing."""

import csv
import io
import json

import numpy as np
import pytest

import scnn.rng as R
from scnn.errors import ConfigError
from scnn.layers import DropoutSpec
from scnn.moments import MomentReport, compare, comparison_csv, propagate


def _probe(**kw):
    base = dict(
        depth=6,
        width=64,
        activation="selu",
        init="lecun_normal",
        n_samples=10_000,
        rng=R.stream(0, R.MOMENTS),
    )
    base.update(kw)
    return propagate(**base)


def test_report_shape_and_metadata():
    rep = _probe()
    assert rep.depth == 6
    assert len(rep.means) == 6 and len(rep.variances) == 6
    assert rep.activation == "selu"
    m1, v1 = rep.layer(1)
    assert m1 == rep.means[0] and v1 == rep.variances[0]
    with pytest.raises(ConfigError):
        rep.layer(0)
    with pytest.raises(ConfigError):
        rep.layer(7)


def test_selu_lecun_holds_unit_moments():
    rep = _probe(depth=12, width=128, n_samples=20_000)
    assert np.all(np.abs(rep.means) < 0.1)
    assert np.all((rep.variances > 0.8) & (rep.variances < 1.2))


def test_selu_restores_scaled_inputs_toward_unit_variance():
    rep = _probe(
        depth=12, width=128, input_dist="scaled_normal", input_sigma=3.0, n_samples=20_000
    )
    # variance starts far from 1 and is pulled back within a few layers
    assert abs(rep.variances[-1] - 1.0) < abs(rep.variances[0] - 1.0)
    assert abs(rep.variances[-1] - 1.0) < 0.2


def test_relu_drifts_where_selu_does_not():
    selu_rep = _probe(depth=12, width=128)
    relu_rep = _probe(depth=12, width=128, activation="relu")
    selu_err = abs(selu_rep.variances[-1] - 1.0)
    relu_err = abs(relu_rep.variances[-1] - 1.0)
    assert selu_err < relu_err  # relu under lecun-normal decays or drifts


def test_zeros_init_collapses_all_layers():
    rep = _probe(init="zeros")
    np.testing.assert_array_equal(rep.means, np.zeros(6))
    np.testing.assert_array_equal(rep.variances, np.zeros(6))


def test_alpha_dropout_keeps_moments_in_probe():
    spec = DropoutSpec(kind="alpha", rate=0.1)
    rep = _probe(depth=8, width=128, dropout=spec, n_samples=20_000)
    assert np.all(np.abs(rep.means) < 0.15)
    assert np.all((rep.variances > 0.75) & (rep.variances < 1.25))


def test_propagate_is_deterministic_per_stream():
    a = _probe()
    b = _probe()
    np.testing.assert_array_equal(a.means, b.means)
    np.testing.assert_array_equal(a.variances, b.variances)
    c = _probe(rng=R.stream(1, R.MOMENTS))
    assert not np.array_equal(a.means, c.means)


def test_propagate_argument_validation():
    rng = R.stream(0, R.MOMENTS)
    with pytest.raises(ConfigError):
        propagate(0, 64, "selu", "lecun_normal", n_samples=10_000, rng=rng)
    with pytest.raises(ConfigError):
        propagate(2, 4, "selu", "lecun_normal", n_samples=10_000, rng=rng)
    with pytest.raises(ConfigError):
        propagate(2, 64, "selu", "lecun_normal", n_samples=100, rng=rng)
    with pytest.raises(ConfigError):
        propagate(2, 64, "gelu", "lecun_normal", n_samples=10_000, rng=rng)
    with pytest.raises(ConfigError):
        propagate(2, 64, "selu", "orthogonal", n_samples=10_000, rng=rng)
    with pytest.raises(ConfigError):
        propagate(2, 64, "selu", "lecun_normal", n_samples=10_000, rng=rng, input_dist="poisson")
    with pytest.raises(ConfigError):
        propagate(
            2, 64, "selu", "lecun_normal", n_samples=10_000, rng=rng,
            input_dist="scaled_normal", input_sigma=0.0,
        )
    with pytest.raises(ConfigError):
        propagate(2, 64, "selu", "lecun_normal", n_samples=10_000)


def test_report_serialization_round_trip():
    rep = _probe()
    doc = json.loads(rep.to_json())
    assert doc["activation"] == "selu"
    assert len(doc["layers"]) == 6

    table = rep.to_csv()
    rows = list(csv.DictReader(io.StringIO(table)))
    assert len(rows) == 6
    # repr-formatted floats parse back exactly
    assert float(rows[0]["mean"]) == rep.means[0]


def test_compare_two_reports_with_diffs():
    selu_rep = _probe()
    elu_rep = _probe(activation="elu")
    rows = compare([selu_rep, elu_rep])
    assert len(rows) == 6
    first = rows[0]
    assert first["layer"] == 1
    mean_keys = [k for k in first if k.endswith(".mean")]
    assert len(mean_keys) == 2
    assert "mean_diff" in first and "variance_diff" in first
    text = comparison_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == 6

    three = compare([selu_rep, elu_rep, _probe(activation="relu")])
    assert "mean_diff" not in three[0]


def test_compare_rejects_bad_inputs():
    rep = _probe()
    with pytest.raises(ConfigError):
        compare([rep])
    with pytest.raises(ConfigError):
        compare([rep, _probe(depth=3)])
