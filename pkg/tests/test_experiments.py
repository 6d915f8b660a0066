import json

import numpy as np
import pytest

from graphadvect.errors import DegenerateSplit, ParseError, UnknownNode, ValidationError, EmptyData
from graphadvect.experiments import (
    SyntheticTrafficConfig,
    generate_traffic_data,
    holdout_split,
    ingest_sensor_csv,
    run_regression_experiment,
)
from graphadvect.gp import TrainingData
from graphadvect.graphs import FamilyKind, GraphFamily, OperatorKind


def line(n=10, kind=FamilyKind.UPWIND_LINE):
    return GraphFamily(kind, n)


def test_traffic_profile_noise_free():
    d = generate_traffic_data(SyntheticTrafficConfig(line(), noise_std=0))
    y = d.targets
    np.testing.assert_array_equal(d.node_indices, np.arange(10))
    np.testing.assert_array_equal(y[:4], 15)
    np.testing.assert_array_equal(y[6:], 65)
    assert 15 < y[4] < y[5] < 65


def test_traffic_dense_half_is_slow():
    d = generate_traffic_data(SyntheticTrafficConfig(line(200), seed=3))
    assert d.targets[:100].mean() < d.targets[100:].mean()


def test_traffic_ramp_width():
    y = generate_traffic_data(SyntheticTrafficConfig(line(400), noise_std=0)).targets
    ramp = (y > 15) & (y < 65)
    assert 38 <= ramp.sum() <= 42


def test_traffic_deterministic_per_seed():
    cfg = SyntheticTrafficConfig(line(50), seed=4)
    np.testing.assert_array_equal(generate_traffic_data(cfg).targets, generate_traffic_data(cfg).targets)
    other = SyntheticTrafficConfig(line(50), seed=5)
    assert not np.array_equal(generate_traffic_data(cfg).targets, generate_traffic_data(other).targets)


def test_traffic_config_validation():
    with pytest.raises(ValidationError):
        SyntheticTrafficConfig(line(9))
    with pytest.raises(ValidationError):
        SyntheticTrafficConfig(line(), noise_std=-1)
    with pytest.raises(ValidationError):
        SyntheticTrafficConfig(line(), low_speed=0)
    assert SyntheticTrafficConfig(line(), node_count=30).family.n == 30


def test_holdout_sizes_and_partition():
    d = TrainingData(np.arange(10), np.arange(10.0))
    tr, te = holdout_split(d, 0.7, seed=1)
    assert (len(tr), len(te)) == (7, 3)
    assert set(tr.node_indices) | set(te.node_indices) == set(range(10))
    assert not set(tr.node_indices) & set(te.node_indices)
    np.testing.assert_array_equal(tr.targets, tr.node_indices.astype(float))


def test_holdout_deterministic():
    d = TrainingData(np.arange(40), np.zeros(40))
    a, _ = holdout_split(d, 0.7, 3)
    b, _ = holdout_split(d, 0.7, 3)
    np.testing.assert_array_equal(a.node_indices, b.node_indices)


def test_holdout_degenerate():
    with pytest.raises(DegenerateSplit):
        holdout_split(TrainingData([0, 1], [0.0, 1.0]), 0.999, 0)
    with pytest.raises(ValidationError):
        holdout_split(TrainingData([0, 1], [0.0, 1.0]), 1.0, 0)


def test_loop_advection_equals_consensus():
    cfg = SyntheticTrafficConfig(GraphFamily(FamilyKind.LOOP, 40), seed=2)
    a = run_regression_experiment(cfg, OperatorKind.ADVECTION, fit_budget=30, seed=2)
    c = run_regression_experiment(cfg, OperatorKind.CONSENSUS, fit_budget=30, seed=2)
    assert a.l2_error == c.l2_error
    assert a.hyperparams == c.hyperparams


def test_experiment_serialization_byte_stable():
    cfg = SyntheticTrafficConfig(line(30), seed=1)
    a = run_regression_experiment(cfg, "advection", fit_budget=20, seed=1)
    b = run_regression_experiment(cfg, "advection", fit_budget=20, seed=1)
    assert a.to_json() == b.to_json()
    obj = json.loads(a.to_json())
    assert obj["operator_kind"] == "advection" and obj["node_count"] == 30
    assert "wall_time" in json.loads(a.to_json(include_timing=True))


def test_experiment_noise_free_full_observation():
    # with 99% observed and no noise the GP essentially interpolates
    cfg = SyntheticTrafficConfig(GraphFamily(FamilyKind.LOOP, 200), noise_std=0.0, seed=0)
    res = run_regression_experiment(cfg, "advection", fit_budget=60, seed=0, train_fraction=0.99)
    _, test = holdout_split(generate_traffic_data(cfg), 0.99, 0)
    # the learned noise variance stays well above zero, so this is not machine precision
    assert res.l2_error < 1e-3 * np.linalg.norm(test.targets)
    assert all(np.isfinite(v) and v > 0 for v in (res.hyperparams.nu, res.hyperparams.kappa))


def write(path, text):
    path.write_text(text)
    return path


def test_ingest_roundtrip(tmp_path):
    g = write(tmp_path / "g.csv", "source,target,weight\n0,1,1.0\n1,2,0.5\n")
    d = write(tmp_path / "d.csv", "node,speed_mph\n0,55.0\n2,61.5\n")
    graph, data = ingest_sensor_csv(g, d)
    assert graph.node_count == 3 and len(data) == 2
    np.testing.assert_array_equal(data.targets, [55.0, 61.5])


def test_ingest_unknown_node(tmp_path):
    g = write(tmp_path / "g.csv", "source,target,weight\n0,1,1.0\n1,2,0.5\n")
    d = write(tmp_path / "d.csv", "node,speed_mph\n99,55.0\n")
    with pytest.raises(UnknownNode):
        ingest_sensor_csv(g, d)


def test_ingest_duplicate_observation(tmp_path):
    g = write(tmp_path / "g.csv", "source,target,weight\n0,1,1.0\n")
    d = write(tmp_path / "d.csv", "node,speed_mph\n1,55.0\n1,56.0\n")
    with pytest.raises(ParseError):
        ingest_sensor_csv(g, d)


@pytest.mark.parametrize(
    "graph_text, data_text, exc",
    [
        ("src,dst,w\n0,1,1\n", "node,speed_mph\n0,1\n", ParseError),
        ("source,target,weight\n0,1,abc\n", "node,speed_mph\n0,1\n", ParseError),
        ("source,target,weight\n0,1\n", "node,speed_mph\n0,1\n", ParseError),
        ("source,target,weight\n0,1,1\n", "node,speed_mph\n", EmptyData),
        ("source,target,weight\n0,1,1\n", "node,speed_mph\n0,nan\n", ParseError),
    ],
)
def test_ingest_errors(tmp_path, graph_text, data_text, exc):
    g = write(tmp_path / "g.csv", graph_text)
    d = write(tmp_path / "d.csv", data_text)
    with pytest.raises(exc):
        ingest_sensor_csv(g, d)
