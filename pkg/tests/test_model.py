import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockgibbs.exceptions import ModelValidationError, SizeMismatch
from blockgibbs.model import (Configuration, class_index, configuration_from_counts,
                              empirical_vector, example_model, load_model, make_model,
                              model_errors, model_from_dict, model_to_dict, round_counts,
                              sample_initial_configuration, save_model, uniform_vector,
                              validate_model)

from conftest import ANTI


def test_example_model_is_valid(example):
    assert validate_model(example) is example
    assert example.K == 2 and example.r == 2 and example.beta == 4.0


def test_one_way_edge_is_rejected():
    spec = make_model(ANTI, 4.0, edges=[(1, 2)], limit_proportions=((1.0, 0.5, 0.5),))
    with pytest.raises(ModelValidationError) as err:
        validate_model(spec)
    assert "AsymmetricEdges" in err.value.codes


def test_block_weights_must_sum_to_one():
    spec = make_model(ANTI, 4.0, limit_proportions=((0.6, 0.5, 0.5), (0.6, 0.5, 0.5)))
    assert "BadProportions" in [c for c, _ in model_errors(spec)]


@pytest.mark.parametrize("mutation, code", [
    (dict(W=[[0.0, 1.0], [2.0, 0.0]]), "AsymmetricW"),
    (dict(beta=0.0), "BadBeta"),
    (dict(beta=-1.0), "BadBeta"),
])
def test_interaction_errors(mutation, code):
    kw = dict(W=ANTI, beta=4.0)
    kw.update(mutation)
    spec = make_model(kw["W"], kw["beta"], limit_proportions=((1.0, 0.5, 0.5),))
    assert code in [c for c, _ in model_errors(spec)]


def test_disconnected_jump_graph():
    W = np.zeros((3, 3))
    spec = make_model(W, 1.0, edges=[(1, 2), (2, 1)], limit_proportions=((1.0, 0.5, 0.5),))
    assert "ReducibleJumpGraph" in [c for c, _ in model_errors(spec)]


def test_zero_size_rejected():
    spec = make_model(ANTI, 1.0, finite_sizes=((0, 1),))
    assert "BadSizes" in [c for c, _ in model_errors(spec)]


def test_all_errors_reported_together():
    spec = make_model([[0.0, 1.0], [2.0, 0.0]], -1.0, edges=[(1, 2)],
                      limit_proportions=((0.3, 0.5, 0.5),))
    codes = [c for c, _ in model_errors(spec)]
    assert {"AsymmetricW", "BadBeta", "AsymmetricEdges", "BadProportions"} <= set(codes)


def test_validation_has_no_side_effects(example):
    before = model_to_dict(example)
    validate_model(example)
    validate_model(example)
    assert model_to_dict(example) == before


def test_class_ordering():
    assert [class_index(j, r) for j in (1, 2) for r in "cp"] == [0, 1, 2, 3]


def test_single_node_classes():
    spec = make_model(ANTI, 1.0, finite_sizes=((1, 1),))
    q = empirical_vector(spec, Configuration([1, 1]))
    np.testing.assert_array_equal(q, [[1, 0], [1, 0]])


def test_two_central_nodes_split_evenly():
    spec = make_model(ANTI, 1.0, finite_sizes=((2, 1),))
    q = empirical_vector(spec, Configuration([1, 2, 1]))
    np.testing.assert_array_equal(q[0], [0.5, 0.5])


def test_wrong_length_configuration():
    spec = make_model(ANTI, 1.0, finite_sizes=((2, 1),))
    with pytest.raises(SizeMismatch):
        empirical_vector(spec, Configuration([1, 2]))


def test_degenerate_initial_law():
    spec = example_model(class_size=5)
    nu = np.tile([1.0, 0.0], (4, 1))
    assert np.all(sample_initial_configuration(spec, nu, 3).states == 1)


def test_initial_sampling_is_seeded():
    spec = example_model(class_size=20)
    nu = uniform_vector(spec)
    a = sample_initial_configuration(spec, nu, 99)
    b = sample_initial_configuration(spec, nu, 99)
    np.testing.assert_array_equal(a.states, b.states)


def test_large_classes_concentrate_near_uniform():
    spec = example_model(class_size=10000)
    nu = uniform_vector(spec)
    devs = [np.abs(empirical_vector(spec, sample_initial_configuration(spec, nu, s)) - 0.5).max()
            for s in range(5)]
    assert np.mean(devs) < 0.02


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), size=st.integers(1, 30), K=st.integers(2, 5))
def test_sampled_configurations_round_trip(seed, size, K):
    rng = np.random.default_rng(seed)
    spec = make_model(np.zeros((K, K)), 1.0, finite_sizes=((size, size + 1), (1, size)))
    nu = rng.dirichlet(np.ones(K), size=4)
    q = empirical_vector(spec, sample_initial_configuration(spec, nu, seed))
    assert np.all(q >= 0)
    np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_round_counts_matches_sizes(seed):
    rng = np.random.default_rng(seed)
    spec = example_model(class_size=int(rng.integers(1, 40)))
    q = rng.dirichlet(np.ones(2), size=4)
    counts = round_counts(spec, q)
    assert np.all(counts.sum(axis=1) == spec.sizes)
    assert np.abs(counts / spec.sizes[:, None] - q).max() <= 1.0 / spec.sizes.min()
    x = configuration_from_counts(spec, counts)
    np.testing.assert_allclose(empirical_vector(spec, x), counts / spec.sizes[:, None])


def test_proportions_follow_sizes():
    spec = make_model(ANTI, 1.0, finite_sizes=((1, 3), (2, 2)))
    np.testing.assert_allclose(spec.proportions, [[0.5, 0.25, 0.75], [0.5, 0.5, 0.5]])
    assert spec.N == 8


def test_interaction_mask_matches_block_graph():
    spec = make_model(ANTI, 1.0, finite_sizes=((1, 1), (1, 1)))
    # nodes: 1c, 1p, 2c, 2p
    expected = np.array([[1, 1, 0, 0],
                         [1, 1, 0, 1],
                         [0, 0, 1, 1],
                         [0, 1, 1, 1]])
    np.testing.assert_array_equal(spec.interaction_mask, expected)


def test_json_round_trip(tmp_path, example):
    spec = example.with_sizes(((3, 4), (5, 6)))
    path = tmp_path / "m.json"
    save_model(spec, path)
    back = load_model(path)
    assert model_to_dict(back) == model_to_dict(spec)


def test_missing_key_is_named():
    d = model_to_dict(example_model())
    del d["interaction"]["beta"]
    with pytest.raises(ModelValidationError, match="interaction.beta"):
        model_from_dict(d)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ModelValidationError) as err:
        load_model(p)
    assert err.value.codes == ["BadJSON"]


def test_json_layout_is_plain(tmp_path, example):
    p = tmp_path / "m.json"
    save_model(example, p)
    d = json.loads(p.read_text())
    assert set(d) == {"state_space", "interaction", "blocks"}
