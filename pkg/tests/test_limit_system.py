import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockgibbs.exceptions import StepTooLarge
from blockgibbs.experiments import rate_gap
from blockgibbs.finite_system import finite_rate
from blockgibbs.limit_system import (generator, generators, integrate, limit_psi, limit_rate,
                                     rk4_integrate, stationary_map, stationary_maps, vector_field)
from blockgibbs.model import example_model, make_model

OUTER = np.array([0.80387, 0.90146, 0.80387, 0.90146])


def _q_from_state1(v):
    v = np.asarray(v, dtype=float)
    return np.column_stack([v, 1 - v])


def other_models():
    three = np.array([[0.0, 1.0, -0.5], [1.0, 0.3, 0.2], [-0.5, 0.2, 0.0]])
    a = make_model(three, 2.5, limit_proportions=((0.2, 0.3, 0.7), (0.5, 0.6, 0.4), (0.3, 0.5, 0.5)))
    b = make_model(-np.eye(4), 1.7, edges=[(1, 2), (2, 1), (2, 3), (3, 2), (3, 4), (4, 3)],
                   limit_proportions=((0.7, 0.1, 0.9), (0.3, 0.5, 0.5)))
    return [a, b]


def test_psi_cancels_at_uniform(example):
    q = np.full((4, 2), 0.5)
    for j in (1, 2):
        for r in "cp":
            assert limit_psi(example, q, j, r, 1, 2) == pytest.approx(0.0)


def test_psi_hand_value(example):
    q = np.full((4, 2), 0.5)
    q[0] = q[1] = [1.0, 0.0]
    assert limit_psi(example, q, 1, "c", 1, 2) == pytest.approx(2.0)
    assert limit_psi(example, q, 1, "c", 2, 2) == 0.0
    assert limit_rate(example, q, 1, "c", 1, 2) == pytest.approx(np.exp(-2.0))


def test_rate_is_one_at_uniform(example):
    q = np.full((4, 2), 0.5)
    assert all(limit_rate(example, q, j, r, a, b) == pytest.approx(1.0)
               for j in (1, 2) for r in "cp" for a, b in ((1, 2), (2, 1)))


def test_rate_off_graph():
    spec = other_models()[1]
    q = np.full((4, 4), 0.25)
    assert limit_rate(spec, q, 1, "p", 1, 3) == 0.0


def test_generator_rows_sum_to_zero(rng):
    for spec in [example_model()] + other_models():
        q = rng.dirichlet(np.ones(spec.K), size=spec.n_classes)
        np.testing.assert_allclose(generators(spec, q).sum(axis=-1), 0.0, atol=1e-14)


def test_uniform_generator(example):
    A = generator(example, np.full((4, 2), 0.5), 2, "p")
    np.testing.assert_allclose(A, [[-1, 1], [1, -1]])


def test_zero_kernel_generator_ignores_q(rng):
    spec = example_model().with_interaction(W=np.zeros((2, 2)))
    a = generators(spec, rng.dirichlet([1, 1], size=4))
    b = generators(spec, rng.dirichlet([1, 1], size=4))
    np.testing.assert_array_equal(a, b)


def test_generator_entries_are_limit_rates(rng):
    spec = other_models()[0]
    q = rng.dirichlet(np.ones(3), size=6)
    A = generator(spec, q, 3, "c")
    for a in range(3):
        for b in range(3):
            if a != b:
                assert A[a, b] == pytest.approx(limit_rate(spec, q, 3, "c", a + 1, b + 1))


def test_stationary_map_uniform(example):
    np.testing.assert_allclose(stationary_map(example, np.full((4, 2), 0.5), 1, "c"), [0.5, 0.5])


def test_small_beta_stationary_map(rng):
    spec = example_model(beta=1e-12)
    np.testing.assert_allclose(stationary_maps(spec, rng.dirichlet([1, 1], size=4)), 0.5, atol=1e-11)


def test_stationary_maps_annihilate_generators(rng):
    for spec in [example_model()] + other_models():
        for q in rng.dirichlet(np.ones(spec.K), size=(100, spec.n_classes)):
            res = np.einsum("mz,mzy->my", stationary_maps(spec, q), generators(spec, q))
            assert np.abs(res).max() < 1e-10


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), beta=st.floats(0.01, 50.0))
def test_stationary_maps_strictly_positive(seed, beta):
    rng = np.random.default_rng(seed)
    spec = other_models()[0].with_interaction(beta=beta)
    q = rng.dirichlet(np.full(3, 0.3), size=6)
    q[0] = [1.0, 0.0, 0.0]
    assert np.all(stationary_maps(spec, q) > 0)


def test_vector_field_zero_at_uniform(example):
    np.testing.assert_allclose(vector_field(example, np.full((4, 2), 0.5)), 0.0, atol=1e-15)


def test_vector_field_tangent(rng):
    for spec in other_models():
        q = rng.dirichlet(np.ones(spec.K), size=spec.n_classes)
        np.testing.assert_allclose(vector_field(spec, q).sum(axis=-1), 0.0, atol=1e-14)


def test_vector_field_batched(rng):
    spec = other_models()[0]
    qs = rng.dirichlet(np.ones(3), size=(5, 6))
    batch = vector_field(spec, qs)
    for k in range(5):
        np.testing.assert_allclose(batch[k], vector_field(spec, qs[k]), atol=1e-15)


def test_self_consistent_point_zeroes_field(example):
    q = _q_from_state1([0.9] * 4)
    for _ in range(2000):
        q = stationary_maps(example, q)
    assert np.abs(vector_field(example, q)).max() < 1e-8


def test_fixed_point_trajectory_is_constant(example):
    tr = integrate(example, np.full((4, 2), 0.5), 10.0, 1e-2)
    assert np.abs(tr.values - 0.5).max() < 1e-9


def test_converges_to_outer_point(example):
    tr = integrate(example, _q_from_state1([0.8] * 4), 50.0, 1e-2)
    np.testing.assert_allclose(tr.values[-1, :, 0], OUTER, atol=1e-3)


def test_mass_conservation_and_positivity(rng):
    for spec in [example_model()] + other_models():
        q0 = rng.dirichlet(np.ones(spec.K), size=spec.n_classes)
        tr = integrate(spec, q0, 10.0, 1e-2)
        assert np.abs(tr.values.sum(axis=-1) - 1).max() < 1e-9
        assert tr.values.min() >= 0


def test_rk4_order(example):
    q0 = _q_from_state1([0.7, 0.4, 0.2, 0.6])
    ref = rk4_integrate(example, q0, 1.0, 1e-3)[1][-1]
    e1 = np.abs(rk4_integrate(example, q0, 1.0, 0.1)[1][-1] - ref).max()
    e2 = np.abs(rk4_integrate(example, q0, 1.0, 0.05)[1][-1] - ref).max()
    assert 10 < e1 / e2 < 25


def test_oversized_step_is_reported():
    spec = example_model(beta=200.0)
    with pytest.raises(StepTooLarge):
        integrate(spec, _q_from_state1([0.99, 0.01, 0.5, 0.5]), 5.0, 2.0)


def test_dt_must_be_positive(example):
    with pytest.raises(ValueError):
        integrate(example, np.full((4, 2), 0.5), 1.0, 0.0)


def test_finite_rates_approach_limit_rates(example):
    gaps = [rate_gap(example, N, n_q=10, seed=3) for N in (100, 1000, 10000)]
    C = 2 * example.beta * np.abs(example.W).max()
    assert gaps[0] > gaps[1] > gaps[2]
    for g, N in zip(gaps, (100, 1000, 10000)):
        assert g <= 5 * C / N


def test_finite_rate_close_for_large_classes(rng):
    spec = other_models()[0].with_sizes(((200, 300), (500, 400), (300, 300)))
    q = rng.dirichlet(np.ones(3), size=6)
    for r in "cp":
        assert finite_rate(spec, q, 2, r, 1, 3) == pytest.approx(limit_rate(spec, q, 2, r, 1, 3), abs=0.05)
