import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from proxvr import L1, Zero, make_quadratic_l1
from proxvr.core import (ContractViolation, FunctionalProblem, NumericOverflowError,
                         OracleCounters, UnsupportedOperation, check_vector,
                         component_gradient_batch, evaluate_phi, full_gradient)
from proxvr.problems import make_online

from oracles import all_batches, per_component_gradients


def half_sq(dim=2):
    return FunctionalProblem([lambda x: 0.5 * float(x @ x)], [lambda x: x.copy()], dim)


def test_evaluate_phi_centered_quadratic():
    assert evaluate_phi(half_sq(), [0.0, 0.0]) == 0.0


def test_evaluate_phi_with_l1():
    p = half_sq()
    p.h = L1(1.0)
    assert evaluate_phi(p, [1.0, -2.0]) == pytest.approx(5.5, abs=0)


def test_evaluate_phi_matches_summation():
    p = make_quadratic_l1(200, 10, l1_weight=0.05, seed=42)
    x = np.zeros(10)
    manual = sum(0.5 * (p.A[i] @ x - p.y[i]) ** 2 for i in range(p.n)) / p.n
    manual += 0.05 * np.abs(x).sum()
    assert evaluate_phi(p, x) == pytest.approx(manual, rel=1e-13)


def test_evaluate_phi_contracts():
    p = half_sq()
    with pytest.raises(ContractViolation):
        evaluate_phi(p, [1.0, 2.0, 3.0])
    with pytest.raises(ContractViolation):
        evaluate_phi(p, [np.nan, 0.0])
    big = FunctionalProblem([lambda x: np.inf], [lambda x: x], 1)
    with pytest.raises(NumericOverflowError):
        evaluate_phi(big, [1.0])


def test_evaluate_phi_does_not_charge():
    p = make_quadratic_l1(20, 3, seed=1)
    c = OracleCounters()
    full_gradient(p, np.ones(3), c)
    before = c.snapshot()
    evaluate_phi(p, np.ones(3))
    assert c.snapshot() == before


def test_full_gradient_examples():
    assert full_gradient(half_sq(1), [3.0]).tolist() == [3.0]
    lin = FunctionalProblem([lambda x: x[0], lambda x: -x[0]],
                            [lambda x: np.ones(1), lambda x: -np.ones(1)], 1)
    for x in (-2.0, 0.0, 5.0):
        assert full_gradient(lin, [x]).tolist() == [0.0]


def test_full_gradient_matches_per_component_loop():
    p = make_quadratic_l1(300, 8, l1_weight=0.1, seed=7)
    x = np.random.default_rng(0).standard_normal(8)
    c = OracleCounters()
    g = full_gradient(p, x, c)
    np.testing.assert_allclose(g, per_component_gradients(p, x).mean(axis=0), rtol=1e-12, atol=1e-14)
    assert c.sfo == c.sfo_paper_convention == 300


def test_full_gradient_streaming_rejected():
    p = make_online(make_quadratic_l1(20, 3, seed=1))
    with pytest.raises(UnsupportedOperation):
        full_gradient(p, np.zeros(3))


def test_batch_gradient_examples():
    p = make_quadratic_l1(6, 3, seed=2)
    x = np.array([0.3, -1.0, 2.0])
    c = OracleCounters()
    np.testing.assert_allclose(component_gradient_batch(p, x, np.arange(6), c),
                               full_gradient(p, x), rtol=1e-13, atol=1e-15)
    assert c.sfo == c.sfo_paper_convention == 6
    np.testing.assert_array_equal(component_gradient_batch(p, x, np.array([4])),
                                  p.component_gradient(x, 4))
    with pytest.raises(ContractViolation):
        component_gradient_batch(p, x, np.array([], dtype=np.int64))


def test_batch_gradient_pairs_average_to_full_gradient():
    p = make_quadratic_l1(6, 3, seed=3)
    x = np.array([1.0, 0.5, -0.25])
    batches = all_batches(6, 2)
    assert len(batches) == 36
    avg = np.mean([component_gradient_batch(p, x, b) for b in batches], axis=0)
    np.testing.assert_allclose(avg, full_gradient(p, x), rtol=1e-12, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), b=st.integers(1, 3), seed=st.integers(0, 1000))
def test_unbiased_batch_gradient_exhaustive(n, b, seed):
    d = min(n, 3)
    p = make_quadratic_l1(n, d, spectrum=(0.5, 0.5) if d == 1 else (0.1, 1.0), seed=seed)
    x = np.random.default_rng(seed).standard_normal(d)
    avg = np.mean([component_gradient_batch(p, x, bt) for bt in all_batches(n, b)], axis=0)
    np.testing.assert_allclose(avg, full_gradient(p, x), rtol=1e-11, atol=1e-12)


def test_check_vector():
    assert check_vector([1, 2]).dtype == np.float64
    with pytest.raises(ContractViolation):
        check_vector([[1.0]])
    with pytest.raises(ContractViolation):
        check_vector([1.0], dim=2)


def test_problem_constant_validation():
    from proxvr.core import CompositeProblem
    with pytest.raises(ContractViolation):
        CompositeProblem(1, 1, Zero(), L=0.0)
    with pytest.raises(ContractViolation):
        CompositeProblem(1, 1, Zero(), L=1.0, mu=2.0)
    with pytest.raises(ContractViolation):
        CompositeProblem(1, 1, Zero(), L=1.0, sigma=-1.0)
    with pytest.raises(ContractViolation):
        CompositeProblem(1, 1, Zero(), L=1.0, rho=0.0)


def test_counters_charge_conventions():
    c = OracleCounters()
    c.charge(10)
    c.charge(8, 4)
    assert (c.sfo, c.sfo_paper_convention) == (18, 14)
