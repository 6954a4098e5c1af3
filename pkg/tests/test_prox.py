import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from proxvr import BallIndicator, BoxIndicator, L1, Zero, make_quadratic_l1, prox_apply
from proxvr.core import ContractViolation, FunctionalProblem, OracleCounters, UnsupportedOperation
from proxvr.problems import make_online, reference_optimum
from proxvr.prox import gradient_mapping, prox_from_dict

from oracles import brute_prox, prox_l1_oracle, project_disk_by_sampling

vec = arrays(np.float64, st.integers(1, 6), elements=st.floats(-10, 10))


def random_spec(rng, d):
    kind = ["zero", "l1", "box", "ball"][rng.integers(4)]
    if kind == "zero":
        return Zero(), kind, {}
    if kind == "l1":
        lam = float(rng.uniform(0, 3))
        return L1(lam), kind, {"lam": lam}
    if kind == "box":
        a, b = rng.normal(size=d), rng.normal(size=d)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return BoxIndicator(lo, hi), kind, {"lo": lo, "hi": hi}
    r = float(rng.uniform(0.1, 3))
    return BallIndicator(r), kind, {"radius": r}


def test_zero_is_identity():
    x = np.array([1.0, -2.0, 3.5])
    np.testing.assert_array_equal(prox_apply(Zero(), x, 0.7), x)


def test_l1_soft_threshold_example():
    out = prox_apply(L1(1.0), np.array([3.0, -0.5, 0.2]), 1.0)
    np.testing.assert_array_equal(out, [2.0, 0.0, 0.0])
    np.testing.assert_allclose(prox_l1_oracle([3.0, -0.5, 0.2], 1.0, 1.0), [2.0, 0.0, 0.0], atol=1e-8)


def test_ball_example():
    out = prox_apply(BallIndicator(1.0), np.array([3.0, 4.0]), 0.3)
    np.testing.assert_allclose(out, [0.6, 0.8], rtol=0, atol=1e-15)
    np.testing.assert_allclose(project_disk_by_sampling(np.array([3.0, 4.0]), 1.0), out, atol=1e-4)


def test_eta_must_be_positive():
    for eta in (0.0, -1.0):
        with pytest.raises(ContractViolation):
            prox_apply(L1(1.0), np.ones(2), eta)


def test_po_counter():
    c = OracleCounters()
    for _ in range(3):
        prox_apply(Zero(), np.ones(2), 1.0, c)
    assert c.po == 3


def test_prox_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        d = int(rng.integers(1, 6))
        spec, kind, params = random_spec(rng, d)
        x = rng.normal(scale=3, size=d)
        eta = float(rng.uniform(0.01, 3))
        np.testing.assert_allclose(prox_apply(spec, x, eta), brute_prox(kind, params, x, eta),
                                   atol=1e-6)


def test_points_on_boundary_are_fixed():
    x = np.array([0.6, 0.8])
    np.testing.assert_array_equal(prox_apply(BallIndicator(1.0), x, 1.0), x)
    box = BoxIndicator([-1.0, 0.0], [1.0, 2.0])
    corner = np.array([1.0, 0.0])
    np.testing.assert_array_equal(prox_apply(box, corner, 1.0), corner)


def test_indicator_values():
    assert BallIndicator(1.0).value(np.array([2.0, 0.0])) == np.inf
    assert BoxIndicator(0.0, 1.0).value(np.array([0.5, 0.5])) == 0.0
    assert BoxIndicator(0.0, 1.0).value(np.array([1.5, 0.5])) == np.inf
    with pytest.raises(ContractViolation):
        BoxIndicator([1.0], [0.0])
    with pytest.raises(ContractViolation):
        L1(-0.1)
    with pytest.raises(ContractViolation):
        BallIndicator(0.0)


def test_prox_dict_round_trip():
    for spec in (Zero(), L1(0.3), BallIndicator(2.0)):
        assert prox_from_dict(spec.to_dict()) == spec
    box = prox_from_dict(BoxIndicator([0.0, 1.0], [1.0, 2.0]).to_dict())
    assert box.lo.tolist() == [0.0, 1.0] and box.hi.tolist() == [1.0, 2.0]


@settings(max_examples=200, deadline=None)
@given(x=vec, data=st.data(), eta=st.floats(0.01, 10), lam=st.floats(0, 5),
       r=st.floats(0.1, 5))
def test_nonexpansive(x, data, eta, lam, r):
    y = data.draw(arrays(np.float64, x.shape, elements=st.floats(-10, 10)))
    for spec in (Zero(), L1(lam), BoxIndicator(-1.0, 2.0), BallIndicator(r)):
        d = np.linalg.norm(prox_apply(spec, x, eta) - prox_apply(spec, y, eta))
        assert d <= np.linalg.norm(x - y) * (1 + 1e-12) + 1e-12


def scalar_problem():
    # f(x) = 1/2 (x - 2)^2, h = |x|
    return FunctionalProblem([lambda x: 0.5 * float((x[0] - 2.0) ** 2)],
                             [lambda x: x - 2.0], 1, h=L1(1.0))


def test_gradient_mapping_hand_example():
    G, norm = gradient_mapping(scalar_problem(), np.array([0.0]), 0.1)
    np.testing.assert_allclose(G, [-1.0], rtol=1e-14)
    assert norm == pytest.approx(1.0, rel=1e-14)
    # the same number from the brute-force prox
    xp = prox_l1_oracle(np.array([0.2]), 1.0, 0.1)
    assert (0.0 - xp[0]) / 0.1 == pytest.approx(-1.0, abs=1e-6)


def test_gradient_mapping_reduces_to_gradient():
    p = make_quadratic_l1(50, 5, seed=4)
    x = np.random.default_rng(1).normal(size=5)
    g = p.mean_gradient(x)
    for eta in (0.01, 0.5, 3.0):
        G, _ = gradient_mapping(p, x, eta)
        np.testing.assert_allclose(G, g, rtol=1e-9, atol=1e-12)


def test_gradient_mapping_vanishes_at_reference_optimum():
    p = make_quadratic_l1(200, 10, l1_weight=0.05, seed=5)
    _, xs = reference_optimum(p, tol=1e-10)
    _, norm = gradient_mapping(p, xs, 1.0 / (2 * p.L))
    assert norm <= 1e-8


def test_gradient_mapping_supplied_gradient_bitwise_and_diag_charge():
    p = make_quadratic_l1(40, 4, l1_weight=0.1, seed=6)
    x = np.random.default_rng(2).normal(size=4)
    c = OracleCounters()
    G1, n1 = gradient_mapping(p, x, 0.05, counters=c)
    assert c.diag_sfo == 40 and c.sfo == 0
    G2, n2 = gradient_mapping(p, x, 0.05, grad=p.mean_gradient(x))
    np.testing.assert_array_equal(G1, G2)
    assert n1 == n2


def test_gradient_mapping_streaming():
    p = make_online(make_quadratic_l1(20, 3, seed=1))
    with pytest.raises(UnsupportedOperation):
        gradient_mapping(p, np.zeros(3), 0.1)
    G, _ = gradient_mapping(p, np.zeros(3), 0.1, grad=np.ones(3))
    np.testing.assert_allclose(G, np.ones(3))


def test_ball_value_accepts_own_projection():
    rng = np.random.default_rng(5)
    for _ in range(2000):
        spec = BallIndicator(float(rng.uniform(0.1, 3)))
        x = rng.normal(scale=4, size=int(rng.integers(1, 9)))
        assert spec.value(spec.prox(x, 1.0)) == 0.0
