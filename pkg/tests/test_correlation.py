import numpy as np
import pytest

from infocorr.correlation import (
    SmoothQuery,
    cond_max_correlation,
    correlation_ratio,
    correlation_ratio_given,
    correlation_report,
    max_correlation,
    max_correlation_ace,
    pearson,
    pearson_given,
    singular_values,
    smooth_max_correlation,
    tv_perturbation_bound,
)
from infocorr.errors import ShapeMismatch, UnsupportedSupport
from infocorr.probability import JointPmf, attach_condition, dsbs, product_pmf, tv_distance

import properties
from conftest import random_pmf

SIGNS = np.array([-1.0, 1.0])


def test_pearson_examples():
    assert pearson(JointPmf(np.eye(2) / 2, SIGNS, SIGNS)) == pytest.approx(1.0)
    assert pearson(product_pmf([0.3, 0.7], [0.4, 0.6])) == pytest.approx(0.0, abs=1e-15)
    assert pearson(dsbs(0.1)) == pytest.approx(0.8, abs=1e-12)


def test_pearson_given_is_pooled_not_max():
    # slices with correlations +1 and -1 cancel in the pooled covariance
    pos = JointPmf(np.eye(2) / 2, SIGNS, SIGNS)
    neg = JointPmf(np.fliplr(np.eye(2)) / 2, SIGNS, SIGNS)
    assert pearson_given(attach_condition([0.5, 0.5], [pos, neg])) == pytest.approx(0.0, abs=1e-15)
    point = JointPmf([[1.0, 0.0], [0.0, 0.0]])
    assert pearson_given(attach_condition([1.0], [point])) == 0.0


def test_correlation_ratio_examples():
    assert correlation_ratio(JointPmf(np.eye(3) / 3)) == pytest.approx(1.0)
    assert correlation_ratio(product_pmf([0.2, 0.8], [0.5, 0.5])) == pytest.approx(0.0, abs=1e-12)
    assert correlation_ratio(dsbs(0.1)) == pytest.approx(0.8, abs=1e-12)
    assert correlation_ratio(dsbs(0.1), "y_on_x") == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(ValueError):
        correlation_ratio(dsbs(0.1), "sideways")


def test_correlation_ratio_is_asymmetric():
    # Y determines X but not vice versa
    p = JointPmf([[0.25, 0.25, 0.0], [0.0, 0.0, 0.5]], y_values=[0.0, 1.0, 2.0])
    assert correlation_ratio(p, "x_on_y") == pytest.approx(1.0)
    assert correlation_ratio(p, "y_on_x") < 1.0


def test_max_correlation_examples():
    assert max_correlation(dsbs(0.1)) == pytest.approx(0.8, abs=1e-12)
    assert max_correlation(product_pmf([0.3, 0.7], [0.1, 0.2, 0.7])) == pytest.approx(0.0, abs=1e-8)
    assert max_correlation(JointPmf([[0.5, 0.5]])) == 0.0


def test_max_correlation_drops_empty_symbols():
    p = JointPmf([[0.45, 0.0, 0.05], [0.0, 0.0, 0.0], [0.05, 0.0, 0.45]])
    assert max_correlation(p) == pytest.approx(0.8, abs=1e-12)
    s = singular_values(p.probs)
    assert s[0] == pytest.approx(1.0) and np.all(np.diff(s) <= 0)


def test_svd_matches_ace_oracle_on_3x3(rng):
    for k in range(20):
        p = random_pmf(rng, 3, 3)
        assert abs(max_correlation(p) - max_correlation_ace(p, seed=k)) <= 1e-6


def test_embedding_invariance(rng):
    for _ in range(100):
        p = random_pmf(rng, 3, 4, sparsity=0.2)
        perm_x, perm_y = rng.permutation(3), rng.permutation(4)
        q = JointPmf(p.probs[perm_x][:, perm_y], rng.normal(size=3), rng.normal(size=4))
        assert abs(max_correlation(p) - max_correlation(q)) <= 1e-12


def test_cond_max_correlation_examples(rng):
    p = random_pmf(rng, 3, 3)
    value, u = cond_max_correlation(attach_condition([0.3, 0.7], [p, p]))
    assert value == pytest.approx(max_correlation(p), abs=1e-15)
    prod = [product_pmf(rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))) for _ in range(3)]
    assert cond_max_correlation(attach_condition([0.2, 0.3, 0.5], prod))[0] == pytest.approx(0.0, abs=1e-8)
    value, u = cond_max_correlation(attach_condition([0.5, 0.5], [product_pmf([.5, .5], [.5, .5]),
                                                                  JointPmf(np.eye(2) / 2)]))
    assert value == pytest.approx(1.0) and u == 1


def test_report_flags_degenerate_input():
    r = correlation_report(JointPmf([[0.3, 0.7]]))
    assert r.degenerate and r.max_corr == 0.0


def test_tv_bound_examples(rng):
    base = attach_condition([0.5, 0.5], [dsbs(0.1), dsbs(0.3)])
    lhs, rhs = tv_perturbation_bound(base, base)
    assert lhs == pytest.approx(0.8) and rhs == pytest.approx(0.8)
    # move 0.01 of mass in each slice
    shift = np.array([[-0.01, 0.01], [0.0, 0.0]])
    q = attach_condition([0.5, 0.5], [JointPmf(dsbs(0.1).probs + shift), JointPmf(dsbs(0.3).probs + shift)])
    lhs, rhs = tv_perturbation_bound(base, q)
    assert lhs <= rhs + 1e-9
    far = attach_condition([0.5, 0.5], [product_pmf([.5, .5], [.5, .5])] * 2)
    lhs, rhs = tv_perturbation_bound(base, far)
    assert lhs < 0 <= rhs


def test_tv_bound_errors():
    with pytest.raises(ShapeMismatch):
        tv_perturbation_bound(np.ones((2, 2, 1)) / 4, np.ones((2, 2, 2)) / 8)
    with pytest.raises(UnsupportedSupport):
        tv_perturbation_bound(np.zeros((2, 2, 1)), np.ones((2, 2, 1)) / 4)
    with pytest.raises(UnsupportedSupport):
        tv_perturbation_bound(np.eye(2)[:, :, None] / 2, np.ones((2, 2, 1)) / 4)


def test_smooth_identity_coupling_reaches_zero():
    ident = attach_condition([1.0], [JointPmf(np.eye(2) / 2)])
    res = smooth_max_correlation(ident, SmoothQuery(0.5))
    assert res.value == pytest.approx(0.0, abs=1e-9)
    assert res.tv <= 0.5 + 1e-12


def test_smooth_product_stays_zero():
    prod = attach_condition([1.0], [product_pmf([0.3, 0.7], [0.6, 0.4])])
    assert smooth_max_correlation(prod, SmoothQuery(0.2)).value == pytest.approx(0.0, abs=1e-8)


def test_smooth_never_exceeds_unsmoothed(rng):
    for k in range(5):
        cj = attach_condition([0.4, 0.6], [random_pmf(rng, 2, 3), random_pmf(rng, 2, 3)])
        res = smooth_max_correlation(cj, SmoothQuery(0.05, restarts=2, max_iter=50, seed=k))
        assert res.value <= cond_max_correlation(cj)[0] + 1e-9
        assert tv_distance(res.q_joint, cj.joint()) <= 0.05 + 1e-9


def _grid_smooth_oracle(pj, eps, steps=8):
    """Coarse search: move eps of mass between any two cells of a 2x2x2 joint, scaled on a grid."""
    best = max(max_correlation(pj[:, :, u] / pj[:, :, u].sum()) for u in range(2))
    cells = [np.unravel_index(i, pj.shape) for i in range(pj.size)]
    for src in cells:
        for dst in cells:
            if src == dst:
                continue
            for t in np.linspace(0, 1, steps + 1)[1:]:
                q = pj.copy()
                amount = min(t * eps, q[src])
                q[src] -= amount
                q[dst] += amount
                w = q.sum(axis=(0, 1))
                val = max(max_correlation(q[:, :, u] / w[u]) for u in range(2) if w[u] > 0)
                best = min(best, val)
    return best


def test_smooth_small_epsilon_close_to_unsmoothed_and_grid():
    cj = attach_condition([0.5, 0.5], [dsbs(0.1), dsbs(0.25)])
    pj = cj.joint()
    res = smooth_max_correlation(cj, SmoothQuery(1e-4))
    assert abs(res.value - cond_max_correlation(cj)[0]) <= 0.05
    res = smooth_max_correlation(cj, SmoothQuery(0.05))
    assert res.value <= _grid_smooth_oracle(pj, 0.05) + 1e-9


def test_smooth_query_validation():
    with pytest.raises(ValueError):
        SmoothQuery(0.0)
    with pytest.raises(ValueError):
        SmoothQuery(1.0)


# -- property suites (reduced trial counts; the acceptance suite runs 1000) --


def test_ordering_chain(rng):
    assert properties.ordering_chain(rng, 200) <= 1e-9


def test_tensorization(rng):
    assert properties.tensorization(rng, 200) <= 1e-8


def test_data_processing(rng):
    ineq, eq = properties.data_processing(rng, 200)
    assert ineq <= 1e-9 and eq <= 1e-6


def test_ratio_equality(rng):
    assert properties.ratio_equality(rng, 200) <= 1e-8


def test_covariance_gap(rng):
    assert properties.covariance_gap(rng, 200) <= 1e-9


def test_markov_pair_equality(rng):
    assert properties.markov_pair_equality(rng, 200) <= 1e-6


def test_tv_bound_property(rng):
    assert properties.tv_bound(rng, 200) <= 1e-9
