import itertools

import numpy as np
import pytest

from infocorr.common_info import dsbs_decomposition
from infocorr.errors import EnumerationCapExceeded, InconsistentDecomposition
from infocorr.probability import JointPmf, attach_condition, dsbs, mi_xy_u
from infocorr.synthesis import (
    SynthesisExperiment,
    audit_synthesis,
    cond_maxcorr_direct,
    induced_synthesis_joint,
    likelihood_encoder_joint,
    pairs_to_xy,
    sample_codebook,
    sweep,
    target_product,
)

from conftest import random_conditioned

BASE = dsbs_decomposition(0.1, 0.2)


def test_codebook_size_rounding():
    assert SynthesisExperiment(BASE, 3, 1.0).codebook_size == 8
    assert SynthesisExperiment(BASE, 3, 1.0 + 1e-16).codebook_size == 8
    assert SynthesisExperiment(BASE, 2, 0.9).codebook_size == 4     # 2^1.8 = 3.48
    assert SynthesisExperiment(BASE, 1, 1e-9).codebook_size == 2
    with pytest.raises(ValueError):
        SynthesisExperiment(BASE, 0, 1.0)
    with pytest.raises(ValueError):
        SynthesisExperiment(BASE, 2, 0.0)


def test_single_codeword_and_single_slice():
    # one slice equal to the target: every codebook reproduces the i.i.d. law
    p = dsbs(0.2)
    base = attach_condition(np.array([1.0]), [p])
    exp = SynthesisExperiment(base, 3, 0.5)
    report = audit_synthesis(exp, sample_codebook(exp))
    assert report.tv_to_target == pytest.approx(0.0, abs=1e-15)
    assert report.cond_maxcorr == pytest.approx(0.6, abs=1e-12)


def test_codebook_is_deterministic():
    exp = SynthesisExperiment(BASE, 4, 1.0, seed=7)
    a, b = sample_codebook(exp), sample_codebook(exp)
    assert a.shape == (16, 4) and np.array_equal(a, b)
    assert not np.array_equal(a, sample_codebook(SynthesisExperiment(BASE, 4, 1.0, seed=8)))


def test_two_word_table_matches_hand_enumeration():
    exp = SynthesisExperiment(BASE, 2, 0.5)
    assert exp.codebook_size == 2
    book = np.array([[0, 1], [1, 1]])
    joint = induced_synthesis_joint(exp, book)
    slices = [s.probs for s in BASE.slices]
    for m, s in itertools.product(range(2), range(16)):
        (x1, y1), (x2, y2) = divmod(s // 4, 2), divmod(s % 4, 2)
        want = 0.5 * slices[book[m, 0]][x1, y1] * slices[book[m, 1]][x2, y2]
        assert joint[m, s] == pytest.approx(want, abs=1e-15)
    assert joint.sum() == pytest.approx(1.0, abs=1e-12)


def test_pairs_to_xy_layout():
    vec = np.arange(16.0)
    mat = pairs_to_xy(vec, 2, 2, 2)
    # s = ((x1, y1), (x2, y2)) -> row (x1, x2), column (y1, y2)
    assert mat[0b01, 0b10] == vec[(0 * 2 + 1) * 4 + (1 * 2 + 0)]
    assert mat.sum() == vec.sum()


def test_likelihood_encoder_matches_bayes_at_n1():
    exp = SynthesisExperiment(BASE, 1, 1.0)
    book = np.array([[0], [1]])
    res = likelihood_encoder_joint(exp, book)
    p = BASE.xy_marginal().probs.ravel()
    lik = np.stack([BASE.slices[u].probs.ravel() for u in (0, 1)])
    want = p * lik / lik.sum(axis=0)
    assert np.allclose(res.joint, want, atol=1e-15)
    assert res.tv == pytest.approx(0.5 * np.abs(want - lik / 2).sum(), abs=1e-15)


def test_likelihood_encoder_uniform_fallback():
    # a codebook that cannot produce some sequences still yields a valid joint
    base = attach_condition(np.array([0.5, 0.5]), [JointPmf(np.eye(2) / 2), JointPmf(np.fliplr(np.eye(2)) / 2)])
    exp = SynthesisExperiment(base, 1, 0.1)
    res = likelihood_encoder_joint(exp, np.array([[0]]))
    assert res.joint.sum() == pytest.approx(1.0)
    assert np.allclose(res.joint.sum(axis=0), target_product(exp), atol=1e-15)


def test_cap_and_consistency_errors():
    exp = SynthesisExperiment(BASE, 11, 0.5, cap=4**10)
    with pytest.raises(EnumerationCapExceeded):
        sample_codebook(exp)
    with pytest.raises(EnumerationCapExceeded):
        sweep(BASE, [2, 11], [0], rate=0.5, cap=4**10)
    bad = SynthesisExperiment(BASE, 2, 0.5, target=dsbs(0.3))
    with pytest.raises(InconsistentDecomposition):
        target_product(bad)
    ok = SynthesisExperiment(BASE, 2, 0.5, target=dsbs(0.1))
    assert target_product(ok).sum() == pytest.approx(1.0)


def test_shortcut_equals_direct(rng):
    for n in (1, 2, 3):
        for seed in range(3):
            base = random_conditioned(rng, 2, 3, 3, embed=False)
            exp = SynthesisExperiment(base, n, 0.8, seed=seed)
            book = sample_codebook(exp)
            assert abs(audit_synthesis(exp, book).cond_maxcorr - cond_maxcorr_direct(exp, book)) <= 1e-8


def test_encoder_source_marginal(rng):
    base = random_conditioned(rng, 2, 2, 3, embed=False)
    for n in (1, 2, 3, 4):
        exp = SynthesisExperiment(base, n, 0.7, seed=n)
        res = likelihood_encoder_joint(exp, sample_codebook(exp))
        assert np.abs(res.joint.sum(axis=0) - target_product(exp)).max() <= 1e-12
        assert res.ideal.sum() == pytest.approx(1.0, abs=1e-12)


def test_audit_respects_the_slice_constraint():
    result = sweep(BASE, [1, 2, 3], range(5), rate_excess=0.3, beta_target=0.2)
    assert all(r.report.cond_maxcorr <= 0.2 + 1e-9 for r in result.records)
    assert all(0.0 <= r.report.tv_to_target <= 1.0 for r in result.records)


def test_tv_trend_at_generous_rate():
    # a rate well above I(XY;U) makes soft covering visible at small n
    ns = [2, 3, 4, 5, 6]
    result = sweep(BASE, ns, range(20), rate_excess=1.0)
    med = [result.median_tv[n] for n in ns]
    assert all(b < a for a, b in zip(med, med[1:]))
    assert mi_xy_u(BASE) == pytest.approx(0.7784, abs=1e-4)
