import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnsemi import (
    BasepointUnusable,
    Divergent,
    PreconditionViolated,
    bounded_potential,
    bounded_scaling,
    bump,
    is_compressed,
    mult_walk_supremum,
    potential_from_basepoint,
    scaling_from_basepoint,
    walk_supremum,
)
from oracles import maxplus_power_max, maxtimes_power_max, triple_excess

NEG = -math.inf


def test_potential_two_cycle():
    w = walk_supremum([[NEG, 1.0], [-1.0, NEG]])
    rho = potential_from_basepoint(w, 0)
    np.testing.assert_array_equal(rho.rho, [0.0, -1.0])
    assert rho.orientation == "into"
    assert rho.max_violation(w) <= 0.0


def test_potential_single_loop():
    w = walk_supremum([[-2.0]])
    assert w.entries[0, 0] == -2.0
    rho = potential_from_basepoint(w, 0)
    np.testing.assert_array_equal(rho.rho, [-2.0])


def test_potential_needs_a_finite_row_or_column():
    w = walk_supremum(np.full((2, 2), NEG))
    with pytest.raises(BasepointUnusable):
        potential_from_basepoint(w)


def test_potential_out_orientation():
    # vertex 1 reaches everything (itself via a loop) but nothing reaches every vertex
    mu = np.full((3, 3), NEG)
    mu[0, 0], mu[0, 1], mu[0, 2] = -1.0, 1.0, 2.0
    w = walk_supremum(mu)
    rho = potential_from_basepoint(w)
    assert rho.orientation == "out" and rho.basepoint == 0
    np.testing.assert_array_equal(rho.rho, [1.0, -1.0, -2.0])
    assert rho.max_violation(w) <= 1e-12
    with pytest.raises(BasepointUnusable):
        potential_from_basepoint(w, 1)


def test_potential_rejects_divergence():
    with pytest.raises(Divergent):
        potential_from_basepoint(walk_supremum([[1.0]]))


def test_bump_example():
    lam = bump([[NEG, -5.0], [0.5, NEG]], 1.0)
    np.testing.assert_array_equal(lam.entries, [[-1.0, -1.0], [0.5, -1.0]])
    w = walk_supremum(lam)
    np.testing.assert_allclose(w.entries, [[-0.5, -1.0], [0.5, -0.5]], atol=1e-15)


def test_bump_leaves_in_range_weights_alone():
    mu = np.array([[-1.0, 0.5], [-1.0, 0.0]])
    np.testing.assert_array_equal(bump(mu, 1.0).entries, mu)


@pytest.mark.parametrize("mu", [[[1.0, NEG], [NEG, NEG]], [[NEG, 2.0], [NEG, NEG]]])
def test_bump_preconditions(mu):
    with pytest.raises(PreconditionViolated):
        bump(mu, 1.0)


def test_bounded_potential_range():
    rho = bounded_potential([[NEG, -5.0], [0.5, NEG]], 1.0)
    assert (np.abs(rho.rho) <= 1.0 + 1e-12).all()


def test_mult_closure_example():
    c = mult_walk_supremum([[0.0, 2.0], [0.25, 0.0]])
    assert not c.divergent_pairs
    np.testing.assert_allclose(c.values, [[0.5, 2.0], [0.25, 0.5]], rtol=1e-12)
    d = scaling_from_basepoint(c, 0)
    np.testing.assert_allclose(d.d, [0.5, 0.25], rtol=1e-12)


def test_mult_closure_divergent_loop():
    c = mult_walk_supremum([[2.0, 0.0], [0.0, 0.0]])
    assert (0, 0) in c.divergent_pairs
    with pytest.raises(Divergent):
        scaling_from_basepoint(c)


def test_mult_closure_of_compressed_is_itself():
    f = np.array([[1.0, 2.0], [0.0, 1.0]])
    np.testing.assert_allclose(mult_walk_supremum(f).values, f, rtol=1e-12)


def test_scaling_basepoint_unusable_for_identity():
    with pytest.raises(BasepointUnusable):
        scaling_from_basepoint(np.eye(3))
    np.testing.assert_allclose(scaling_from_basepoint([[0.5]]).d, [0.5])


def test_bounded_scaling_examples():
    d = bounded_scaling([[1.0, 2.0], [0.0, 1.0]], 2.0)
    np.testing.assert_allclose(d.d, [1.0, 0.5], rtol=1e-12)
    np.testing.assert_allclose(bounded_scaling(np.zeros((3, 3)), 1.0).d, np.ones(3))
    f = np.array([[0.0, 2.0], [0.25, 0.0]])
    d = bounded_scaling(f, 2.0)
    assert ((0.5 - 1e-12 <= d.d) & (d.d <= 2 + 1e-12)).all()
    assert d.domination_ratio(f) <= 1 + 1e-10


def test_bounded_scaling_rejects_small_M():
    with pytest.raises(PreconditionViolated):
        bounded_scaling([[1.0, 3.0], [0.0, 1.0]], 2.0)
    with pytest.raises(ValueError):
        bounded_scaling([[1.0]], 0.5)


@pytest.mark.parametrize(
    "f, expected",
    [
        ([[1.0, 2.0], [0.0, 1.0]], True),
        ([[0.0, 2.0], [0.25, 0.0]], False),
        (np.zeros((3, 3)), True),
    ],
)
def test_is_compressed_examples(f, expected):
    assert is_compressed(f) is expected
    assert bool(triple_excess(f) <= 0) is expected


def test_negative_entries_rejected():
    with pytest.raises(ValueError):
        mult_walk_supremum([[0.0, -1.0], [0.0, 0.0]])


@st.composite
def nonneg_matrices(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    entry = st.one_of(st.just(0.0), st.floats(0.01, 1.5))
    rows = draw(st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n))
    return np.array(rows)


@settings(max_examples=150, deadline=None)
@given(nonneg_matrices())
def test_mult_closure_matches_log_domain_and_oracle(f):
    c = mult_walk_supremum(f)
    with np.errstate(divide="ignore"):
        w = walk_supremum(np.log(f))
    assert set(c.divergent_pairs) == set(w.divergent_pairs)
    if c.divergent_pairs:
        return
    np.testing.assert_allclose(c.values, np.exp(w.entries), rtol=1e-10, atol=0)
    ref = maxtimes_power_max(f, f.shape[0])
    np.testing.assert_allclose(c.values, ref, rtol=1e-10, atol=0)
    assert is_compressed(c.values)
    assert (f <= c.values * (1 + 1e-10)).all()


@settings(max_examples=150, deadline=None)
@given(nonneg_matrices())
def test_scaling_dominates(f):
    c = mult_walk_supremum(f)
    if c.divergent_pairs:
        return
    try:
        d = scaling_from_basepoint(c)
    except BasepointUnusable:
        assert not ((c.values > 0).all(axis=0) | (c.values > 0).all(axis=1)).any()
        return
    ratio = d.d[:, None] / d.d[None, :]
    assert (c.values <= ratio * (1 + 1e-10)).all()
    M = max(1.0, float(c.values.max()))
    b = bounded_scaling(f, M)
    assert ((1 / M - 1e-12 <= b.d) & (b.d <= M + 1e-12)).all()
    assert (f <= b.d[:, None] / b.d[None, :] * (1 + 1e-10)).all()


@st.composite
def bump_instances(draw):
    n = draw(st.integers(1, 4))
    entry = st.one_of(st.just(NEG), st.floats(-6, 1))
    rows = draw(st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n))
    return np.array(rows)


@settings(max_examples=150, deadline=None)
@given(bump_instances())
def test_bump_soundness(mu):
    K = 1.0
    ref = maxplus_power_max(mu, mu.shape[0])
    if (np.diag(ref) > 1e-12).any() or ref.max() > K:
        return
    lam = bump(mu, K).entries
    assert (mu <= lam).all()
    assert ((-K <= lam) & (lam <= K)).all()
    wm, wl = walk_supremum(mu).entries, walk_supremum(lam).entries
    assert (wm <= wl + 1e-12).all()
    assert (wl <= K + 1e-12).all()
