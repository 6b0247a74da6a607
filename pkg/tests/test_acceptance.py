"""The ten acceptance criteria, each at its stated tolerance and time budget."""

import math
import time

import numpy as np
import pytest

from nnsemi import (
    BasepointUnusable,
    CompositionRule,
    binary_diagonal_rescale,
    bounded_scaling,
    bump,
    generate_closure,
    is_compressed,
    is_indecomposable,
    matrix_like_check,
    mult_walk_supremum,
    potential_from_basepoint,
    scaling_from_basepoint,
    semigroup_scaling,
    sup_function,
    walk_supremum,
)
from nnsemi.counterexample import (
    build_instance,
    closed_norms,
    diagonal_family_F1,
    verify_inner_products,
    verify_norms,
    verify_semigroup,
)
from nnsemi.operators import analyze, check_sqrt_xi_eta, decompose_nonneg_projection
from instances import (
    binary_generators,
    conjugate,
    digraphs_without_positive_cycles,
    hand_built_semigroups,
    random_digraph,
)
from oracles import maxplus_power_max, maxtimes_power_max, reaches_everywhere, triple_excess


@pytest.fixture(scope="module")
def digraphs():
    return digraphs_without_positive_cycles(np.random.default_rng(20240601), 200)


@pytest.fixture(scope="module")
def binary_family():
    """100 ``(B_i, D B_i D^-1)`` generator sets, n in 1..6."""
    rng = np.random.default_rng(77)
    out = []
    for _ in range(100):
        b = binary_generators(rng)
        out.append((b, conjugate(rng, b)[0]))
    return out


@pytest.fixture(scope="module")
def rescaled_family(binary_family):
    return [binary_diagonal_rescale(gens)[1] for _, gens in binary_family]


def test_criterion_1_tropical_oracle(digraphs, record):
    t0 = time.perf_counter()
    closures = [walk_supremum(mu) for mu in digraphs]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    pattern_ok = True
    for mu, w in zip(digraphs, closures):
        ref = maxplus_power_max(mu, mu.shape[0])
        fin = np.isfinite(ref)
        pattern_ok &= not w.divergent and np.array_equal(np.isfinite(w.entries), fin)
        if fin.any():
            worst = max(worst, float(np.abs(w.entries[fin] - ref[fin]).max()))
    ok = pattern_ok and worst <= 1e-12 and elapsed < 5.0
    record(1, ok, f"200 digraphs, max |W - brute| = {worst:.2e}, walk_supremum time {elapsed:.3f}s")
    assert ok


def test_criterion_2_triangle_and_potential(digraphs, record):
    tri, dom, admissible = -math.inf, -math.inf, 0
    for mu in digraphs:
        w = walk_supremum(mu)
        a = w.entries
        with np.errstate(invalid="ignore"):
            through = a[:, :, None] + a[None, :, :]  # (x, y, z): W(x, y) + W(y, z)
            gap = through - a[:, None, :]
        valid = np.isfinite(through)
        if valid.any():
            tri = max(tri, float(gap[valid].max()))
        fin_col = np.isfinite(a).all(axis=0)
        fin_row = np.isfinite(a).all(axis=1)
        try:
            rho = potential_from_basepoint(w)
        except BasepointUnusable:
            assert not (fin_col | fin_row).any()
            continue
        admissible += 1
        dom = max(dom, rho.max_violation(w))
    ok = tri <= 1e-12 and dom <= 1e-12
    record(2, ok, f"triangle slack {tri:.2e}, potential slack {dom:.2e} on {admissible}/200 admissible instances")
    assert ok


def test_criterion_3_bump(record):
    rng = np.random.default_rng(31)
    K = 1.0
    instances = []
    while len(instances) < 100:
        mu = random_digraph(rng, int(rng.integers(1, 6)))
        ref = maxplus_power_max(mu, mu.shape[0])
        if not (np.diag(ref) > 1e-12).any() and ref.max() <= K:
            instances.append(mu)
    t0 = time.perf_counter()
    ok = True
    for mu in instances:
        lam = bump(mu, K).entries
        wm, wl = walk_supremum(mu).entries, walk_supremum(lam).entries
        ok &= bool((mu <= lam).all() and (wm <= wl).all() and (wl <= K + 1e-12).all())
        ok &= bool(((-K <= lam) & (lam <= K)).all())
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 5.0
    record(3, ok, f"100 instances with W <= K=1, bump checks in {elapsed:.3f}s")
    assert ok


def test_criterion_4_multiplicative_scaling(record):
    rng = np.random.default_rng(41)
    mats = []
    while len(mats) < 100:
        n = int(rng.integers(1, 6))
        f = rng.uniform(0.0, 1.5, (n, n))
        f[rng.random((n, n)) < 0.4] = 0.0
        if (np.diag(maxtimes_power_max(f, n)) <= 1.0).all():
            mats.append(f)
    worst, in_range, with_basepoint = 0.0, True, 0
    for f in mats:
        c = mult_walk_supremum(f)
        assert not c.divergent_pairs
        cv = c.values
        worst = max(worst, float((f / np.maximum(cv, 1e-300))[f > 0].max(initial=0.0)) - 1)
        try:
            d = scaling_from_basepoint(c).d
            with_basepoint += 1
            worst = max(worst, float((cv * d[None, :] / d[:, None]).max()) - 1)
        except BasepointUnusable:
            pass
        M = max(1.0, float(cv.max()))
        b = bounded_scaling(f, M).d
        in_range &= bool(((1 / M <= b) & (b <= M)).all())
        worst = max(worst, float((cv * b[None, :] / b[:, None]).max()) - 1)
    ok = worst <= 1e-10 and in_range
    record(
        4,
        ok,
        f"100 matrices, worst relative slack {worst:.2e} "
        f"({with_basepoint} with an unbounded basepoint), bounded d in [1/M, M]: {in_range}",
    )
    assert ok


def test_criterion_5_semigroup_certificate(binary_family, record):
    ok, worst_excess, worst_violation = True, -math.inf, 0.0
    for _, gens in binary_family[:50]:
        assert is_indecomposable(gens) and reaches_everywhere(gens)
        cl = generate_closure(gens)
        ok &= cl.complete
        s = sup_function(cl).s
        ok &= is_compressed(s, tol=1e-9)
        worst_excess = max(worst_excess, triple_excess(s))
        cert = semigroup_scaling(cl)
        worst_violation = max(worst_violation, cert.max_violation)
    ok = ok and worst_violation <= 1 + 1e-9
    record(
        5,
        ok,
        f"50 conjugated semigroups complete, sup compression excess {worst_excess:.2e}, "
        f"max_violation {worst_violation:.12f}",
    )
    assert ok


def _binary_distance(elements) -> float:
    return max(float(np.minimum(np.abs(e), np.abs(e - 1)).max()) for e in elements)


def test_criterion_6_binary_round_trip(binary_family, record):
    t0 = time.perf_counter()
    results = [binary_diagonal_rescale(gens) for _, gens in binary_family]
    elapsed = time.perf_counter() - t0
    worst = max(_binary_distance(cl.elements) for _, cl in results)
    same = 0
    for (b, _), (_, cl) in zip(binary_family, results):
        ref = generate_closure(b)
        same += len(ref) == len(cl)
    ok = worst <= 1e-9 and elapsed < 10.0 and same == len(results)
    record(6, ok, f"100 instances, max distance to {{0,1}} {worst:.2e}, {elapsed:.2f}s, sizes match {same}/100")
    assert ok


def _lemma_instances(rescaled_family):
    valid = []
    for cl in rescaled_family:
        rep = analyze(cl.elements)
        if rep.opset.self_adjoint_closed:
            valid.append(rep)
    for mats in hand_built_semigroups().values():
        valid.append(analyze(mats))
    return valid


@pytest.fixture(scope="module")
def lemma_reports(rescaled_family):
    return _lemma_instances(rescaled_family)


def test_criterion_7_lemma_suite(lemma_reports, record):
    failures = {}
    for rep in lemma_reports:
        for name, passed in rep.lemma_checks(norm_tol=1e-10, sym_tol=1e-8).items():
            if not passed:
                failures[name] = failures.get(name, 0) + 1
    ok = not failures
    record(7, ok, f"{len(lemma_reports)} self-adjoint instances, failing checks: {failures or 'none'}")
    assert ok


def test_criterion_8_entry_law_and_blocks(lemma_reports, record):
    worst_law, worst_rec, n_proj = 0.0, 0.0, 0
    for rep in lemma_reports:
        elements = rep.opset.elements
        for e in elements:
            if (e >= 0).all():
                worst_law = max(worst_law, check_sqrt_xi_eta(e))
        for i in rep.opset.projections:
            p = elements[i]
            dec = decompose_nonneg_projection(p)
            worst_rec = max(worst_rec, float(np.linalg.norm(dec.reconstruct(p.shape[0]) - p)))
            n_proj += 1
    ok = worst_law <= 1e-9 and worst_rec <= 1e-10
    record(8, ok, f"sqrt(xi eta) residual {worst_law:.2e}, {n_proj} projections rebuilt within {worst_rec:.2e}")
    assert ok


def test_criterion_9_counterexample(record):
    t0 = time.perf_counter()
    inst = build_instance(256, 5)
    norms = verify_norms(inst)
    norm_res = max(abs(c.g_norm2 - float(closed_norms(c.m)[0])) for c in norms)
    inner = max(
        d
        for m in inst.ms
        for n in inst.ms
        if m < n
        for d, _ in verify_inner_products(inst, m, n).values()
    )
    qq = max(
        float(np.linalg.norm(inst.Q[m] @ inst.Q[n] - inst.P))
        for m in inst.ms
        for n in inst.ms
        if m < n
    )
    fam = diagonal_family_F1(inst)
    expected = [0.5] + [0.5 * (2.0 ** -(2**m) + 1) for m in inst.ms]
    fam_res = max(abs(a - b) for a, b in zip(fam.values, expected))
    elapsed = time.perf_counter() - t0
    tail = {N: verify_semigroup(build_instance(N, 5)).max_exact_residual for N in (64, 128)}
    ok = (
        norm_res <= 1e-12
        and inner <= 1e-10
        and qq <= 1e-10
        and fam_res <= 1e-12
        and fam.pairwise_distinct
        and elapsed < 2.0
        and tail[64] > tail[128]
    )
    record(
        9,
        ok,
        f"|g|^2 {norm_res:.1e}, inner {inner:.1e}, QmQn-P {qq:.1e}, F1 {fam_res:.1e}, {elapsed:.2f}s; "
        f"exact tail N=64 {tail[64]:.1e} > N=128 {tail[128]:.1e}",
    )
    assert ok


def test_criterion_10_matrix_like(record):
    rng = np.random.default_rng(10)
    passes = 0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        w = rng.uniform(1.0, 3.0, n)
        mats = [rng.uniform(0, 2, (n, n)) * (rng.random((n, n)) < 0.7) for _ in range(4)]
        rule = CompositionRule.atom_weighted(w)
        cl = generate_closure(mats[:2], rule, cap=200)
        passes += matrix_like_check(mats + list(cl.elements[:20]), rule)
    e12 = np.array([[0.0, 1.0], [0.0, 0.0]])
    bad = CompositionRule.atom_weighted([1.0, 0.5], validate=False)
    caught = not matrix_like_check([e12, e12.T], bad)
    ok = passes == 20 and caught
    record(10, ok, f"atom-weighted rule matrix-like for {passes}/20 weight vectors; injected 0.5 detected: {caught}")
    assert ok
