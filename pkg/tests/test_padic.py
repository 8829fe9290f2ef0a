"""Scalar precision semantics, symplectic matrix layer, K membership and
reduction, the identity suite, and the subgroup extraction machinery."""

import numpy as np
import pytest

from siegelvec.finitegrp import (
    GL2Elem,
    GL22Elem,
    conjugate_subgroups,
    gl22_identity,
    subgroup_R,
)
from siegelvec.padic import (
    IDENTITY_TAGS,
    GSp4Elem,
    NotInK,
    NotSymplectic,
    PadicCtx,
    PrecisionExhausted,
    StabilizationFailure,
    compute_Rg,
    coset_rep,
    in_K,
    in_K_plus,
    in_Si,
    levi,
    mat_close,
    mat_identity,
    mat_mul,
    radical_obstruction,
    rand_K,
    reduce_K,
    run_identity,
    s1_elem,
    s2_elem,
    s_lower,
    s_upper,
    scalars_close,
    similitude_of,
    t_elem,
    u_elem,
    witness_Rg,
)


# -- scalars -----------------------------------------------------------------


def test_int_normalization_extracts_valuation():
    ctx = PadicCtx(2, 1)
    s = ctx.from_int(12)
    assert s.val_exact() == 2 and s.coeffs[0] % 2 == 1
    assert ctx.from_int(-8).val_exact() == 3
    assert ctx.from_int(0).kind == "zero"


def test_addition_cancellation_degrades_to_bound():
    ctx = PadicCtx(3, 1, prec=6)
    a = ctx.from_int(5)
    d = a - a
    assert d.kind == "eps" and d.aprec == 6
    assert d.val_ge(6)
    with pytest.raises(PrecisionExhausted):
        d.val_ge(7)
    assert not d.val_le(5)
    with pytest.raises(PrecisionExhausted):
        d.val_le(6)


def test_multiplication_and_inverse_are_lossless():
    ctx = PadicCtx(3, 1, prec=10)
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 3 ** 8))
        s = ctx.from_int(n)
        if s.kind != "unit" or s.val != 0:
            continue
        prod = s * s.inv()
        assert scalars_close(prod, ctx.one_s)
        assert prod.rel == 10


def test_valuation_arithmetic_under_products():
    ctx = PadicCtx(2, 1)
    a = ctx.pi(3) * ctx.from_int(5)
    b = ctx.pi(-2) * ctx.from_int(7)
    assert (a * b).val_exact() == 1
    assert (a + b).val_exact() == -2
    assert (-a).val_exact() == 3


def test_quadratic_extension_residues_are_multiplicative():
    ctx = PadicCtx(2, 2)
    fq = ctx.fq
    rng = np.random.default_rng(1)
    for _ in range(25):
        ca = fq.fq_elements[rng.integers(0, ctx.q)]
        cb = fq.fq_elements[rng.integers(0, ctx.q)]
        a, b = ctx.lift(ca), ctx.lift(cb)
        assert (a * b).residue() == fq.mul(ca, cb)
        assert (a + b).residue() == fq.add(ca, cb)


def test_lift_residue_roundtrip():
    ctx = PadicCtx(2, 2)
    for code in ctx.fq.fq_elements:
        s = ctx.lift(code)
        assert s.residue() == code
        if code:
            assert scalars_close(s * s.inv(), ctx.one_s)


def test_unresolved_elements_refuse_inversion():
    ctx = PadicCtx(2, 1)
    with pytest.raises(ZeroDivisionError):
        ctx.zero_s.inv()
    with pytest.raises(PrecisionExhausted):
        ctx.eps(3).inv()


# -- matrices ----------------------------------------------------------------


def test_builders_pass_independent_similitude_check():
    for p, f in ((2, 1), (3, 1), (2, 2)):
        ctx = PadicCtx(p, f)
        for g in (t_elem(ctx, 1, 2), s_lower(ctx, 3, 5, 7), s_upper(ctx, 2, 3, 1),
                  levi(ctx, 1, 2, 3, 7, 5), u_elem(ctx, 4), s1_elem(ctx), s2_elem(ctx)):
            mu = similitude_of(ctx, g.m)
            assert scalars_close(mu, g.mu)


def test_non_symplectic_matrix_is_rejected():
    ctx = PadicCtx(2, 1)
    with pytest.raises(NotSymplectic):
        GSp4Elem.make(ctx, [[1, 0, 0, 0], [0, 1, 0, 0],
                            [0, 0, 1, 0], [0, 1, 0, 1]])


def test_group_inverse_matches_identity():
    ctx = PadicCtx(3, 1)
    rng = np.random.default_rng(2)
    for _ in range(10):
        g = rand_K(ctx, rng)
        assert mat_close(mat_mul(ctx, g.m, g.inv().m), mat_identity(ctx))
        assert scalars_close(g.mu * g.inv().mu, ctx.one_s)


# -- membership and reduction --------------------------------------------------


def test_pattern_examples_in_and_out():
    ctx = PadicCtx(2, 1)
    assert not in_K(t_elem(ctx, 0, 1))
    assert not in_K(u_elem(ctx, 1))
    assert in_K(s2_elem(ctx))
    assert in_Si(s1_elem(ctx), 3)
    assert not in_K(s1_elem(ctx))
    assert in_K(s_upper(ctx, 1, ctx.pi(-1), 1))
    assert not in_Si(s_upper(ctx, 1, ctx.pi(-1), 1), 1)


def test_reduction_of_known_elements():
    ctx = PadicCtx(2, 2)
    fq = ctx.fq
    r = reduce_K(s2_elem(ctx))
    w = GL2Elem(0, fq.one, fq.neg(fq.one), 0)
    assert r == GL22Elem(gl22_identity(fq).first, w)
    a1, a4, lam = fq.fq_units[0], fq.fq_units[1], fq.fq_units[2]
    g = levi(ctx, ctx.lift(a1), 0, ctx.pi(1), ctx.lift(a4), ctx.lift(lam))
    r = reduce_K(g)
    assert r.first == GL2Elem(a1, 0, 0, fq.mul(lam, a4))
    assert r.second == GL2Elem(a4, 0, 0, fq.mul(lam, a1))


def test_depth_kernel_detection():
    ctx = PadicCtx(2, 1)
    assert in_K_plus(s_lower(ctx, ctx.pi(1), ctx.pi(1), ctx.pi(2)))
    assert not in_K_plus(s_lower(ctx, ctx.pi(1), 1, ctx.pi(2)))
    assert not in_K_plus(s_lower(ctx, ctx.pi(1), ctx.pi(1), ctx.pi(1)))


def test_reduction_determinants_must_match():
    ctx = PadicCtx(2, 1)
    # valid pattern but the two residue factors get different determinants
    g = GSp4Elem.make(ctx, [[1, 0, 0, 0], [0, 1, 0, 0],
                            [ctx.pi(1), 0, 1, 0], [0, ctx.pi(1), 0, 1]], mu=1)
    reduce_K(g)  # fine: both factors reduce to the identity
    bad = s1_elem(ctx)
    with pytest.raises(NotInK):
        reduce_K(bad)


# -- identity suite -------------------------------------------------------------


@pytest.mark.parametrize("p,f", [(2, 1), (3, 1), (2, 2)])
def test_identity_suite_small_draws(p, f):
    ctx = PadicCtx(p, f)
    for tag in IDENTITY_TAGS:
        assert run_identity(ctx, tag, draws=6, seed=11) == 6


def test_identity_rejects_unknown_tag():
    ctx = PadicCtx(2, 1)
    with pytest.raises(ValueError):
        run_identity(ctx, "no-such-tag", draws=1)


# -- subgroup extraction ---------------------------------------------------------


WITNESS_CASES = [
    ("I", 0, 1, 3, "Torus"),
    ("I", 1, 1, 5, "Torus"),
    ("II", 0, 2, 4, "Torus"),
    ("IIIa", 0, 3, 5, "Unip"),
    ("IIIb", 0, 5, 7, "ArtinUnip"),
    ("IV", 0, 4, 6, "ArtinUnip"),
]


@pytest.mark.parametrize("tag,i,j,n,kind", WITNESS_CASES)
def test_witness_families_land_on_table_subgroups(tag, i, j, n, kind):
    ctx = PadicCtx(2, 1)
    res = witness_Rg(ctx, tag, i, j, n)
    table = subgroup_R(kind, ctx.fq)
    assert conjugate_subgroups(res.group, table, ctx.fq) is not None


@pytest.mark.parametrize("tag,i,j,n,kind", WITNESS_CASES[:4])
def test_sampled_subgroups_match_witnesses(tag, i, j, n, kind):
    ctx = PadicCtx(2, 1)
    g = coset_rep(ctx, tag, i, j)
    res = compute_Rg(g, n, seed=5)
    table = subgroup_R(kind, ctx.fq)
    assert conjugate_subgroups(res.group, table, ctx.fq) is not None
    assert res.accepted >= 200


def test_deeper_strata_sampled_against_witnesses():
    ctx = PadicCtx(2, 1)
    for tag, i, j, n, kind in WITNESS_CASES[4:]:
        samp = compute_Rg(coset_rep(ctx, tag, i, j), n, seed=5)
        wit = witness_Rg(ctx, tag, i, j, n)
        assert set(samp.group.elements) == set(wit.group.elements)


def test_depth_one_refinement_classes_share_a_subgroup():
    # the depth-refined unit classes of the second elliptic stratum all
    # produce the same subgroup as the base class
    ctx = PadicCtx(2, 1)
    base = witness_Rg(ctx, "IIIb", 0, 5, 7, c_code=0)
    refined = witness_Rg(ctx, "IIIb", 0, 5, 7, c_code=ctx.fq.one)
    assert set(base.group.elements) == set(refined.group.elements)


def test_swap_torus_image_of_corner_stratum_when_q_is_four():
    # at q=4 the second stratum reduces onto the det-matched swap torus
    # {(diag(a,d), diag(d,a))} of order (q-1)^2, a proper subgroup of the
    # full torus; the two coincide only at q=2
    ctx = PadicCtx(2, 2)
    fq = ctx.fq
    wit = witness_Rg(ctx, "II", 0, 2, 4)
    samp = compute_Rg(coset_rep(ctx, "II", 0, 2), 4, seed=7)
    swap = {GL22Elem(GL2Elem(a, 0, 0, d), GL2Elem(d, 0, 0, a))
            for a in fq.fq_units for d in fq.fq_units}
    assert set(wit.group.elements) == swap
    assert set(samp.group.elements) == swap


def test_unipotent_stratum_at_q_four():
    ctx = PadicCtx(2, 2)
    wit = witness_Rg(ctx, "IIIa", 0, 3, 5)
    assert set(wit.group.elements) == set(subgroup_R("Unip", ctx.fq).elements)


def test_out_of_range_parameters_trigger_radical_obstruction():
    ctx = PadicCtx(2, 1)
    fq = ctx.fq
    for (i, j, n) in [(0, 2, 3), (0, 3, 3), (1, 1, 4), (0, 4, 4)]:
        grp = compute_Rg(coset_rep(ctx, "I", i, j), n, seed=3).group
        assert radical_obstruction(fq, grp)
    # in-range groups carry no obstruction
    assert not radical_obstruction(fq, subgroup_R("Torus", fq))
    assert not radical_obstruction(fq, subgroup_R("Unip", fq))
    assert not radical_obstruction(fq, subgroup_R("ArtinUnip", fq))


def test_sampler_budget_failure_is_reported():
    ctx = PadicCtx(2, 1)
    g = coset_rep(ctx, "I", 0, 1)
    with pytest.raises(StabilizationFailure):
        compute_Rg(g, 3, seed=0, stable_window=10, max_draws=5)
