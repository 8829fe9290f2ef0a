"""Matrix-model oracle: induced model, projectors, tensors, intertwiners."""

import numpy as np
import pytest

from siegelvec.finitegrp import (
    GL2Elem, GL22Elem, build_field, enumerate_gl2, enumerate_gl22, gl2_mul,
    gl22_mul, subgroup_R, u_action,
)
from siegelvec.chars import (
    SigmaLabel, cuspidal_char_fast, cuspidal_classes, fixed_dim,
    twisted_trace_closed,
)
from siegelvec.models import (
    ConstituentModel, NoIntertwiner, NotNormalizing,
    TensorModel, WhittakerSpace, commutant_dim, cuspidal_model, decompose,
    model_for_sigma, swap_operator, twisted_trace, u_intertwiner, ww_operator,
)


def _dense(space, g):
    perm, phase = space.action(g)
    M = np.zeros((space.dim, space.dim), dtype=np.complex128)
    M[np.arange(space.dim), perm] = phase
    return M


@pytest.mark.parametrize("p,f,dim", [(2, 1, 3), (3, 1, 16), (2, 2, 45), (5, 1, 96)])
def test_whittaker_dim(p, f, dim):
    ctx = build_field(p, f)
    assert WhittakerSpace(ctx).dim == dim == (ctx.q ** 2 - 1) * (ctx.q - 1)


def test_whittaker_action_is_homomorphism():
    ctx = build_field(3, 1)
    space = WhittakerSpace(ctx)
    elems = enumerate_gl2(ctx)
    for g in elems[5::17]:
        for h in elems[3::13]:
            gh = gl2_mul(ctx, g, h)
            assert np.allclose(_dense(space, g) @ _dense(space, h),
                               _dense(space, gh), atol=1e-10)


@pytest.mark.parametrize("p,f", [(2, 1), (3, 1), (2, 2)])
def test_cuspidal_model_characters(p, f):
    ctx = build_field(p, f)
    for k in cuspidal_classes(ctx):
        m = cuspidal_model(ctx, k)
        assert m.basis.shape[1] == ctx.q - 1
        m.verify_character()


def test_cuspidal_model_q5_single_class():
    ctx = build_field(5, 1)
    m = cuspidal_model(ctx, 2)
    m.verify_character(sample=enumerate_gl2(ctx)[::5])


def test_model_homomorphism_and_unitarity():
    ctx = build_field(3, 1)
    m = cuspidal_model(ctx, 1)
    elems = enumerate_gl2(ctx)
    for g in elems[::9]:
        Mg = m.mat(g)
        assert np.allclose(Mg.conj().T @ Mg, np.eye(2), atol=1e-9)
        for h in elems[::15]:
            assert np.allclose(Mg @ m.mat(h), m.mat(gl2_mul(ctx, g, h)),
                               atol=1e-9)


# -- tensor models ------------------------------------------------------------

def test_tensor_char_multiplicativity():
    ctx = build_field(3, 1)
    tm = TensorModel(ctx, 1, 2)
    for x in enumerate_gl22(ctx)[::41]:
        want = cuspidal_char_fast(ctx, 1, x.first) * \
            cuspidal_char_fast(ctx, 2, x.second)
        assert abs(tm.char(x) - want) < 1e-8


def test_det_twist_matches_exponent_shift():
    # det^2-twisted doubled model has the character of the shifted label
    ctx = build_field(2, 2)
    tm = TensorModel(ctx, 1, 1, lam_exp=2)
    for x in enumerate_gl22(ctx)[::67]:
        want = cuspidal_char_fast(ctx, 11, x.first) * \
            cuspidal_char_fast(ctx, 1, x.second)
        assert abs(tm.char(x) - want) < 1e-8


@pytest.mark.parametrize("p,f", [(2, 1), (3, 1), (2, 2)])
def test_fixed_rank_matches_character_average(p, f):
    ctx = build_field(p, f)
    subs = [subgroup_R("Torus", ctx), subgroup_R("Unip", ctx),
            subgroup_R("U1", ctx), subgroup_R("U2", ctx)]
    if ctx.q % 2 == 0:
        subs.append(subgroup_R("ArtinUnip", ctx))
    ks = cuspidal_classes(ctx)
    for k1 in ks:
        for k2 in ks[:2]:
            s = SigmaLabel(k1, k2, "Full")
            tm = TensorModel(ctx, k1, k2)
            for R in subs:
                assert tm.fixed_rank(R) == fixed_dim(ctx, s, R)
                assert tm.fixed_rank_twisted(R) >= 0


def test_commutant_dimensions():
    ctx = build_field(3, 1)
    assert commutant_dim(TensorModel(ctx, 1, 2))[0] == 1
    assert commutant_dim(TensorModel(ctx, 2, 6))[0] == 2


def test_decompose_split_pair():
    ctx = build_field(3, 1)
    tm = TensorModel(ctx, 2, 6)
    plus, minus = decompose(tm)
    assert plus.tag == "Plus" and minus.tag == "Minus"
    assert plus.dim == minus.dim == 2
    for x in enumerate_gl22(ctx)[::31]:
        assert abs(plus.char(x) + minus.char(x) - tm.char(x)) < 1e-8
    T = subgroup_R("Torus", ctx)
    U = subgroup_R("Unip", ctx)
    for c in (plus, minus):
        assert c.fixed_rank(T) == 1
        assert c.fixed_rank(subgroup_R("U1", ctx)) == 0
    # the unipotent fixed space lands entirely in one constituent
    assert sorted(c.fixed_rank(U) for c in (plus, minus)) == [0, 2]


def test_decompose_constituents_are_subreps():
    ctx = build_field(3, 1)
    tm = TensorModel(ctx, 2, 2)
    plus, minus = decompose(tm)
    for c in (plus, minus):
        for x in enumerate_gl22(ctx)[::53]:
            for y in enumerate_gl22(ctx)[::71]:
                xy = gl22_mul(ctx, x, y)
                assert np.allclose(c.mat(x) @ c.mat(y), c.mat(xy), atol=1e-8)


def test_decompose_irreducible_raises():
    ctx = build_field(3, 1)
    with pytest.raises(ValueError):
        decompose(TensorModel(ctx, 1, 2))


def test_model_for_sigma_dispatch():
    ctx = build_field(3, 1)
    assert isinstance(model_for_sigma(ctx, SigmaLabel(1, 2, "Full")), TensorModel)
    c = model_for_sigma(ctx, SigmaLabel(2, 6, "Minus"))
    assert isinstance(c, ConstituentModel) and c.tag == "Minus"
    with pytest.raises(ValueError):
        model_for_sigma(ctx, SigmaLabel(1, 2, "Plus"))


def test_constituent_oracle_feeds_fixed_dim():
    ctx = build_field(5, 1)
    # subgroup not stable under the nonsquare diagonal conjugation
    from siegelvec.finitegrp import subgroup_closure
    w = GL2Elem(0, ctx.one, ctx.neg(ctx.one), 0)
    R = subgroup_closure(ctx, [GL22Elem(w, w)])
    plus = SigmaLabel(3, 3, "Plus")
    oracle = model_for_sigma(ctx, plus)
    d = fixed_dim(ctx, plus, R, oracle=oracle)
    assert d == oracle.fixed_rank(R) >= 0


# -- intertwiners and twisted traces ------------------------------------------

def test_u_intertwiner_irreducible_self_twisted():
    ctx = build_field(3, 1)
    tm = TensorModel(ctx, 5, 1)
    nullity, mats = u_intertwiner(tm)
    assert nullity == 1
    T = mats[0]
    assert np.allclose(T @ T, np.eye(tm.dim), atol=1e-8)
    for x in enumerate_gl22(ctx)[::37]:
        assert np.allclose(T @ tm.mat(x), tm.mat(u_action(ctx, x)) @ T,
                           atol=1e-8)


def test_u_intertwiner_absent_and_doubled():
    ctx = build_field(3, 1)
    with pytest.raises(NoIntertwiner):
        u_intertwiner(TensorModel(ctx, 1, 2))
    nullity, _ = u_intertwiner(TensorModel(ctx, 2, 6))
    assert nullity == 2


def test_swap_and_ww_intertwine_the_twist():
    ctx = build_field(3, 1)
    tm = TensorModel(ctx, 2, 2)  # doubled presentation, lam = 0
    S = swap_operator(tm)
    W = ww_operator(tm)
    O = W @ S
    for x in enumerate_gl22(ctx)[::43]:
        assert np.allclose(O @ tm.mat(x), tm.mat(u_action(ctx, x)) @ O,
                           atol=1e-8)


def test_twisted_traces_match_closed_q2():
    ctx = build_field(2, 1)
    tm = TensorModel(ctx, 1, 1)
    s = SigmaLabel(1, 1, "Full")
    S = swap_operator(tm)
    W = ww_operator(tm)
    for R_name in ("Torus", "Unip", "ArtinUnip"):
        R = subgroup_R(R_name, ctx)
        assert twisted_trace(tm, S, R) == twisted_trace_closed(ctx, s, "swap", R)
    T = subgroup_R("Torus", ctx)
    assert twisted_trace(tm, W, T) == twisted_trace_closed(ctx, s, "ww", T)
    assert twisted_trace(tm, S @ W, T) == \
        twisted_trace_closed(ctx, s, "swap_ww", T)


def test_twisted_traces_match_closed_q3_both_presentations():
    ctx = build_field(3, 1)
    T = subgroup_R("Torus", ctx)
    s = SigmaLabel(2, 6, "Full")
    for pres in ((2, 0), (6, 1)):
        k_rho, l = pres
        tm = TensorModel(ctx, k_rho, k_rho, lam_exp=l)
        S = swap_operator(tm)
        W = ww_operator(tm)
        assert twisted_trace(tm, S, T) == \
            twisted_trace_closed(ctx, s, "swap", T, presentation=pres)
        assert twisted_trace(tm, W, T) == \
            twisted_trace_closed(ctx, s, "ww", T, presentation=pres)
        assert twisted_trace(tm, S @ W, T) == \
            twisted_trace_closed(ctx, s, "swap_ww", T, presentation=pres)


def test_twisted_traces_match_closed_q4():
    ctx = build_field(2, 2)
    s = SigmaLabel(11, 1, "Full")
    tm = TensorModel(ctx, 1, 1, lam_exp=2)
    S = swap_operator(tm)
    for R_name in ("Torus", "Unip", "ArtinUnip"):
        R = subgroup_R(R_name, ctx)
        assert twisted_trace(tm, S, R) == twisted_trace_closed(ctx, s, "swap", R)
    T = subgroup_R("Torus", ctx)
    W = ww_operator(tm)
    assert twisted_trace(tm, W, T) == twisted_trace_closed(ctx, s, "ww", T)


def test_twisted_trace_not_normalizing():
    # at q = 4 the doubled Weyl operator moves the unipotent-fixed space
    ctx = build_field(2, 2)
    tm = TensorModel(ctx, 1, 1, lam_exp=2)
    W = ww_operator(tm)
    with pytest.raises(NotNormalizing):
        twisted_trace(tm, W, subgroup_R("Unip", ctx))
    with pytest.raises(NotNormalizing):
        twisted_trace(tm, W, subgroup_R("ArtinUnip", ctx))
