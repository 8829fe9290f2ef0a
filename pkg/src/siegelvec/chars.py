"""Cuspidal characters of GL2(q), labels for representations of GL22(q),
and closed-form fixed-space dimensions.

A cuspidal representation of GL2(q) is labeled by an exponent k with
(q+1) not dividing k: the corresponding character theta of the big
multiplicative group sends g2^j to zeta_{q^2-1}^{kj}.  Labels k and q*k
name the same representation.  Character values depend only on the
conjugacy type:

* scalar aI            -> (q-1) theta(a)
* non-semisimple, eigenvalue a (repeated, nonscalar) -> -theta(a)
* split regular diag(a,b), a != b                    -> 0
* elliptic, eigenvalue t outside F_q                 -> -(theta(t) + theta(t^q))

A SigmaLabel names an irreducible-or-full piece of the restriction of a
cuspidal pair to the det-matched group GL22(q): either the full
restriction, or (q odd, both factors with split restriction to SL2) one
of the two equidimensional constituents Plus/Minus.  Constituent
characters have no global closed form.  Conjugation by the outer element
s = (diag(e,1), 1), e a nonsquare, exchanges the two constituents, so on
any subset stable under s-conjugation their character sums agree and
fixed dimensions halve the full average; the torus and the two radical
columns are stable, the unipotent family is not (there the split is
{q-1, 0} and only the matrix-model oracle sees it).
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .finitegrp import (
    FqCtx, GL2Elem, GL22Elem, ExtElem, SubgroupR, enumerate_gl22, ext_inv,
    ext_mul, gl2_det, gl2_inv, gl2_mul, u_action,
)
from .numerics import CharValue, certify_integer, root_of_unity


class OracleRequired(RuntimeError):
    """A constituent value was requested that needs the matrix-model oracle."""


class HypothesisViolated(ValueError):
    """Closed form invoked outside the hypotheses it was proved under."""


class BadCase(ValueError):
    """Unknown case tag for a closed form."""


# -- cuspidal labels -------------------------------------------------------

class CuspidalLabel(NamedTuple):
    k: int


def valid_cuspidal(ctx: FqCtx, k: int) -> bool:
    return (k % (ctx.q + 1)) != 0


def all_cuspidal_exponents(ctx: FqCtx) -> list[int]:
    return [k for k in range(ctx.q2 - 1) if valid_cuspidal(ctx, k)]


def canonical_cuspidal(ctx: FqCtx, k: int) -> int:
    k %= ctx.q2 - 1
    return min(k, (ctx.q * k) % (ctx.q2 - 1))


def cuspidal_classes(ctx: FqCtx) -> list[int]:
    return sorted({canonical_cuspidal(ctx, k) for k in all_cuspidal_exponents(ctx)})


def theta_eval(ctx: FqCtx, k: int, a: int) -> CharValue:
    """theta_k evaluated at a nonzero element of F_{q^2}."""
    return root_of_unity(ctx.q2 - 1, k * ctx.dlog(a))


def classify_gl2(ctx: FqCtx, g: GL2Elem):
    """Conjugacy type of g: ('scalar', a), ('nonss', a), ('split', (a, b)),
    or ('elliptic', t) with t one of the two eigenvalues outside F_q."""
    if g.b == 0 and g.c == 0 and g.a == g.d:
        return ("scalar", g.a)
    tr = ctx.add(g.a, g.d)
    det = gl2_det(ctx, g)
    # roots of t^2 - tr t + det over F_{q^2}; both live there
    roots = _quadratic_roots(ctx, tr, det)
    r1, r2 = roots
    if r1 == r2:
        return ("nonss", r1)
    if ctx.in_fq(r1):
        return ("split", (min(r1, r2), max(r1, r2)))
    return ("elliptic", min(r1, r2))


_ROOT_CACHE: dict[tuple, tuple] = {}


def _quadratic_roots(ctx: FqCtx, tr: int, det: int) -> tuple:
    key = (ctx.p, ctx.f, tr, det)
    hit = _ROOT_CACHE.get(key)
    if hit is not None:
        return hit
    roots = []
    for e in range(ctx.q2):
        t = e  # codes enumerate all of F_{q^2}
        val = ctx.add(ctx.sub(ctx.mul(t, t), ctx.mul(tr, t)), det)
        if val == 0:
            roots.append(t)
            if len(roots) == 2:
                break
    if len(roots) == 1:
        roots.append(roots[0])
    out = tuple(roots)
    _ROOT_CACHE[key] = out
    return out


_CHAR_CACHE: dict[tuple, complex] = {}


def cuspidal_char(ctx: FqCtx, theta: int, g: GL2Elem) -> CharValue:
    """Character of the cuspidal representation labeled by theta at g."""
    kind, data = classify_gl2(ctx, g)
    return _char_by_type(ctx, theta, kind, data)


def _char_by_type(ctx: FqCtx, k: int, kind: str, data) -> CharValue:
    if kind == "split":
        return CharValue(0.0, 1, {})
    if kind == "scalar":
        return (ctx.q - 1) * theta_eval(ctx, k, data)
    if kind == "nonss":
        return -theta_eval(ctx, k, data)
    t = data
    return -(theta_eval(ctx, k, t) + theta_eval(ctx, k, ctx.frob_q(t)))


def cuspidal_char_fast(ctx: FqCtx, theta: int, g: GL2Elem) -> complex:
    """Complex-valued character with caching by conjugacy type."""
    kind, data = classify_gl2(ctx, g)
    if kind == "split":
        return 0.0
    key = (ctx.p, ctx.f, theta % (ctx.q2 - 1), kind, data)
    hit = _CHAR_CACHE.get(key)
    if hit is None:
        hit = _char_by_type(ctx, theta, kind, data).value
        _CHAR_CACHE[key] = hit
    return hit


# -- omega (central character) helpers ------------------------------------

def omega_exponent(ctx: FqCtx, k: int) -> int:
    """Exponent of omega_rho = theta restricted to F_q^x, modulo q-1."""
    return k % (ctx.q - 1) if ctx.q > 2 else 0


def omega_minus1(ctx: FqCtx, k: int) -> int:
    """omega_rho(-1) as +1 or -1 (always +1 for q even)."""
    if ctx.q % 2 == 0:
        return 1
    return -1 if k % 2 else 1


# -- sigma labels ----------------------------------------------------------

class SigmaLabel(NamedTuple):
    k1: int
    k2: int
    constituent: str  # 'Full' | 'Plus' | 'Minus'


def split_restriction(ctx: FqCtx, k: int) -> bool:
    """Whether the restriction of the cuspidal to SL2(q) splits in two.

    Happens exactly when theta^(q-1) equals the quadratic character
    composed with the norm; impossible for q even."""
    if ctx.q % 2 == 0:
        return False
    return k % (ctx.q + 1) == (ctx.q + 1) // 2


def make_sigma(ctx: FqCtx, k1: int, k2: int, constituent: str = "Full") -> SigmaLabel:
    k1 %= ctx.q2 - 1
    k2 %= ctx.q2 - 1
    if not (valid_cuspidal(ctx, k1) and valid_cuspidal(ctx, k2)):
        raise ValueError(f"exponents ({k1}, {k2}) are not cuspidal at q = {ctx.q}")
    if constituent not in ("Full", "Plus", "Minus"):
        raise ValueError(f"bad constituent tag {constituent!r}")
    if constituent != "Full":
        if ctx.q % 2 == 0:
            raise ValueError("constituents require q odd")
        if not (split_restriction(ctx, k1) and split_restriction(ctx, k2)):
            raise ValueError("constituents require both labels with split restriction")
    return SigmaLabel(k1, k2, constituent)


def sigma_is_reducible(ctx: FqCtx, sigma: SigmaLabel) -> bool:
    """The full restriction splits iff q is odd and both labels do."""
    return (ctx.q % 2 == 1 and split_restriction(ctx, sigma.k1)
            and split_restriction(ctx, sigma.k2))


def sigma_irreducible(ctx: FqCtx, sigma: SigmaLabel) -> bool:
    if sigma.constituent == "Full":
        return not sigma_is_reducible(ctx, sigma)
    return True


def sigma_dim(ctx: FqCtx, sigma: SigmaLabel) -> int:
    d = (ctx.q - 1) ** 2
    return d if sigma.constituent == "Full" else d // 2


def sigma_omega_trivial(ctx: FqCtx, sigma: SigmaLabel) -> bool:
    """Triviality of the central character on the full center of GL22(q).

    The center is {(aI, +-aI)} for q odd and {(aI, aI)} for q even, so the
    condition is omega_1 omega_2 = 1 plus (q odd) omega_2(-1) = 1."""
    m = ctx.q - 1
    if m > 1 and (sigma.k1 + sigma.k2) % m != 0:
        return False
    if ctx.q % 2 == 1 and sigma.k2 % 2 != 0:
        return False
    return True


def sigma_key(ctx: FqCtx, sigma: SigmaLabel):
    """Canonical key for the isomorphism class of the label.

    Moves: relabel either factor by Frobenius (k -> qk), and shift a
    determinant twist between the factors (k1 + l(q+1), k2 - l(q+1))."""
    m = ctx.q2 - 1
    seen = set()
    frontier = [(sigma.k1 % m, sigma.k2 % m)]
    while frontier:
        cur = frontier.pop()
        if cur in seen:
            continue
        seen.add(cur)
        a, b = cur
        for nxt in (((ctx.q * a) % m, b), (a, (ctx.q * b) % m),
                    ((a + ctx.q + 1) % m, (b - ctx.q - 1) % m),
                    ((a - ctx.q - 1) % m, (b + ctx.q + 1) % m)):
            if nxt not in seen:
                frontier.append(nxt)
    return (min(seen), sigma.constituent)


def sigma_equiv(ctx: FqCtx, s1: SigmaLabel, s2: SigmaLabel) -> bool:
    return sigma_key(ctx, s1) == sigma_key(ctx, s2)


def u1_twist(ctx: FqCtx, sigma: SigmaLabel) -> SigmaLabel:
    """Label of the composition with the u-action (factor swap + w-conj)."""
    return SigmaLabel(sigma.k2, sigma.k1, sigma.constituent)


def is_self_twisted(ctx: FqCtx, sigma: SigmaLabel, max_group: int = 9) -> bool:
    """Exact character comparison chi(x) = chi(u_action(x)) over GL22(q).

    For a constituent this reduces to its parent: the u-action fixes the
    parent's isotypic family and each constituent's restriction type, so a
    constituent is self-twisted exactly when the full label is (cross
    checked against the oracle intertwiner in the test suite)."""
    if ctx.q > max_group:
        raise ValueError(f"self-twist comparison capped at q = {max_group}")
    k1, k2 = sigma.k1, sigma.k2
    for x in enumerate_gl22(ctx):
        y = u_action(ctx, x)
        lhs = cuspidal_char_fast(ctx, k1, x.first) * cuspidal_char_fast(ctx, k2, x.second)
        rhs = cuspidal_char_fast(ctx, k1, y.first) * cuspidal_char_fast(ctx, k2, y.second)
        if abs(lhs - rhs) > 1e-8:
            return False
    return True


def self_twist_presentations(ctx: FqCtx, sigma: SigmaLabel) -> list[tuple[int, int]]:
    """All (k_rho, l_lambda) with the full label isomorphic to the
    determinant twist by lambda (exponent l) of the doubled pair on rho.

    Nonempty exactly when the label is self-twisted; this is the
    arithmetic counterpart of is_self_twisted."""
    m = ctx.q2 - 1
    q = ctx.q
    outs = []
    firsts = {sigma.k1 % m, (q * sigma.k1) % m}
    seconds = {sigma.k2 % m, (q * sigma.k2) % m}
    for ka, kb in [(a, b) for a in firsts for b in seconds] + \
                  [(a, b) for a in seconds for b in firsts]:
        diff = (ka - kb) % m
        if diff % (q + 1) == 0:
            l = (diff // (q + 1)) % (q - 1) if q > 2 else 0
            outs.append((kb, l))
    return sorted(set(outs))


def lambda_omega_class(ctx: FqCtx, sigma: SigmaLabel,
                       presentation: Optional[tuple[int, int]] = None) -> str:
    """'one' or 'alpha': the value of lambda * omega_rho for a self-twisted
    full label, which is an order <= 2 character whenever the central
    character is trivial.

    Irreducible labels determine the class; reducible ones admit both and
    need an explicit (k_rho, l_lambda) presentation."""
    if ctx.q == 2:
        return "one"
    half = (ctx.q - 1) // 2
    if presentation is not None:
        k_rho, l = presentation
        e = (k_rho + l) % (ctx.q - 1)
    else:
        pres = self_twist_presentations(ctx, sigma)
        if not pres:
            raise HypothesisViolated("label is not self-twisted")
        exps = {(kb + l) % (ctx.q - 1) for kb, l in pres}
        if len(exps) != 1:
            raise HypothesisViolated(
                "lambda*omega is presentation dependent (reducible label); "
                "pass an explicit presentation")
        e = exps.pop()
    if e == 0:
        return "one"
    if ctx.q % 2 == 1 and e == half:
        return "alpha"
    raise HypothesisViolated(f"(lambda*omega)^2 != 1 (exponent {e} mod {ctx.q - 1})")


# -- characters and fixed dimensions ---------------------------------------

_SWAP_STABLE_LABELS = ("Torus", "U1", "U2")


def _diag_pair(x: GL22Elem) -> bool:
    return x.first.b == 0 and x.first.c == 0 and x.second.b == 0 and x.second.c == 0


def sigma_char(ctx: FqCtx, sigma: SigmaLabel, x: GL22Elem, oracle=None) -> CharValue:
    """Character value of the labeled representation at x.

    Full labels multiply the two cuspidal characters.  Constituents are
    computed in closed form on diagonal pairs (where the two constituents
    agree, each contributing half the full value) and otherwise require
    the oracle handle."""
    full = cuspidal_char(ctx, sigma.k1, x.first) * cuspidal_char(ctx, sigma.k2, x.second)
    if sigma.constituent == "Full":
        return full
    if _diag_pair(x):
        return CharValue(full.value / 2.0)
    if oracle is None:
        raise OracleRequired("constituent character off the diagonal needs the oracle")
    return CharValue(oracle.char(x))


def _swap_conj(ctx: FqCtx, x: GL22Elem) -> GL22Elem:
    """Conjugation by the constituent-swapping element (diag(e,1), 1)."""
    e = ctx.fq_gen
    d = GL2Elem(e, 0, 0, ctx.one)
    first = gl2_mul(ctx, gl2_mul(ctx, d, x.first), gl2_inv(ctx, d))
    return GL22Elem(first, x.second)


def _swap_stable_set(ctx: FqCtx, elems: frozenset) -> bool:
    return all(_swap_conj(ctx, x) in elems for x in elems)


def _full_average(ctx: FqCtx, sigma: SigmaLabel, elems) -> complex:
    total = 0.0
    for r in elems:
        total += (cuspidal_char_fast(ctx, sigma.k1, r.first)
                  * cuspidal_char_fast(ctx, sigma.k2, r.second))
    return total / len(elems)


def fixed_dim(ctx: FqCtx, sigma: SigmaLabel, R: SubgroupR, oracle=None) -> int:
    """dim of the R-fixed subspace, by averaging the character over R.

    For a constituent the average halves the full one whenever R is stable
    under conjugation by the swapping element (diag(e,1), 1); the unipotent
    family is not stable, and there the oracle computes the rank."""
    if sigma.constituent == "Full":
        return certify_integer(_full_average(ctx, sigma, R))
    if R.label in _SWAP_STABLE_LABELS or _swap_stable_set(ctx, R.elements):
        return certify_integer(_full_average(ctx, sigma, R) / 2.0)
    if oracle is None:
        raise OracleRequired("constituent fixed dim on this subgroup needs the oracle")
    return oracle.fixed_rank(R)


def fixed_dim_u_twist(ctx: FqCtx, sigma: SigmaLabel, R: SubgroupR, oracle=None) -> int:
    """Fixed dimension of the u-twisted representation on the same R."""
    twisted = [u_action(ctx, r) for r in R]
    if sigma.constituent == "Full":
        return certify_integer(_full_average(ctx, sigma, twisted))
    if _swap_stable_set(ctx, frozenset(twisted)):
        return certify_integer(_full_average(ctx, sigma, twisted) / 2.0)
    if oracle is None:
        raise OracleRequired("constituent fixed dim on this subgroup needs the oracle")
    return oracle.fixed_rank_twisted(R)


def fixed_dim_closed(case: str, q: int, omega_sign: int | None = None) -> int:
    """Closed fixed-space dimensions for the standard subgroups.

    case 'a': full label on the torus; 'b': constituent on the torus
    (q odd); 'c': full label on the unipotent family; 'd': full label on
    the Artin-Schreier family (q even)."""
    if case == "a":
        if q % 2 == 0:
            return 1
        if omega_sign not in (1, -1):
            raise BadCase("case 'a' at odd q needs omega(-1)")
        return 1 + omega_sign
    if case == "b":
        if q % 2 == 0:
            raise BadCase("case 'b' requires q odd")
        return 1 if q % 4 == 3 else 0
    if case == "c":
        return q - 1
    if case == "d":
        if q % 2 != 0:
            raise BadCase("case 'd' requires q even")
        return 1
    raise BadCase(f"unknown case {case!r}")


_TWISTED_DIM_BY_LABEL = {"Torus": lambda q: 1, "Unip": lambda q: q - 1,
                         "ArtinUnip": lambda q: 1}


def twisted_trace_closed(ctx: FqCtx, sigma: SigmaLabel, operator: str,
                         R: SubgroupR,
                         presentation: Optional[tuple[int, int]] = None) -> int:
    """Closed-form trace of a twist operator on the R-fixed subspace.

    ``operator`` is 'swap' (exchange the tensor factors), 'ww' (act by the
    doubled Weyl element), or 'swap_ww' (their composition, the image of
    the normalizer coset).  Hypotheses: the label is a self-twisted full
    pair presented as a determinant twist of a doubled cuspidal rho with
    omega_rho(-1) = 1 and (lambda omega_rho)^2 = 1."""
    if operator not in ("swap", "ww", "swap_ww"):
        raise BadCase(f"unknown operator {operator!r}")
    pres = self_twist_presentations(ctx, sigma)
    if not pres:
        raise HypothesisViolated("label is not self-twisted")
    if presentation is not None:
        if presentation not in pres:
            raise HypothesisViolated("presentation does not match the label")
        k_rho, _ = presentation
    else:
        k_rho = pres[0][0]
    if omega_minus1(ctx, k_rho) != 1:
        raise HypothesisViolated("omega_rho(-1) != 1")
    branch = lambda_omega_class(ctx, sigma, presentation)
    q = ctx.q
    if q % 2 == 0:
        if operator == "swap":
            fn = _TWISTED_DIM_BY_LABEL.get(R.label)
            if fn is None:
                raise HypothesisViolated(f"no closed form for subgroup {R.label}")
            return fn(q)
        if R.label != "Torus":
            raise HypothesisViolated("doubled Weyl operator only normalizes the torus")
        return 1
    if R.label != "Torus":
        raise HypothesisViolated("odd q closed forms cover the torus only")
    if branch == "one":
        return 2
    sign = -1 if (q - 3) // 2 % 2 else 1
    return {"swap": 0, "ww": 2 * sign, "swap_ww": 0}[operator]


def induced_trace_zero(ctx: FqCtx, sigma: SigmaLabel, s: ExtElem, R: SubgroupR) -> int:
    """Trace of an induced-extension operator on the R-fixed space: zero.

    Requires a non-self-twisted label, s in the nontrivial coset of the
    order-2 extension, and s normalizing R; the induced operator is then
    block antidiagonal for the two twisted summands."""
    if is_self_twisted(ctx, sigma):
        raise HypothesisViolated("label is self-twisted")
    if s.eps != 1:
        raise HypothesisViolated("s must lie in the nontrivial extension coset")
    si = ext_inv(ctx, s)
    for r in R:
        conj = ext_mul(ctx, ext_mul(ctx, s, ExtElem(r, 0)), si)
        if conj.eps != 0 or conj.base not in R.elements:
            raise HypothesisViolated("s does not normalize R")
    return 0


def omega_trivial_sigma_classes(ctx: FqCtx) -> list[SigmaLabel]:
    """Canonical labels with trivial central character, one per iso class,
    constituents expanded."""
    seen = {}
    for k1 in all_cuspidal_exponents(ctx):
        for k2 in all_cuspidal_exponents(ctx):
            s = SigmaLabel(k1, k2, "Full")
            if not sigma_omega_trivial(ctx, s):
                continue
            key = sigma_key(ctx, s)
            if key not in seen:
                seen[key] = s
    out = []
    for s in seen.values():
        if sigma_is_reducible(ctx, s):
            out.append(SigmaLabel(s.k1, s.k2, "Plus"))
            out.append(SigmaLabel(s.k1, s.k2, "Minus"))
        else:
            out.append(s)
    return sorted(out)
