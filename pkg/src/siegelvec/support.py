"""Coset bookkeeping for depth-zero fixed-vector counts.

The fixed-vector problem at level n reduces to a finite sum over a
stratified family of double cosets.  Each stratum is labeled by one of
the five tags used in :mod:`siegelvec.padic`, carries an (i, j) lattice
parameter and possibly a residue parameter, and contributes through the
fixed space of a standard subgroup of GL22(q).  This module enumerates
the strata, gives closed counting formulas, implements the pairing
induced by the level involution, and assembles dimension and signed
trace totals from the character layer.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .finitegrp import FqCtx, subgroup_R
from .chars import (
    SigmaLabel,
    BadCase,
    fixed_dim,
    fixed_dim_u_twist,
    twisted_trace_closed,
    self_twist_presentations,
)

COSET_TAGS = ("I", "II", "IIIa", "IIIb", "IV")

# lowest admissible j per stratum; all strata share the bound j <= n-2-2i
_JMIN = {"I": 1, "II": 2, "IIIa": 3, "IV": 4, "IIIb": 5}

# residue-parameter multiplicity per (i, j) pair
def _param_mult(tag: str, q: int) -> int:
    if tag == "IIIb":
        return q
    if tag == "IV":
        return q - 1
    return 1


COSET_R_TYPE = {"I": "Torus", "II": "Torus", "IIIa": "Unip",
                "IIIb": "ArtinUnip", "IV": "ArtinUnip"}

# shift in the j-reflection j -> n - 2i - j + shift of the level involution
_AL_SHIFT = {"I": -1, "II": 0, "IIIa": 1, "IV": 2, "IIIb": 3}

# strata whose pairing involves the nontrivial extension coset: their
# fixed cosets contribute through a twist operator and carry the
# extension sign.  The others contribute plain fixed vectors.
_TWISTED_TAGS = ("I", "IIIa", "IIIb")


class CosetParam(NamedTuple):
    """One double coset: stratum tag, lattice exponents, residue code.

    ``u`` is a residue code in the subfield: the unit parameter for IV,
    the shift parameter for IIIb, the (trivially 1) unit for IIIa, and
    unused (0) for I and II."""

    tag: str
    i: int
    j: int
    u: int = 0


def coset_R_type(tag: str) -> str:
    """Subgroup kind whose fixed space the stratum contributes through."""
    try:
        return COSET_R_TYPE[tag]
    except KeyError:
        raise ValueError(f"unknown stratum tag {tag!r}") from None


def stratum_count(tag: str, q: int, n: int) -> int:
    """Closed count of double cosets in one stratum at level n.

    Per (i, j) the count is the number of lattice points with
    jmin <= j <= n - 2 - 2i, which telescopes to floor((n-jmin)^2/4),
    times the residue multiplicity.  Only the first stratum is
    populated at odd q."""
    if tag not in COSET_TAGS:
        raise ValueError(f"unknown stratum tag {tag!r}")
    if q % 2 == 1 and tag != "I":
        return 0
    jmin = _JMIN[tag]
    if n <= jmin:
        return 0
    return _param_mult(tag, q) * ((n - jmin) ** 2 // 4)


def total_count(q: int, n: int) -> int:
    return sum(stratum_count(tag, q, n) for tag in COSET_TAGS)


def enumerate_support(fq: FqCtx, n: int) -> list[CosetParam]:
    """All double-coset parameters at level n, in a fixed order."""
    q = fq.q
    out = []
    for tag in COSET_TAGS:
        if q % 2 == 1 and tag != "I":
            continue
        jmin = _JMIN[tag]
        i = 0
        while jmin <= n - 2 - 2 * i:
            for j in range(jmin, n - 1 - 2 * i):
                if tag == "IIIb":
                    out.extend(CosetParam(tag, i, j, c) for c in fq.fq_elements)
                elif tag == "IV":
                    out.extend(CosetParam(tag, i, j, u) for u in fq.fq_units)
                elif tag == "IIIa":
                    out.append(CosetParam(tag, i, j, fq.one))
                else:
                    out.append(CosetParam(tag, i, j, 0))
            i += 1
    return out


def in_support(q: int, param: CosetParam, n: int) -> bool:
    """Whether the parameter indexes a stratum coset at level n."""
    if param.tag not in COSET_TAGS:
        return False
    if q % 2 == 1 and param.tag != "I":
        return False
    return param.i >= 0 and _JMIN[param.tag] <= param.j <= n - 2 - 2 * param.i


def al_partner(param: CosetParam, n: int) -> CosetParam:
    """Image of a coset under the level involution: reflect j, keep u."""
    j2 = n - 2 * param.i - param.j + _AL_SHIFT[param.tag]
    return param._replace(j=j2)


def al_fixed_cosets(fq: FqCtx, n: int) -> list[CosetParam]:
    """Cosets fixed by the level involution."""
    return [p for p in enumerate_support(fq, n) if al_partner(p, n) == p]


def fixed_stratum_count(tag: str, q: int, n: int) -> int:
    """Closed count of involution-fixed cosets per stratum.

    The reflection fixes j = (n + shift)/2 - i, so fixed cosets exist
    only for one parity of n and the count is linear in n."""
    if tag not in COSET_TAGS:
        raise ValueError(f"unknown stratum tag {tag!r}")
    if q % 2 == 1 and tag != "I":
        return 0
    shift = _AL_SHIFT[tag]
    if (n + shift) % 2 != 0:
        return 0
    # i ranges over 0 <= i <= (n + shift)/2 - jmin
    pairs = max(0, (n + shift) // 2 - _JMIN[tag] + 1)
    return _param_mult(tag, q) * pairs


def base_count(q: int, n: int) -> int:
    """The aggregated coset count weighted by per-stratum fixed dims.

    At odd q this is just the first-stratum count; at even q the other
    strata contribute with weights (1, q-1, 1, 1) and the total closes
    to a quadratic polynomial in n for n >= 4."""
    if q % 2 == 1:
        return (n - 1) ** 2 // 4 if n >= 1 else 0
    if n <= 2:
        return 0
    if n == 3:
        return 1
    return 2 * n - 5 + q * ((3 * n * n + 1) // 4 - 6 * n + 12)


_DIM_FACTOR_ODD = {"distinct": 4, "self": 2, "constituent": 1}
_DIM_FACTOR_EVEN = {"distinct": 2, "self": 1}


def classify_pairing(ctx: FqCtx, sigma: SigmaLabel) -> str:
    """'constituent', 'self' (full label isomorphic to its twist), or
    'distinct'.  Uses the presentation criterion, not a character scan."""
    if sigma.constituent != "Full":
        return "constituent"
    return "self" if self_twist_presentations(ctx, sigma) else "distinct"


def dim_formula(q: int, n: int, pairing: str, omega_trivial: bool = True) -> int:
    """Closed dimension of the level-n fixed space."""
    if not omega_trivial:
        return 0
    if q % 2 == 1:
        factor = _DIM_FACTOR_ODD.get(pairing)
    else:
        if pairing == "constituent":
            raise BadCase("no constituents at even q")
        factor = _DIM_FACTOR_EVEN.get(pairing)
    if factor is None:
        raise ValueError(f"unknown pairing class {pairing!r}")
    return factor * base_count(q, n)


class DimReport(NamedTuple):
    q: int
    n: int
    sigma: SigmaLabel
    pairing: str
    rows: tuple  # (tag, count, fixed, twist, subtotal)
    total: int


def assemble_dim(ctx: FqCtx, sigma: SigmaLabel, n: int, oracle=None) -> DimReport:
    """Sum per-coset fixed dimensions over the level-n support.

    Each coset of a stratum contributes the fixed dimension of the
    attached subgroup kind; when the label is not isomorphic to its
    twist the induced pair contributes the twisted fixed dimension on
    top.  The result matches dim_formula for trivial central character
    and vanishes otherwise."""
    q = ctx.q
    pairing = classify_pairing(ctx, sigma)
    self_tw = pairing != "distinct"
    rows = []
    total = 0
    for tag in COSET_TAGS:
        cnt = stratum_count(tag, q, n)
        if cnt == 0:
            continue
        R = subgroup_R(COSET_R_TYPE[tag], ctx)
        fd = fixed_dim(ctx, sigma, R, oracle=oracle)
        tw = 0 if self_tw else fixed_dim_u_twist(ctx, sigma, R, oracle=oracle)
        rows.append((tag, cnt, fd, tw, cnt * (fd + tw)))
        total += cnt * (fd + tw)
    return DimReport(q, n, sigma, pairing, tuple(rows), total)


def al_formula(q: int, n: int, pairing: str, ext_sign: int = 1,
               branch: Optional[str] = None) -> int:
    """Closed trace of the level involution on the fixed space.

    ``branch`` selects the quadratic-character class ('one' or 'alpha')
    of the twisting character at odd q; it is ignored at even q, where
    only 'one' occurs.  ``ext_sign`` is the extension choice (+1 or -1)
    and scales the odd-level values only."""
    if ext_sign not in (1, -1):
        raise ValueError("ext_sign must be +1 or -1")
    if pairing not in ("distinct", "self", "constituent"):
        raise ValueError(f"unknown pairing class {pairing!r}")
    if q % 2 == 0 and pairing == "constituent":
        raise BadCase("no constituents at even q")
    if n < 3:
        return 0
    if n % 2 == 0:
        if q % 2 == 1:
            return 0
        base = 1 + q * (n - 4) // 2 if n >= 4 else 0
        return base * (2 if pairing == "distinct" else 1)
    if pairing == "distinct":
        return 0
    if q % 2 == 0:
        val = 1 if n == 3 else 1 + q * (n - 4)
        return ext_sign * val
    per = 1
    if pairing == "self":
        if branch is None:
            raise ValueError("odd q self pairing needs branch 'one' or 'alpha'")
        per = 2 if branch == "one" else 0
    return ext_sign * ((n - 1) // 2) * per


class ALReport(NamedTuple):
    q: int
    n: int
    sigma: SigmaLabel
    ext_sign: int
    rows: tuple  # (tag, fixed-coset count, per-coset value, subtotal)
    total: int


def assemble_al(ctx: FqCtx, sigma: SigmaLabel, n: int, ext_sign: int = 1,
                presentation: Optional[tuple[int, int]] = None,
                oracle=None) -> ALReport:
    """Sum the involution trace over its fixed cosets at level n.

    Fixed cosets of the plain strata (II, IV) contribute their fixed
    dimension, doubled for a label not isomorphic to its twist, with no
    sign.  Fixed cosets of the remaining strata act through the twist
    operator: they vanish for such labels, carry the closed swap trace
    for a self-paired full label, and contribute one line for a
    constituent, all scaled by the extension sign."""
    if ext_sign not in (1, -1):
        raise ValueError("ext_sign must be +1 or -1")
    q = ctx.q
    pairing = classify_pairing(ctx, sigma)
    rows = []
    total = 0
    for tag in COSET_TAGS:
        cnt = fixed_stratum_count(tag, q, n)
        if cnt == 0:
            continue
        R = subgroup_R(COSET_R_TYPE[tag], ctx)
        if tag in _TWISTED_TAGS:
            if pairing == "distinct":
                val = 0
            elif pairing == "constituent":
                val = ext_sign
            else:
                val = ext_sign * twisted_trace_closed(ctx, sigma, "swap", R,
                                                      presentation=presentation)
        else:
            fd = fixed_dim(ctx, sigma, R, oracle=oracle)
            tw = 0 if pairing != "distinct" else \
                fixed_dim_u_twist(ctx, sigma, R, oracle=oracle)
            val = fd + tw
        rows.append((tag, cnt, val, cnt * val))
        total += cnt * val
    return ALReport(q, n, sigma, ext_sign, tuple(rows), total)
