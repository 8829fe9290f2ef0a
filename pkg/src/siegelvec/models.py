"""Matrix models for cuspidal representations and their det-matched tensors.

The cuspidal model lives inside the space of functions on GL2(q)
transforming under the upper unitriangular group by a fixed nontrivial
additive character.  Right translation acts there by signed permutations
(a coset permutation plus a root-of-unity phase per row), the isotypic
projector for a cuspidal character has rank q-1, and compressing right
translation to its range gives explicit (q-1) x (q-1) unitary matrices.

Tensor models pair two cuspidal models, optionally twisted by a power of
the determinant character on the first factor; they serve as the oracle
for everything the character formulas cannot see: constituent splitting,
twist intertwiners, and traces of twist operators on fixed subspaces.
"""

from __future__ import annotations

import numpy as np

from .finitegrp import (
    FqCtx, GL2Elem, GL22Elem, SubgroupR, enumerate_gl2, enumerate_gl22,
    gl2_inv, gl2_mul, u_action,
)
from .chars import cuspidal_char_fast, split_restriction
from .numerics import certify_integer


class ProjectorRankMismatch(ArithmeticError):
    """Isotypic projector trace disagrees with the multiplicity-one rank."""


class NoIntertwiner(ArithmeticError):
    """The twist equation has no nonzero solution."""


class NotNormalizing(ValueError):
    """The operator does not preserve the averaged subgroup projector."""


_TOL = 1e-8


def _nullspace(M: np.ndarray, tol: float = _TOL) -> list[np.ndarray]:
    _, s, vh = np.linalg.svd(M)
    cut = tol * max(1.0, s[0] if len(s) else 0.0)
    null = [vh[i].conj() for i in range(len(vh)) if i >= len(s) or s[i] < cut]
    return null


# -- the induced signed-permutation model -----------------------------------

class WhittakerSpace:
    """Function model induced from an additive character of the upper
    unitriangular subgroup, with right translation as signed permutations."""

    def __init__(self, ctx: FqCtx):
        self.ctx = ctx
        reps = []
        index = {}
        for c in ctx.fq_elements:
            for d in ctx.fq_elements:
                if c == 0 and d == 0:
                    continue
                for delta in ctx.fq_units:
                    if c != 0:
                        rep = GL2Elem(0, ctx.neg(ctx.mul(delta, ctx.inv(c))), c, d)
                    else:
                        rep = GL2Elem(ctx.mul(delta, ctx.inv(d)), 0, 0, d)
                    index[(c, d, delta)] = len(reps)
                    reps.append(rep)
        self.reps = reps
        self.index = index
        self.dim = len(reps)
        self._action_cache: dict[GL2Elem, tuple[np.ndarray, np.ndarray]] = {}

    def _coset_key(self, g: GL2Elem):
        ctx = self.ctx
        delta = ctx.sub(ctx.mul(g.a, g.d), ctx.mul(g.b, g.c))
        return (g.c, g.d, delta)

    def action(self, g: GL2Elem) -> tuple[np.ndarray, np.ndarray]:
        """Right translation by g: (perm, phase) with
        (M v)[r] = phase[r] * v[perm[r]]."""
        hit = self._action_cache.get(g)
        if hit is not None:
            return hit
        ctx = self.ctx
        perm = np.empty(self.dim, dtype=np.int64)
        phase = np.empty(self.dim, dtype=np.complex128)
        for i, r in enumerate(self.reps):
            x = gl2_mul(ctx, r, g)
            j = self.index[self._coset_key(x)]
            u = gl2_mul(ctx, x, gl2_inv(ctx, self.reps[j]))
            # u is upper unitriangular; the phase reads off its corner
            perm[i] = j
            phase[i] = ctx.psi(u.b).value
        out = (perm, phase)
        self._action_cache[g] = out
        return out

    def apply(self, g: GL2Elem, v: np.ndarray) -> np.ndarray:
        perm, phase = self.action(g)
        return phase[:, None] * v[perm] if v.ndim == 2 else phase * v[perm]


class CuspidalModel:
    """Unitary (q-1) x (q-1) matrices for one cuspidal exponent."""

    def __init__(self, ctx: FqCtx, k: int, tol: float = _TOL):
        self.ctx = ctx
        self.k = k % (ctx.q2 - 1)
        self.space = _whittaker_space(ctx)
        self.dim = ctx.q - 1
        elems = enumerate_gl2(ctx)
        N = self.space.dim
        P = np.zeros((N, N), dtype=np.complex128)
        rows = np.arange(N)
        scale = (ctx.q - 1) / len(elems)
        for g in elems:
            perm, phase = self.space.action(g)
            coeff = scale * np.conj(cuspidal_char_fast(ctx, self.k, g))
            if coeff != 0:
                np.add.at(P, (rows, perm), coeff * phase)
        if np.linalg.norm(P - P.conj().T) > tol * N:
            raise ProjectorRankMismatch("projector is not Hermitian")
        if np.linalg.norm(P @ P - P) > tol * N:
            raise ProjectorRankMismatch("projector is not idempotent")
        tr = certify_integer(np.trace(P), tol=1e-6)
        if tr != ctx.q - 1:
            raise ProjectorRankMismatch(
                f"isotypic rank {tr}, expected {ctx.q - 1}")
        vals, vecs = np.linalg.eigh(P)
        self.basis = vecs[:, vals > 0.5]
        self._cache: dict[GL2Elem, np.ndarray] = {}

    def mat(self, g: GL2Elem) -> np.ndarray:
        hit = self._cache.get(g)
        if hit is None:
            hit = self.basis.conj().T @ self.space.apply(g, self.basis)
            self._cache[g] = hit
        return hit

    def char(self, g: GL2Elem) -> complex:
        return complex(np.trace(self.mat(g)))

    def verify_character(self, sample=None, tol: float = 1e-7) -> None:
        elems = enumerate_gl2(self.ctx) if sample is None else sample
        for g in elems:
            want = cuspidal_char_fast(self.ctx, self.k, g)
            if abs(self.char(g) - want) > tol:
                raise ProjectorRankMismatch(
                    f"character mismatch at {g}: {self.char(g)} vs {want}")


_SPACE_CACHE: dict[tuple, WhittakerSpace] = {}
_MODEL_CACHE: dict[tuple, CuspidalModel] = {}


def _whittaker_space(ctx: FqCtx) -> WhittakerSpace:
    key = (ctx.p, ctx.f)
    if key not in _SPACE_CACHE:
        _SPACE_CACHE[key] = WhittakerSpace(ctx)
    return _SPACE_CACHE[key]


def cuspidal_model(ctx: FqCtx, k: int) -> CuspidalModel:
    key = (ctx.p, ctx.f, k % (ctx.q2 - 1))
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = CuspidalModel(ctx, k)
    return _MODEL_CACHE[key]


# -- tensor models -----------------------------------------------------------

class TensorModel:
    """Matrices for a pair of cuspidal models twisted by det^lam on the
    first factor.  Defined on arbitrary GL2 pairs; restriction to the
    det-matched subgroup is what the labels in chars describe."""

    def __init__(self, ctx: FqCtx, k1: int, k2: int, lam_exp: int = 0):
        self.ctx = ctx
        self.k1 = k1 % (ctx.q2 - 1)
        self.k2 = k2 % (ctx.q2 - 1)
        self.lam_exp = lam_exp % (ctx.q - 1) if ctx.q > 2 else 0
        self.m1 = cuspidal_model(ctx, k1)
        self.m2 = cuspidal_model(ctx, k2)
        self.dim = self.m1.dim * self.m2.dim
        self._cache: dict[GL22Elem, np.ndarray] = {}

    def _det_phase(self, g: GL2Elem) -> complex:
        if self.lam_exp == 0:
            return 1.0
        ctx = self.ctx
        det = ctx.sub(ctx.mul(g.a, g.d), ctx.mul(g.b, g.c))
        j = ctx.dlog(det) // (ctx.q + 1)
        return np.exp(2j * np.pi * self.lam_exp * j / (ctx.q - 1))

    def mat(self, x: GL22Elem) -> np.ndarray:
        hit = self._cache.get(x)
        if hit is None:
            hit = self._det_phase(x.first) * np.kron(
                self.m1.mat(x.first), self.m2.mat(x.second))
            self._cache[x] = hit
        return hit

    def char(self, x: GL22Elem) -> complex:
        return complex(np.trace(self.mat(x)))

    def fixed_rank(self, R: SubgroupR) -> int:
        return certify_integer(
            sum(np.trace(self.mat(r)) for r in R) / len(R), tol=1e-6)

    def fixed_rank_twisted(self, R: SubgroupR) -> int:
        return certify_integer(
            sum(np.trace(self.mat(u_action(self.ctx, r))) for r in R) / len(R),
            tol=1e-6)

    def fixed_projector(self, R: SubgroupR) -> np.ndarray:
        P = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for r in R:
            P += self.mat(r)
        return P / len(R)


def _gl22_generators(ctx: FqCtx) -> list[GL22Elem]:
    one = ctx.one
    ident = GL2Elem(one, 0, 0, one)
    gens = []
    for u in ctx.fq_units:
        gens.append(GL22Elem(GL2Elem(one, u, 0, one), ident))
        gens.append(GL22Elem(GL2Elem(one, 0, u, one), ident))
        gens.append(GL22Elem(ident, GL2Elem(one, u, 0, one)))
        gens.append(GL22Elem(ident, GL2Elem(one, 0, u, one)))
    g = ctx.fq_gen
    gens.append(GL22Elem(GL2Elem(g, 0, 0, one), GL2Elem(g, 0, 0, one)))
    return gens


def commutant_dim(tm: TensorModel, tol: float = _TOL) -> tuple[int, list[np.ndarray]]:
    """Dimension and basis of the algebra commuting with the det-matched
    restriction, from the stacked kernel over a generating set."""
    n = tm.dim
    eye = np.eye(n)
    blocks = []
    for x in _gl22_generators(tm.ctx):
        A = tm.mat(x)
        blocks.append(np.kron(A.T, eye) - np.kron(eye, A))
    M = np.vstack(blocks)
    null = _nullspace(M, tol)
    mats = [v.reshape((n, n), order="F") for v in null]
    return len(mats), mats


def _probe_traces(tm: TensorModel, B: np.ndarray, elems) -> tuple:
    out = []
    for x in elems:
        t = np.trace(B.conj().T @ tm.mat(x) @ B)
        out.append((round(t.real, 6), round(t.imag, 6)))
    return tuple(out)


class ConstituentModel:
    """One irreducible summand of a reducible tensor model, carried by an
    orthonormal basis of an isotypic eigenspace of the commutant."""

    def __init__(self, tm: TensorModel, basis: np.ndarray, tag: str):
        self.tm = tm
        self.ctx = tm.ctx
        self.basis = basis
        self.tag = tag
        self.dim = basis.shape[1]
        self._cache: dict[GL22Elem, np.ndarray] = {}

    def mat(self, x: GL22Elem) -> np.ndarray:
        hit = self._cache.get(x)
        if hit is None:
            hit = self.basis.conj().T @ self.tm.mat(x) @ self.basis
            self._cache[x] = hit
        return hit

    def char(self, x: GL22Elem) -> complex:
        return complex(np.trace(self.mat(x)))

    def fixed_rank(self, R: SubgroupR) -> int:
        return certify_integer(
            sum(np.trace(self.mat(r)) for r in R) / len(R), tol=1e-6)

    def fixed_rank_twisted(self, R: SubgroupR) -> int:
        return certify_integer(
            sum(np.trace(self.mat(u_action(self.ctx, r))) for r in R) / len(R),
            tol=1e-6)

    def fixed_projector(self, R: SubgroupR) -> np.ndarray:
        P = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for r in R:
            P += self.mat(r)
        return P / len(R)


def decompose(tm: TensorModel, seed: int = 0, tol: float = _TOL) -> list[ConstituentModel]:
    """Split a reducible det-matched restriction into its two constituents.

    Requires a two-dimensional commutant (q odd, both factors with split
    restriction); raises ValueError otherwise.  The Plus/Minus naming is a
    deterministic probe-trace convention, nothing intrinsic."""
    ctx = tm.ctx
    dim_c, mats = commutant_dim(tm, tol)
    if dim_c == 1:
        raise ValueError("restriction is irreducible")
    if dim_c != 2:
        raise ValueError(f"unexpected commutant dimension {dim_c}")
    rng = np.random.default_rng(seed)
    H = np.zeros((tm.dim, tm.dim), dtype=np.complex128)
    for X in mats:
        c = rng.standard_normal() + 1j * rng.standard_normal()
        H += c * X + np.conj(c) * X.conj().T
    vals, vecs = np.linalg.eigh(H)
    gaps = np.diff(vals)
    cut = int(np.argmax(gaps)) + 1
    if cut == 0 or cut == tm.dim:
        raise ValueError("eigenvalue clustering failed")
    parts = [vecs[:, :cut], vecs[:, cut:]]
    if parts[0].shape[1] != parts[1].shape[1]:
        raise ValueError("constituents are not equidimensional")
    for B in parts:
        P = B @ B.conj().T
        for x in _gl22_generators(ctx):
            A = tm.mat(x)
            if np.linalg.norm(P @ A - A @ P) > 1e-6 * tm.dim:
                raise ValueError("cluster projector fails to commute")
    # the swap element with unequal determinants exchanges the two summands
    sw = GL22Elem(GL2Elem(ctx.fq_gen, 0, 0, ctx.one),
                  GL2Elem(ctx.one, 0, 0, ctx.one))
    D = tm.mat(sw)
    P0 = parts[0] @ parts[0].conj().T
    P1 = parts[1] @ parts[1].conj().T
    if np.linalg.norm(D @ P0 @ np.linalg.inv(D) - P1) > 1e-6 * tm.dim:
        raise ValueError("outer element does not swap the constituents")
    # deterministic naming by probe traces
    all_elems = enumerate_gl22(ctx)
    width = 24
    t0 = t1 = ()
    while t0 == t1 and width <= 2 * len(all_elems):
        t0 = _probe_traces(tm, parts[0], all_elems[:width])
        t1 = _probe_traces(tm, parts[1], all_elems[:width])
        width *= 4
    if t0 == t1:
        raise ValueError("constituent characters coincide on the whole group")
    if t0 >= t1:
        plus, minus = parts[0], parts[1]
    else:
        plus, minus = parts[1], parts[0]
    return [ConstituentModel(tm, plus, "Plus"),
            ConstituentModel(tm, minus, "Minus")]


_DECOMP_CACHE: dict[tuple, list] = {}


def decompose_cached(ctx: FqCtx, k1: int, k2: int, seed: int = 0):
    key = (ctx.p, ctx.f, k1 % (ctx.q2 - 1), k2 % (ctx.q2 - 1), seed)
    if key not in _DECOMP_CACHE:
        _DECOMP_CACHE[key] = decompose(TensorModel(ctx, k1, k2), seed=seed)
    return _DECOMP_CACHE[key]


def model_for_sigma(ctx: FqCtx, sigma, seed: int = 0):
    """Oracle handle for a label: the tensor model for Full, or the matching
    constituent of the decomposition for Plus/Minus."""
    tm = TensorModel(ctx, sigma.k1, sigma.k2)
    if sigma.constituent == "Full":
        return tm
    if not (ctx.q % 2 == 1 and split_restriction(ctx, sigma.k1)
            and split_restriction(ctx, sigma.k2)):
        raise ValueError("label has no constituents")
    for c in decompose_cached(ctx, sigma.k1, sigma.k2, seed=seed):
        if c.tag == sigma.constituent:
            return c
    raise ValueError("constituent tag not found")


# -- twist operators ----------------------------------------------------------

def swap_operator(tm: TensorModel) -> np.ndarray:
    """Perfect shuffle exchanging the tensor factors (equal dims required)."""
    m, n = tm.m1.dim, tm.m2.dim
    if m != n:
        raise ValueError("swap needs equidimensional factors")
    S = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            S[j * m + i, i * n + j] = 1.0
    return S


def ww_operator(tm: TensorModel) -> np.ndarray:
    """The doubled Weyl element acting through both factors."""
    ctx = tm.ctx
    w = GL2Elem(0, ctx.one, ctx.neg(ctx.one), 0)
    return np.kron(tm.m1.mat(w), tm.m2.mat(w))


def u_intertwiner(tm: TensorModel, tol: float = _TOL) -> tuple[int, list[np.ndarray]]:
    """Solve T rep(x) = rep(u(x)) T over the det-matched generators.

    Returns (nullity, basis).  Nullity 0 raises NoIntertwiner; nullity 1
    returns the involutive normalization (T^2 = 1, sign a convention);
    nullity 2 signals a reducible self-twisted restriction and returns the
    raw basis."""
    ctx = tm.ctx
    n = tm.dim
    eye = np.eye(n)
    blocks = []
    for x in _gl22_generators(ctx):
        A = tm.mat(x)
        B = tm.mat(u_action(ctx, x))
        blocks.append(np.kron(A.T, eye) - np.kron(eye, B))
    null = _nullspace(np.vstack(blocks), tol)
    if not null:
        raise NoIntertwiner("no twist intertwiner: label is not self-twisted")
    mats = [v.reshape((n, n), order="F") for v in null]
    if len(mats) == 1:
        T = mats[0]
        c = np.trace(T @ T) / n
        if abs(c) < tol:
            raise NoIntertwiner("intertwiner squares to zero")
        if np.linalg.norm(T @ T - c * np.eye(n)) > 1e-6 * n:
            raise NoIntertwiner("intertwiner square is not scalar")
        T = T / np.sqrt(c)
        # fix the sign so the first sizable entry has positive real part
        flat = T.ravel()
        idx = int(np.argmax(np.abs(flat)))
        if flat[idx].real < 0 or (abs(flat[idx].real) < tol and flat[idx].imag < 0):
            T = -T
        return 1, [T]
    return len(mats), mats


def twisted_trace(tm, operator: np.ndarray, R: SubgroupR,
                  tol: float = 1e-6) -> int:
    """Trace of a twist operator compressed to the R-fixed subspace.

    The operator must normalize the averaged projector; otherwise the
    compression is meaningless and NotNormalizing is raised."""
    P = tm.fixed_projector(R)
    conj = operator @ P @ np.linalg.inv(operator)
    if np.linalg.norm(conj - P) > tol * max(1, P.shape[0]):
        raise NotNormalizing("operator does not normalize the fixed projector")
    return certify_integer(np.trace(operator @ P), tol=tol)
