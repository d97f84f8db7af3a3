"""The deformation pipeline on a group model.

Stages, in order: pin the context cocycles, build the first-order
diagonal correction and its invariant alpha, assemble and verify the
first-order representation, solve the four second-order coboundary
equations, normalize the determinant, normalize the local-at-p
coordinates (extracting beta), test the unramified-or-Steinberg products,
and assemble the final report.

Every stage either returns verified data or raises PipelineError with a
stable tag naming the violated model condition, so that fixture authors
can repair their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cohomology import (
    Cochain,
    NotACocycleError,
    cocycle_tables,
    coboundary_tables,
    restrict,
    solve_coboundary,
    solve_pinned_c1,
    values_on,
)
from .gma import GmaElement, TruncatedPoly, gma_invert, psi, us_product_check
from .model import GroupModel
from .ring import FpMatrix, WeightedScalar, inv_mod, solve_linear


class PipelineError(Exception):
    """A stage precondition failed; ``tag`` names the violated condition."""

    def __init__(self, stage: str, tag: str, message: str = ""):
        self.stage = stage
        self.tag = tag
        super().__init__(f"[{stage}] {tag}" + (f": {message}" if message else ""))


# ---------------------------------------------------------------------------
# context


@dataclass
class DeformationContext:
    """Pinned cocycles realized on a model.

    b1, b0 have weight 1; a0, ap weight 0; c1 weight -1.  gamma0/gamma1
    default to the model's designated inertia generators but may be
    overridden (re-pinning moves them).
    """

    model: GroupModel
    b1: Cochain
    b0: Cochain
    a0: Cochain
    ap: Cochain
    c1: Cochain
    x_c1: WeightedScalar
    gamma0: int
    gamma1: int

    @classmethod
    def from_model(cls, model: GroupModel) -> "DeformationContext":
        gamma0 = model.gamma("ell0")
        gamma1 = model.gamma("ell1")
        if model.pinned is not None:
            pin = model.pinned
            for key in ("b1", "b0", "a0", "ap"):
                if key not in pin:
                    raise PipelineError("context", "pinned-incomplete", key)
            b1 = Cochain(model, 1, 1, pin["b1"])
            b0 = Cochain(model, 1, 1, pin["b0"])
            a0 = Cochain(model, 1, 0, pin["a0"])
            ap = Cochain(model, 1, 0, pin["ap"])
        else:
            b1 = _solve_b1(model, gamma1)
            b0 = _solve_b0(model, gamma0, gamma1)
            a0 = _solve_a0(model, gamma0)
            ap = _solve_ap(model)
        c1, x_c1 = solve_pinned_c1(model)
        ctx = cls(
            model=model, b1=b1, b0=b0, a0=a0, ap=ap, c1=c1, x_c1=x_c1,
            gamma0=gamma0, gamma1=gamma1,
        )
        ctx.validate()
        return ctx

    def validate(self):
        m = self.model
        for name, f in (("b1", self.b1), ("b0", self.b0), ("a0", self.a0),
                        ("ap", self.ap), ("c1", self.c1)):
            if not f.d().is_zero():
                raise PipelineError("context", f"{name}-not-cocycle")
        if int(self.b1.values[self.gamma1]) != 1:
            raise PipelineError("context", "b1-normalization")
        if int(self.a0.values[self.gamma0]) != 1:
            raise PipelineError("context", "a0-normalization")
        if int(self.c1.values[self.gamma0]) != 1:
            raise PipelineError("context", "c1-normalization")
        if values_on(self.c1, m.local("ell1").view.indices).any():
            raise PipelineError("context", "c1-ell1-nonzero")
        # class-vanishing at ell0 is pointwise vanishing (omega is trivial there)
        if values_on(self.b1, m.local("ell0").view.indices).any():
            raise PipelineError("context", "b1-ell0-nonzero")
        dp = m.local("p")
        if not _in_table_span(m.flat1, values_on(self.b1, dp.view.indices), m.p):
            raise PipelineError("context", "b1-not-flat-at-p")
        # x_c1 is the antiderivative of c1 on D_p
        tw = dp.view.omega_pow(-1)
        dx = (tw - 1) * self.x_c1.value % m.p
        if not np.array_equal(values_on(self.c1, dp.view.indices), dx):
            raise PipelineError("context", "x-c1-mismatch")

    def c1_as_weight(self, weight: int) -> Cochain:
        """The c1 table re-tagged by a twist; only used at ell0 where the
        character is trivial, so the table itself is unchanged."""
        return Cochain(self.model, 1, weight, self.c1.values)


def _solve_b1(model, gamma1) -> Cochain:
    p = model.p
    z = cocycle_tables(model, 1)
    ell0 = model.local("ell0").view.indices
    dp = model.local("p").view.indices
    rows, rhs = [], []
    for g in ell0:
        rows.append(np.concatenate([z[:, g], np.zeros(len(model.flat1))]))
        rhs.append(0)
    for i, g in enumerate(dp):
        rows.append(
            np.concatenate([z[:, g], [-t[i] for t in model.flat1]])
        )
        rhs.append(0)
    rows.append(np.concatenate([z[:, gamma1], np.zeros(len(model.flat1))]))
    rhs.append(1)
    sol = solve_linear(FpMatrix(p, np.array(rows) % p), np.array(rhs))
    if sol is None:
        raise PipelineError("context", "b1-unsolvable")
    k = z.shape[0]
    table = (sol.solution[:k] @ z) % p
    # freedom beyond coboundaries would leave the class ambiguous
    cobs = coboundary_tables(model, 1)
    for kvec in sol.kernel:
        t = (kvec[:k] @ z) % p
        if t.any() and not _in_table_span(cobs, t, p):
            raise PipelineError("context", "b1-ambiguous")
    return Cochain(model, 1, 1, table)


def _solve_b0(model, gamma0, gamma1) -> Cochain:
    p = model.p
    z = cocycle_tables(model, 1)
    i_ell1 = model.local("ell1").inertia
    dp = model.local("p").view.indices
    rows, rhs = [], []
    for g in i_ell1:
        rows.append(np.concatenate([z[:, g], np.zeros(len(model.flat1))]))
        rhs.append(0)
    for i, g in enumerate(dp):
        rows.append(np.concatenate([z[:, g], [-t[i] for t in model.flat1]]))
        rhs.append(0)
    rows.append(np.concatenate([z[:, gamma0], np.zeros(len(model.flat1))]))
    rhs.append(1)
    sol = solve_linear(FpMatrix(p, np.array(rows) % p), np.array(rhs))
    if sol is None:
        raise PipelineError("context", "b0-unsolvable")
    k = z.shape[0]
    cobs = coboundary_tables(model, 1)
    for kvec in sol.kernel:
        t = (kvec[:k] @ z) % p
        if t.any() and not _in_table_span(cobs, t, p):
            raise PipelineError("context", "b0-ambiguous")
    return Cochain(model, 1, 1, (sol.solution[:k] @ z) % p)


def _solve_a0(model, gamma0) -> Cochain:
    p = model.p
    z = cocycle_tables(model, 0)
    rows, rhs = [], []
    for g in model.local("p").inertia:
        rows.append(z[:, g])
        rhs.append(0)
    for g in model.local("ell1").inertia:
        rows.append(z[:, g])
        rhs.append(0)
    rows.append(z[:, gamma0])
    rhs.append(1)
    sol = solve_linear(FpMatrix(p, np.array(rows) % p), np.array(rhs))
    if sol is None:
        raise PipelineError("context", "a0-unsolvable")
    if sol.kernel_rank and (sol.kernel @ z % p).any():
        raise PipelineError("context", "a0-ambiguous")
    return Cochain(model, 1, 0, (sol.solution @ z) % p)


def _solve_ap(model) -> Cochain:
    """A weight-0 cocycle unramified at ell0 and ell1, ramified at p when
    the model supports one; the zero cochain otherwise (degenerate models)."""
    p = model.p
    z = cocycle_tables(model, 0)
    if z.shape[0] == 0:
        return Cochain.zero(model, 1, 0)
    rows = [z[:, g] for g in model.local("ell0").inertia]
    rows += [z[:, g] for g in model.local("ell1").inertia]
    from .ring import kernel_basis

    ker = kernel_basis(np.array(rows) % p if rows else np.zeros((0, z.shape[0]), dtype=np.int64), p)
    i_p = model.local("p").inertia
    for kvec in ker:
        table = (kvec @ z) % p
        vals = table[i_p] if len(i_p) else np.zeros(0, dtype=np.int64)
        nz = np.nonzero(vals)[0]
        if nz.size:
            scale = inv_mod(int(vals[nz[0]]), p)
            return Cochain(model, 1, 0, (table * scale) % p)
    return Cochain.zero(model, 1, 0)


def _in_table_span(tables, target, p) -> bool:
    target = np.asarray(target, dtype=np.int64) % p
    if not len(tables):
        return not target.any()
    mat = FpMatrix(p, np.stack(tables, axis=1))
    return solve_linear(mat, target) is not None


# ---------------------------------------------------------------------------
# first order


@dataclass
class FirstOrder:
    ctx: DeformationContext
    a1: Cochain
    d1: Cochain
    alpha: WeightedScalar
    irreducible_witness: int | None = None

    @property
    def model(self):
        return self.ctx.model

    def rho1(self, g: int) -> GmaElement:
        m = self.model
        p = m.p
        w = int(m.omega[g])
        return GmaElement.from_coeffs(
            p, 1,
            (w, w * int(self.a1.values[g])),
            (int(self.ctx.b1.values[g]),),
            (w * int(self.ctx.c1.values[g]),),
            (1, int(self.d1.values[g])),
        )

    def a1_at_ell1(self) -> WeightedScalar:
        frob = self.model.local("ell1").frobenius
        return WeightedScalar(int(self.a1.values[frob]), 0, self.model.p)


def build_a1(ctx: DeformationContext) -> tuple[Cochain, WeightedScalar]:
    """The unique cochain with -d(a1) = b1 cup c1 that is unramified-flat at
    p after the x_c1 correction and restricts to the c1-line at ell0."""
    model = ctx.model
    p = model.p
    _check_rk2_basis(ctx)
    cup = ctx.b1.cup(ctx.c1)
    g = solve_coboundary(Cochain(model, 2, 0, -cup.values))
    if g is None:
        raise PipelineError("build_a1", "cup-nonzero",
                            "b1 cup c1 is not a coboundary")
    z = cocycle_tables(model, 0)
    k = z.shape[0]
    nflat = len(model.flat0)
    dp = model.local("p")
    ell0 = model.local("ell0").view.indices
    correction = ctx.b1.cup_scalar(ctx.x_c1)  # weight 0
    base = (g.values - correction.values) % p
    rows, rhs = [], []
    # inertia-at-p rows: (g - sum z - correction)|I_p in span(flat0|I_p)
    for gg in dp.inertia:
        i_local = dp.view.index_of[int(gg)]
        row = np.concatenate(
            [z[:, gg], [t[i_local] for t in model.flat0], [0]]
        )
        rows.append(row)
        rhs.append(int(base[gg]))
    # ell0 rows: (g - sum z)|ell0 = alpha * c1|ell0
    for gg in ell0:
        row = np.concatenate(
            [z[:, gg], np.zeros(nflat), [int(ctx.c1.values[gg])]]
        )
        rows.append(row)
        rhs.append(int(g.values[gg]))
    mat = FpMatrix(p, np.array(rows, dtype=np.int64) % p)
    sol = solve_linear(mat, np.array(rhs, dtype=np.int64))
    if sol is None:
        raise PipelineError("build_a1", "a1-p-correction",
                            "no global correction meets the p and ell0 conditions")
    if sol.kernel_rank and sol.kernel[:, :k].any():
        raise PipelineError("build_a1", "a1-not-unique")
    lam = sol.solution[:k]
    alpha = WeightedScalar(int(sol.solution[k + nflat]), 1, p)
    a1_table = (g.values - (lam @ z if k else 0)) % p
    a1 = Cochain(model, 1, 0, a1_table)
    # post-conditions
    if not np.array_equal((-a1.d().values) % p, cup.values):
        raise PipelineError("build_a1", "a1-differential")
    if not np.array_equal(
        values_on(a1, ell0), alpha.value * values_on(ctx.c1, ell0) % p
    ):
        raise PipelineError("build_a1", "a1-ell0-line")
    return a1, alpha


def _check_rk2_basis(ctx: DeformationContext):
    model = ctx.model
    view = model.local("ell0").view
    z = cocycle_tables(view, 0)
    h_dim = z.shape[0]  # no weight-0 coboundaries: dim H^1 = dim Z^1
    a0_loc = values_on(ctx.a0, view.indices)
    c1_loc = values_on(ctx.c1, view.indices)
    stack = np.ascontiguousarray(np.stack([a0_loc, c1_loc]) % model.p)
    from .ring import rref_in_place

    pivots = rref_in_place(stack, model.p)
    if h_dim != 2 or len(pivots) != 2:
        raise PipelineError(
            "build_a1", "rk2-basis",
            "a0 and c1 do not form a basis of the local cohomology at ell0",
        )


def build_rho1(ctx: DeformationContext, a1: Cochain, alpha: WeightedScalar) -> FirstOrder:
    model = ctx.model
    p = model.p
    b1v, c1v, a1v = ctx.b1.values, ctx.c1.values, a1.values
    d1 = ctx.b1.pointwise(ctx.c1) - a1
    d1v = d1.values
    om = model.omega
    om_inv = model.omega_pow(-1)
    mul = model.mul
    n = model.n
    chunk = max(1, (1 << 20) // max(n, 1))
    for start in range(0, n, chunk):
        sl = slice(start, min(n, start + chunk))
        rows = mul[sl]
        ok = (
            np.array_equal(
                a1v[rows],
                (a1v[sl, None] + a1v[None, :] + om_inv[sl, None] * b1v[sl, None] * c1v[None, :]) % p,
            )
            and np.array_equal(b1v[rows], (b1v[sl, None] + om[sl, None] * b1v[None, :]) % p)
            and np.array_equal(c1v[rows], (c1v[sl, None] + om_inv[sl, None] * c1v[None, :]) % p)
            and np.array_equal(
                d1v[rows],
                (d1v[sl, None] + d1v[None, :] + om[sl, None] * c1v[sl, None] * b1v[None, :]) % p,
            )
        )
        if not ok:
            raise PipelineError("build_rho1", "not-multiplicative")
    # trace formula: omega*a1 + d1 = b1*c1 + (omega-1)*a1 pointwise
    if not np.array_equal(
        (om * a1v + d1v) % p, (b1v * c1v + (om - 1) * a1v) % p
    ):
        raise PipelineError("build_rho1", "trace-formula")
    fo = FirstOrder(ctx=ctx, a1=a1, d1=d1, alpha=alpha)
    # object-level spot check of multiplicativity
    rng = np.random.default_rng(7)
    for _ in range(64):
        x, y = int(rng.integers(n)), int(rng.integers(n))
        if not (fo.rho1(x) * fo.rho1(y) - fo.rho1(int(mul[x, y]))).is_zero():
            raise PipelineError("build_rho1", "not-multiplicative")
    _verify_us_first_order(fo, "ell0")
    _verify_us_first_order(fo, "ell1")
    _verify_rho1_flat(fo)
    wit = np.nonzero((om % p == 1) & (b1v * c1v % p != 0))[0]
    fo.irreducible_witness = int(wit[0]) if wit.size else None
    return fo


def _local_pairs(model, tag):
    loc = model.local(tag)
    dec = [int(g) for g in loc.view.indices]
    ine = [int(g) for g in loc.inertia]
    seen = set()
    for s in dec:
        for t in ine:
            seen.add((s, t))
    for s in ine:
        for t in dec:
            seen.add((s, t))
    return sorted(seen)


def _verify_us_first_order(fo: FirstOrder, tag: str):
    model = fo.model
    p = model.p
    for s, t in _local_pairs(model, tag):
        kappa = TruncatedPoly.constant(int(model.omega[s]), p, 1)
        if not us_product_check(fo.rho1(s), kappa, fo.rho1(t)):
            raise PipelineError("build_rho1", f"us-{tag}", f"pair ({s},{t})")


def _verify_rho1_flat(fo: FirstOrder):
    """Conjugating by (1,0;-x_c1,1) must upper-triangularize rho1 on D_p with
    a flat b-column and an unramified diagonal correction."""
    ctx = fo.ctx
    model = fo.model
    p = model.p
    dp = model.local("p")
    m0 = GmaElement.from_coeffs(p, 1, (1, 0), (0,), (-ctx.x_c1.value,), (1, 0))
    m0_inv = gma_invert(m0)
    avals = []
    for g in dp.view.indices:
        conj = m0_inv * fo.rho1(int(g)) * m0
        if not conj.c.is_zero():
            raise PipelineError("build_rho1", "p-not-upper-triangular")
        w = int(model.omega[g])
        avals.append(conj.a.coeffs[1] * inv_mod(w, p) % p)
    b_loc = values_on(ctx.b1, dp.view.indices)
    if not _in_table_span(model.flat1, b_loc, p):
        raise PipelineError("build_rho1", "p-b-not-flat")
    expected = (ctx.b1.cup_scalar(ctx.x_c1)).values
    a_corr = (fo.a1.values - expected) % p
    if not np.array_equal(
        np.array(avals, dtype=np.int64), a_corr[dp.view.indices]
    ):
        raise PipelineError("build_rho1", "p-conjugation-mismatch")
    i_local = dp.inertia_local
    flat0_restr = [t[i_local] for t in model.flat0]
    if not _in_table_span(flat0_restr, a_corr[dp.inertia], p):
        raise PipelineError("build_rho1", "p-a-not-unramified")


# ---------------------------------------------------------------------------
# second order


@dataclass
class SecondOrder:
    a2: Cochain
    d2: Cochain
    b2: Cochain
    c2: Cochain
    fo: FirstOrder
    flags: dict = field(default_factory=dict)

    def replace(self, **kw) -> "SecondOrder":
        data = dict(a2=self.a2, d2=self.d2, b2=self.b2, c2=self.c2,
                    fo=self.fo, flags=dict(self.flags))
        data.update(kw)
        return SecondOrder(**data)

    def rho2(self, g: int) -> GmaElement:
        fo = self.fo
        m = fo.model
        p = m.p
        w = int(m.omega[g])
        return GmaElement.from_coeffs(
            p, 2,
            (w, w * int(fo.a1.values[g]), w * int(self.a2.values[g])),
            (int(fo.ctx.b1.values[g]), int(self.b2.values[g])),
            (w * int(fo.ctx.c1.values[g]), w * int(self.c2.values[g])),
            (1, int(fo.d1.values[g]), int(self.d2.values[g])),
        )


@dataclass
class TorsorElement:
    """(a, d, b, c): four cocycles; b restricted to ell0 must lie on the
    c1-line for the action to stay inside the solution set."""

    a: Cochain
    d: Cochain
    b: Cochain
    c: Cochain


def equations_hold(s: SecondOrder) -> bool:
    fo = s.fo
    ctx = fo.ctx
    b1, c1, a1, d1 = ctx.b1, ctx.c1, fo.a1, fo.d1
    eq_i = (-s.a2.d().values - (a1.cup(a1) + b1.cup(s.c2) + s.b2.cup(c1)).values) % ctx.model.p
    eq_ii = (-s.b2.d().values - (a1.cup(b1) + b1.cup(d1)).values) % ctx.model.p
    eq_iii = (-s.c2.d().values - (c1.cup(a1) + d1.cup(c1)).values) % ctx.model.p
    eq_iv = (-s.d2.d().values - (d1.cup(d1) + c1.cup(s.b2) + s.c2.cup(b1)).values) % ctx.model.p
    return not (eq_i.any() or eq_ii.any() or eq_iii.any() or eq_iv.any())


def z1_b_basis(fo: FirstOrder) -> list[Cochain]:
    """Weight-1 cocycles whose ell0 restriction is a pointwise multiple of
    the (twist of) c1 there; the b-component group of the torsor."""
    model = fo.model
    p = model.p
    z = cocycle_tables(model, 1)
    k = z.shape[0]
    ell0 = model.local("ell0").view.indices
    c1_loc = values_on(fo.ctx.c1, ell0)
    rows = [np.concatenate([z[:, g], [-int(c1_loc[i])]]) for i, g in enumerate(ell0)]
    from .ring import kernel_basis, rref_in_place

    ker = kernel_basis(np.array(rows, dtype=np.int64) % p, p)
    tables = (ker[:, :k] @ z) % p if ker.size else np.zeros((0, model.n), dtype=np.int64)
    tables = np.ascontiguousarray(tables)
    rref_in_place(tables, p)
    tables = tables[tables.any(axis=1)]
    return [Cochain(model, 1, 1, t) for t in tables]


def torsor_basis(fo: FirstOrder) -> list[TorsorElement]:
    model = fo.model
    zero = lambda w: Cochain.zero(model, 1, w)
    out = []
    z0 = [Cochain(model, 1, 0, t) for t in cocycle_tables(model, 0)]
    for z in z0:
        out.append(TorsorElement(a=z, d=zero(0), b=zero(1), c=zero(-1)))
    for z in z0:
        out.append(TorsorElement(a=zero(0), d=z, b=zero(1), c=zero(-1)))
    for z in z1_b_basis(fo):
        out.append(TorsorElement(a=zero(0), d=zero(0), b=z, c=zero(-1)))
    for t in cocycle_tables(model, -1):
        out.append(TorsorElement(a=zero(0), d=zero(0), b=zero(1),
                                 c=Cochain(model, 1, -1, t)))
    return out


def solve_pi2(fo: FirstOrder):
    """Solve the four second-order equations.

    Returns None when the first-order obstruction at ell1 is non-zero;
    otherwise a (SecondOrder, torsor basis) pair.  Unsolvable equations in
    spite of a vanishing obstruction mean the model violates the global
    duality assumptions and raise with the failing equation tag.
    """
    ctx = fo.ctx
    model = fo.model
    p = model.p
    ell1 = model.local("ell1")
    a1_inertia = values_on(fo.a1, ell1.inertia)
    if a1_inertia.any():
        raise PipelineError("solve_pi2", "a1-ramified-at-ell1")
    if fo.a1_at_ell1().value != 0:
        return None
    b1, c1, a1, d1 = ctx.b1, ctx.c1, fo.a1, fo.d1
    b2 = solve_coboundary(Cochain(model, 2, 1, -(a1.cup(b1) + b1.cup(d1)).values))
    if b2 is None:
        raise PipelineError("solve_pi2", "eq-ii")
    c2 = solve_coboundary(Cochain(model, 2, -1, -(c1.cup(a1) + d1.cup(c1)).values))
    if c2 is None:
        raise PipelineError("solve_pi2", "eq-iii")
    base = -(a1.cup(a1) + b1.cup(c2) + b2.cup(c1)).values % p
    shift = ctx.b0.cup(c1).values
    a2 = None
    for gamma in range(p):
        cand = solve_coboundary(Cochain(model, 2, 0, (base + gamma * shift) % p))
        if cand is not None:
            a2 = cand
            b2 = b2 - ctx.b0.scale(gamma)
            break
    if a2 is None:
        raise PipelineError("solve_pi2", "eq-i")
    d2 = solve_coboundary(Cochain(model, 2, 0, -(d1.cup(d1) + c1.cup(b2) + c2.cup(b1)).values))
    if d2 is None:
        raise PipelineError("solve_pi2", "eq-iv")
    s = SecondOrder(a2=a2, d2=d2, b2=b2, c2=c2, fo=fo)
    if not equations_hold(s):
        raise PipelineError("solve_pi2", "verification")
    return s, torsor_basis(fo)


def _sigma(fo: FirstOrder, b: Cochain, c: Cochain) -> Cochain:
    """The fixed linear section used by the torsor action:
    -d(sigma) = b cup c1 + b1 cup c."""
    ctx = fo.ctx
    y = -(b.cup(ctx.c1) + ctx.b1.cup(c)).values
    out = solve_coboundary(Cochain(fo.model, 2, 0, y))
    if out is None:
        raise PipelineError("torsor", "sigma-unsolvable")
    return out


def torsor_act(z: TorsorElement, s: SecondOrder) -> SecondOrder:
    fo = s.fo
    model = fo.model
    if not z.b.is_zero():
        ell0 = model.local("ell0").view.indices
        b_loc = values_on(z.b, ell0)
        c_loc = values_on(fo.ctx.c1, ell0)
        if not _in_table_span([c_loc], b_loc, model.p):
            raise PipelineError("torsor", "b-not-in-z1b")
    sig = _sigma(fo, z.b, z.c)
    a2 = s.a2 + sig + z.a
    d2 = s.d2 - sig + z.b.pointwise(fo.ctx.c1) + fo.ctx.b1.pointwise(z.c) + z.d
    return s.replace(a2=a2, d2=d2, b2=s.b2 + z.b, c2=s.c2 + z.c)


# ---------------------------------------------------------------------------
# normalization


def normalize_det(s: SecondOrder, fo: FirstOrder) -> SecondOrder:
    """Pin the determinant to the character exactly by rewriting d2."""
    ctx = fo.ctx
    p = fo.model.p
    d2 = ctx.b1.pointwise(s.c2) + s.b2.pointwise(ctx.c1) \
        - fo.a1.pointwise(fo.d1) - s.a2
    out = s.replace(d2=d2)
    eps1 = (fo.a1.values + fo.d1.values - ctx.b1.values * ctx.c1.values) % p
    eps2 = (out.a2.values + out.d2.values + fo.a1.values * fo.d1.values
            - ctx.b1.values * out.c2.values - out.b2.values * ctx.c1.values) % p
    if eps1.any() or eps2.any():
        raise PipelineError("normalize_det", "det-not-constant")
    if not equations_hold(out):
        raise PipelineError("normalize_det", "verification")
    out.flags["det_normalized"] = True
    return out


def _conjugated_c2_on_p(s: SecondOrder) -> np.ndarray:
    """epsilon-part of the c-coordinate of M0^-1 rho2 M0 on D_p."""
    fo = s.fo
    model = fo.model
    p = model.p
    x = fo.ctx.x_c1.value
    m0 = GmaElement.from_coeffs(p, 2, (1, 0, 0), (0, 0), (-x, 0), (1, 0, 0))
    m0_inv = gma_invert(m0)
    dp = model.local("p")
    out = np.zeros(dp.view.n, dtype=np.int64)
    for i, g in enumerate(dp.view.indices):
        conj = m0_inv * s.rho2(int(g)) * m0
        w_inv = inv_mod(int(model.omega[g]), p)
        if conj.c.coeffs[0] % p:
            raise PipelineError("normalize_flat", "c1-not-killed-at-p")
        out[i] = conj.c.coeffs[1] * w_inv % p
    return out


def normalize_flat(s: SecondOrder, fo: FirstOrder, ctx: DeformationContext):
    """Impose the local conditions at p, then read off beta at ell0.

    Step 1 kills the conjugated c-coordinate on D_p with a global
    weight(-1) cocycle; steps 2/3 move the b-coordinate into the declared
    flat subspace on inertia; step 4 makes the diagonal character
    unramified (its obstruction is the coboundary of half the square of
    the first-order diagonal).  beta is the position of b2 on the c1-line
    at ell0 and is unchanged by the remaining torsor freedom.
    """
    if not s.flags.get("det_normalized"):
        raise PipelineError("normalize_flat", "not-det-normalized")
    model = fo.model
    p = model.p
    dp = model.local("p")
    zero = lambda w: Cochain.zero(model, 1, w)

    # step 1: c-coordinate
    c2p = _conjugated_c2_on_p(s)
    local = Cochain(dp.view, 1, -1, c2p)
    if not local.d().is_zero():
        raise PipelineError("normalize_flat", "c2-not-local-cocycle")
    z = cocycle_tables(model, -1)
    rows = np.stack([z[:, g] for g in dp.view.indices]) % p if z.size else np.zeros((dp.view.n, 0), dtype=np.int64)
    sol = solve_linear(FpMatrix(p, rows), (-c2p) % p)
    if sol is None:
        raise PipelineError("normalize_flat", "hasse-surjectivity",
                            "local c-class not hit by global cocycles")
    zmove = Cochain(model, 1, -1, (sol.solution @ z) % p if z.size else np.zeros(model.n, dtype=np.int64))
    s = torsor_act(TorsorElement(a=zero(0), d=zero(0), b=zero(1), c=zmove), s)
    if _conjugated_c2_on_p(s).any():
        raise PipelineError("normalize_flat", "step1-verification")

    # steps 2/3: b-coordinate into the declared flat subspace on inertia
    zb = z1_b_basis(fo)
    i_local = dp.inertia_local
    i_parent = dp.inertia
    flat_restr = [t[i_local] for t in model.flat1]
    b2_in = values_on(s.b2, i_parent)
    cols = [values_on(b, i_parent) for b in zb] + [(-t) % p for t in flat_restr]
    if cols:
        mat = FpMatrix(p, np.stack(cols, axis=1))
        solb = solve_linear(mat, (-b2_in) % p)
    else:
        solb = None if b2_in.any() else type("S", (), {"solution": np.zeros(0, dtype=np.int64)})()
    if solb is None:
        raise PipelineError("normalize_flat", "kummer-generation",
                            "b-coordinate cannot be made flat on inertia")
    bmove = zero(1)
    for coeff, basis in zip(solb.solution[: len(zb)], zb):
        bmove = bmove + basis.scale(int(coeff))
    s = torsor_act(TorsorElement(a=zero(0), d=zero(0), b=bmove, c=zero(-1)), s)
    if not _in_table_span(flat_restr, values_on(s.b2, i_parent), p):
        raise PipelineError("normalize_flat", "step23-verification")

    # step 4: unramified diagonal character
    a1pp = fo.a1 - ctx.b1.cup_scalar(ctx.x_c1)
    a2pp = (s.a2.values + s.b2.cup_scalar(ctx.x_c1).values) % p
    half = inv_mod(2, p)
    a_prime = (half * a1pp.values**2 - a2pp) % p
    loc = Cochain(dp.view, 1, 0, a_prime[dp.view.indices])
    if not loc.d().is_zero():
        raise PipelineError("normalize_flat", "chi2-square-correction")
    z0 = cocycle_tables(model, 0)
    rows = np.stack([z0[:, g] for g in i_parent]) % p if (z0.size and len(i_parent)) else np.zeros((len(i_parent), 0), dtype=np.int64)
    sol0 = solve_linear(FpMatrix(p, rows), a_prime[i_parent] % p)
    if sol0 is None:
        raise PipelineError("normalize_flat", "ap-generation",
                            "diagonal character cannot be unramified")
    amove = Cochain(model, 1, 0, (sol0.solution @ z0) % p if z0.size else np.zeros(model.n, dtype=np.int64))
    s = torsor_act(TorsorElement(a=amove, d=-amove, b=zero(1), c=zero(-1)), s)
    a2pp_new = (s.a2.values + s.b2.cup_scalar(ctx.x_c1).values) % p
    if a2pp_new[i_parent].any() or a1pp.values[i_parent].any():
        raise PipelineError("normalize_flat", "step4-verification")

    # beta
    ell0 = model.local("ell0").view.indices
    b2_loc = values_on(s.b2, ell0)
    local_b2 = Cochain(model.local("ell0").view, 1, 1, b2_loc)
    if not local_b2.d().is_zero():
        raise PipelineError("normalize_flat", "b2-not-cocycle-at-ell0")
    c1_loc = values_on(ctx.c1, ell0)
    beta_val = int(s.b2.values[ctx.gamma0])
    if not np.array_equal(b2_loc, beta_val * c1_loc % p):
        raise PipelineError("normalize_flat", "b2-line",
                            "b2 at ell0 is not on the c1-line")
    s.flags["flat_normalized"] = True
    return s, WeightedScalar(beta_val, 2, p)


# ---------------------------------------------------------------------------
# unramified-or-Steinberg check and the criterion


def _flat_ok(s: SecondOrder, fo: FirstOrder, ctx: DeformationContext) -> bool:
    model = fo.model
    p = model.p
    dp = model.local("p")
    try:
        if _conjugated_c2_on_p(s).any():
            return False
    except PipelineError:
        return False
    i_local = dp.inertia_local
    flat_restr = [t[i_local] for t in model.flat1]
    if not _in_table_span(flat_restr, values_on(s.b2, dp.inertia), p):
        return False
    if not _in_table_span(model.flat1, values_on(ctx.b1, dp.view.indices), p):
        return False
    a1pp = fo.a1 - ctx.b1.cup_scalar(ctx.x_c1)
    a2pp = (s.a2.values + s.b2.cup_scalar(ctx.x_c1).values) % p
    return not (a1pp.values[dp.inertia].any() or a2pp[dp.inertia].any())


def check_usn(s: SecondOrder, fo: FirstOrder, ctx: DeformationContext) -> dict:
    """Evaluate the local product conditions on the second-order
    representation.  Returns booleans plus a witness pair per failure."""
    model = fo.model
    p = model.p
    result = {"us_ell0": True, "us_ell1": True, "flat_ok": _flat_ok(s, fo, ctx)}
    witnesses = {}

    def run(tag, ss):
        ok = True
        for x, t in _local_pairs(model, tag):
            kappa = TruncatedPoly.constant(int(model.omega[x]), p, 2)
            if not us_product_check(ss.rho2(x), kappa, ss.rho2(t)):
                ok = False
                witnesses[tag] = (x, t)
                break
        return ok

    result["us_ell0"] = run("ell0", s)
    # at ell1 the c-coordinate is first straightened by a coboundary
    ell1 = model.local("ell1")
    c2_loc = values_on(s.c2, ell1.view.indices)
    tw = ell1.view.omega_pow(-1)
    sol = solve_linear(FpMatrix(p, ((tw - 1) % p).reshape(-1, 1)), c2_loc)
    s1 = s
    if sol is not None:
        mu = int(sol.solution[0])
        shift = Cochain(model, 1, -1, (model.omega_pow(-1) - 1) * (-mu) % p)
        s1 = torsor_act(
            TorsorElement(
                a=Cochain.zero(model, 1, 0), d=Cochain.zero(model, 1, 0),
                b=Cochain.zero(model, 1, 1), c=shift,
            ),
            s,
        )
    result["us_ell1"] = run("ell1", s1)
    result["witnesses"] = witnesses
    return result


@dataclass
class CriterionReport:
    a1_at_ell1: WeightedScalar
    alpha: WeightedScalar
    beta: WeightedScalar | None
    alpha_sq_plus_beta: WeightedScalar | None
    dim_exceeds_three: bool
    stage_log: dict

    def to_dict(self) -> dict:
        def ws(x):
            return None if x is None else {"value": x.value, "weight": x.weight}

        return {
            "a1_at_ell1": self.a1_at_ell1.value,
            "alpha": ws(self.alpha),
            "beta": ws(self.beta),
            "alpha_sq_plus_beta": ws(self.alpha_sq_plus_beta),
            "dim_exceeds_three": self.dim_exceeds_three,
            "stage_log": self.stage_log,
        }


def main_criterion(ctx: DeformationContext) -> CriterionReport:
    """Run the full pipeline and decide the dimension criterion."""
    log = {}
    a1, alpha = build_a1(ctx)
    log["build_a1"] = True
    fo = build_rho1(ctx, a1, alpha)
    log["build_rho1"] = True
    a1_ell1 = fo.a1_at_ell1()
    solved = solve_pi2(fo)
    if solved is None:
        log["solve_pi2"] = "empty"
        return CriterionReport(
            a1_at_ell1=a1_ell1, alpha=alpha, beta=None,
            alpha_sq_plus_beta=None, dim_exceeds_three=False, stage_log=log,
        )
    s, _basis = solved
    log["solve_pi2"] = True
    s = normalize_det(s, fo)
    log["normalize_det"] = True
    s, beta = normalize_flat(s, fo, ctx)
    log["normalize_flat"] = True
    us = check_usn(s, fo, ctx)
    log["check_usn"] = {k: us[k] for k in ("us_ell0", "us_ell1", "flat_ok")}
    combo = alpha * alpha + beta
    verdict = (a1_ell1.value == 0) and combo.is_zero()
    return CriterionReport(
        a1_at_ell1=a1_ell1, alpha=alpha, beta=beta,
        alpha_sq_plus_beta=combo, dim_exceeds_three=verdict, stage_log=log,
    )
