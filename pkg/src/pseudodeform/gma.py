"""2x2 generalized matrix algebras with one-step reducibility.

E_n has diagonal entries in F_p[e]/(e^(n+1)) and off-diagonal entries one
truncation order lower; the product of the two off-diagonal coordinates
re-enters the diagonal multiplied by an extra factor of e.  This extra
shift is what distinguishes E_n from the full matrix algebra and it is
load-bearing: the Cayley-Hamilton identity and every homomorphism check
downstream depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ring import TruncatedPoly


def _cross(b: TruncatedPoly | None, c: TruncatedPoly | None, order: int, p: int) -> TruncatedPoly:
    """The off-diagonal product b*c pushed into the diagonal: e * (b c)."""
    if b is None or c is None:
        return TruncatedPoly.zero(p, order)
    return (b * c).shift(order)


@dataclass(frozen=True)
class GmaElement:
    """Element of E_n: diagonal order n, off-diagonal order n-1 (absent at n=0)."""

    a: TruncatedPoly
    b: TruncatedPoly | None
    c: TruncatedPoly | None
    d: TruncatedPoly

    def __post_init__(self):
        n = self.a.order
        if self.d.order != n or self.d.p != self.p:
            raise ValueError("diagonal entries must share p and order")
        if n == 0:
            if self.b is not None or self.c is not None:
                raise ValueError("order-0 elements have no off-diagonal part")
        else:
            for entry in (self.b, self.c):
                if entry is None or entry.order != n - 1 or entry.p != self.p:
                    raise ValueError("off-diagonal entries must have order n-1")

    @property
    def p(self) -> int:
        return self.a.p

    @property
    def order(self) -> int:
        return self.a.order

    @classmethod
    def from_coeffs(cls, p: int, order: int, a, b, c, d) -> "GmaElement":
        if order == 0:
            return cls(TruncatedPoly(p, a), None, None, TruncatedPoly(p, d))
        return cls(
            TruncatedPoly(p, a),
            TruncatedPoly(p, b),
            TruncatedPoly(p, c),
            TruncatedPoly(p, d),
        )

    @classmethod
    def identity(cls, p: int, order: int) -> "GmaElement":
        return cls.scalar(TruncatedPoly.one(p, order))

    @classmethod
    def scalar(cls, s: TruncatedPoly) -> "GmaElement":
        if s.order == 0:
            return cls(s, None, None, s)
        zero = TruncatedPoly.zero(s.p, s.order - 1)
        return cls(s, zero, zero, s)

    def _check(self, other: "GmaElement"):
        if self.p != other.p or self.order != other.order:
            raise ValueError("shape mismatch between GMA elements")

    def __add__(self, other: "GmaElement") -> "GmaElement":
        self._check(other)
        if self.order == 0:
            return GmaElement(self.a + other.a, None, None, self.d + other.d)
        return GmaElement(
            self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d
        )

    def __sub__(self, other: "GmaElement") -> "GmaElement":
        self._check(other)
        if self.order == 0:
            return GmaElement(self.a - other.a, None, None, self.d - other.d)
        return GmaElement(
            self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d
        )

    def __mul__(self, other: "GmaElement") -> "GmaElement":
        self._check(other)
        n, p = self.order, self.p
        a2 = self.a * other.a + _cross(self.b, other.c, n, p)
        d2 = self.d * other.d + _cross(self.c, other.b, n, p)
        if n == 0:
            return GmaElement(a2, None, None, d2)
        m = n - 1
        b2 = self.a.truncate(m) * other.b + self.b * other.d.truncate(m)
        c2 = self.c * other.a.truncate(m) + self.d.truncate(m) * other.c
        return GmaElement(a2, b2, c2, d2)

    def scale(self, s: TruncatedPoly) -> "GmaElement":
        """Multiply every coordinate by a ring scalar of order n."""
        if s.order != self.order or s.p != self.p:
            raise ValueError("scalar shape mismatch")
        if self.order == 0:
            return GmaElement(s * self.a, None, None, s * self.d)
        sm = s.truncate(self.order - 1)
        return GmaElement(s * self.a, sm * self.b, sm * self.c, s * self.d)

    def is_zero(self) -> bool:
        parts = [self.a, self.d] + ([self.b, self.c] if self.order > 0 else [])
        return all(x.is_zero() for x in parts)


@dataclass(frozen=True)
class PseudoRepValue:
    trace: TruncatedPoly
    det: TruncatedPoly


def psi(x: GmaElement) -> PseudoRepValue:
    """Trace/determinant functionals: tr = a+d, det = a d - e*(b c)."""
    det = x.a * x.d - _cross(x.b, x.c, x.order, x.p)
    return PseudoRepValue(trace=x.a + x.d, det=det)


def gma_invert(x: GmaElement) -> GmaElement:
    """Inverse via the adjugate; needs unit constant terms on the diagonal."""
    det = psi(x).det
    if not det.is_unit():
        raise ZeroDivisionError("determinant is not a unit")
    s = det.invert()
    if x.order == 0:
        adj = GmaElement(x.d, None, None, x.a)
    else:
        adj = GmaElement(x.d, -x.b, -x.c, x.a)
    return adj.scale(s)


def cayley_hamilton_check(x: GmaElement) -> bool:
    """x^2 - tr(x) x + det(x) = 0 holds for every honest E_n element."""
    val = psi(x)
    lhs = x * x - x.scale(val.trace) + GmaElement.scalar(val.det)
    return lhs.is_zero()


def us_product_check(
    rho_sigma: GmaElement, kappa_sigma: TruncatedPoly, rho_tau: GmaElement
) -> bool:
    """(rho(sigma) - kappa(sigma)) (rho(tau) - 1) = 0 in E_n."""
    one = GmaElement.identity(rho_tau.p, rho_tau.order)
    left = rho_sigma - GmaElement.scalar(kappa_sigma)
    return (left * (rho_tau - one)).is_zero()


def reduce_order(x: GmaElement, m: int) -> GmaElement:
    """Reduction map E_n ->> E_m: diagonal mod e^(m+1), off-diagonal mod e^m."""
    if m > x.order:
        raise ValueError(f"cannot reduce order {x.order} to {m}")
    if m == 0:
        return GmaElement(x.a.truncate(0), None, None, x.d.truncate(0))
    return GmaElement(
        x.a.truncate(m), x.b.truncate(m - 1), x.c.truncate(m - 1), x.d.truncate(m)
    )


@dataclass(frozen=True)
class TensorGma:
    """Image of E_n under the tensor reduction to order m.

    All four coordinates live in order m and the cross-diagonal product
    still picks up the factor e.  Off-diagonal truncation by one more
    step recovers E_m, factoring the plain reduction map.
    """

    a: TruncatedPoly
    b: TruncatedPoly
    c: TruncatedPoly
    d: TruncatedPoly

    @property
    def p(self):
        return self.a.p

    @property
    def order(self):
        return self.a.order

    def __mul__(self, other: "TensorGma") -> "TensorGma":
        n, p = self.order, self.p
        return TensorGma(
            self.a * other.a + (self.b * other.c).shift(n),
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.d * other.d + (self.c * other.b).shift(n),
        )

    def off_diagonal_reduce(self) -> GmaElement:
        m = self.order
        if m == 0:
            return GmaElement(self.a, None, None, self.d)
        return GmaElement(
            self.a, self.b.truncate(m - 1), self.c.truncate(m - 1), self.d
        )


def tensor_reduce(x: GmaElement, m: int) -> TensorGma:
    if m >= x.order:
        raise ValueError("tensor reduction requires m < n")
    return TensorGma(
        x.a.truncate(m), x.b.truncate(m), x.c.truncate(m), x.d.truncate(m)
    )


@dataclass(frozen=True)
class Mat2:
    """Plain 2x2 matrix over a truncated polynomial ring (no e-shift)."""

    a: TruncatedPoly
    b: TruncatedPoly
    c: TruncatedPoly
    d: TruncatedPoly

    def __mul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __eq__(self, other):
        return (
            self.a == other.a
            and self.b == other.b
            and self.c == other.c
            and self.d == other.d
        )


def ut_embed(x: GmaElement) -> Mat2:
    """Embed the upper-triangular subalgebra into M_2 via b |-> e b."""
    if x.order == 0:
        raise ValueError("no off-diagonal part at order 0")
    if not x.c.is_zero():
        raise ValueError("element is not upper-triangular")
    n = x.order
    return Mat2(x.a, x.b.shift(n), TruncatedPoly.zero(x.p, n), x.d)


def matrix_reduce(x: GmaElement) -> Mat2:
    """Algebra map E_n -> M_2(F_p[e]/(e^n)): (a,b;c,d) |-> (a~, b; e c~, d~)."""
    if x.order == 0:
        raise ValueError("matrix reduction needs order >= 1")
    m = x.order - 1
    return Mat2(
        x.a.truncate(m),
        x.b,
        x.c.shift(m),
        x.d.truncate(m),
    )
