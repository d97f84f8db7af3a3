"""Exact arithmetic over F_p and the truncated polynomial rings F_p[e]/(e^(n+1)).

All scalars are plain ints reduced to [0, p); matrices are int64 numpy
arrays.  Row reduction is delegated to a compiled kernel when available
(set PSEUDODEFORM_PURE_PY=1 to force the pure-Python backend).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

if os.environ.get("PSEUDODEFORM_PURE_PY"):
    from . import _fpkernel_py as _kernel
else:
    try:
        from . import _fpkernel as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _fpkernel_py as _kernel

BACKEND = _kernel.BACKEND

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (valid far beyond any modulus used here)."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def check_odd_prime(p: int) -> int:
    if p < 3 or not is_prime(p):
        raise ValueError(f"modulus must be an odd prime, got {p}")
    return p


def inv_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 is not invertible mod {p}")
    return pow(a, p - 2, p)


# ---------------------------------------------------------------------------
# dense linear algebra


@dataclass(frozen=True)
class FpMatrix:
    """Rectangular matrix over F_p. Entries are held reduced mod p."""

    p: int
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int64) % self.p
        object.__setattr__(self, "entries", np.ascontiguousarray(arr))
        if arr.ndim != 2:
            raise ValueError("matrix must be two-dimensional")

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class LinearSolution:
    """Particular solution (free variables zeroed) plus kernel basis rows."""

    solution: np.ndarray
    kernel: np.ndarray  # shape (k, ncols), reduced echelon rows

    @property
    def kernel_rank(self) -> int:
        return self.kernel.shape[0]


def rref_in_place(m: np.ndarray, p: int) -> list[int]:
    """Reduced row echelon form of an int64 array, mod p. Returns pivot cols."""
    if m.size == 0:
        return []
    return list(_kernel.rref(m, p))


def kernel_basis(a: np.ndarray, p: int) -> np.ndarray:
    """Reduced-echelon basis of the right kernel of ``a`` over F_p."""
    a = np.ascontiguousarray(np.asarray(a, dtype=np.int64) % p)
    n = a.shape[1]
    work = a.copy()
    pivots = rref_in_place(work, p)
    free = [j for j in range(n) if j not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, j in enumerate(free):
        basis[k, j] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-work[r, j]) % p
    return basis


def solve_linear(a: FpMatrix, y) -> LinearSolution | None:
    """Solve a x = y over F_p; None when the system is inconsistent.

    Deterministic: row reduction picks the smallest pivot column first and
    the particular solution has every free variable equal to zero.  Kernel
    rows come out in reduced echelon form.
    """
    p = a.p
    y = np.asarray(y, dtype=np.int64) % p
    if y.shape != (a.rows,):
        raise ValueError(f"rhs length {y.shape} does not match {a.rows} rows")
    n = a.cols
    aug = np.concatenate([a.entries, y.reshape(-1, 1)], axis=1)
    aug = np.ascontiguousarray(aug)
    pivots = rref_in_place(aug, p)
    if n in pivots:  # pivot in the rhs column
        return None
    sol = np.zeros(n, dtype=np.int64)
    for r, pc in enumerate(pivots):
        sol[pc] = aug[r, n]
    return LinearSolution(solution=sol, kernel=kernel_basis(a.entries, p))


# ---------------------------------------------------------------------------
# truncated polynomials


@dataclass(frozen=True)
class TruncatedPoly:
    """Element of F_p[e]/(e^(order+1)); coeffs[k] is the e^k coefficient."""

    p: int
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "coeffs", tuple(int(c) % self.p for c in self.coeffs)
        )
        if not self.coeffs:
            raise ValueError("need at least the constant coefficient")

    @classmethod
    def constant(cls, value: int, p: int, order: int) -> "TruncatedPoly":
        return cls(p, (value,) + (0,) * order)

    @classmethod
    def zero(cls, p: int, order: int) -> "TruncatedPoly":
        return cls.constant(0, p, order)

    @classmethod
    def one(cls, p: int, order: int) -> "TruncatedPoly":
        return cls.constant(1, p, order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def _check(self, other: "TruncatedPoly"):
        if self.p != other.p:
            raise ValueError(f"modulus mismatch: {self.p} vs {other.p}")
        if self.order != other.order:
            raise ValueError(f"order mismatch: {self.order} vs {other.order}")

    def __add__(self, other):
        self._check(other)
        return TruncatedPoly(
            self.p, tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other):
        self._check(other)
        return TruncatedPoly(
            self.p, tuple(a - b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __neg__(self):
        return TruncatedPoly(self.p, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return TruncatedPoly(self.p, tuple(other * a for a in self.coeffs))
        self._check(other)
        n = self.order
        out = [0] * (n + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j > n:
                    break
                out[i + j] += a * b
        return TruncatedPoly(self.p, tuple(out))

    __rmul__ = __mul__

    def truncate(self, order: int) -> "TruncatedPoly":
        if order > self.order:
            raise ValueError(f"cannot extend order {self.order} to {order}")
        return TruncatedPoly(self.p, self.coeffs[: order + 1])

    def lift(self, order: int) -> "TruncatedPoly":
        """Re-embed into a higher truncation order, padding with zeros."""
        if order < self.order:
            raise ValueError("use truncate to lower the order")
        return TruncatedPoly(
            self.p, self.coeffs + (0,) * (order - self.order)
        )

    def shift(self, order: int | None = None) -> "TruncatedPoly":
        """Multiply by e, landing in the given order (default: order + 1)."""
        target = self.order + 1 if order is None else order
        out = (0,) + self.coeffs
        return TruncatedPoly(self.p, out[: target + 1] + (0,) * max(0, target - len(out) + 1))

    def is_unit(self) -> bool:
        return self.coeffs[0] % self.p != 0

    def invert(self) -> "TruncatedPoly":
        """Multiplicative inverse; requires a unit constant term."""
        if not self.is_unit():
            raise ZeroDivisionError("constant term is zero: not a unit")
        p = self.p
        c0_inv = inv_mod(self.coeffs[0], p)
        out = [c0_inv] + [0] * self.order
        for k in range(1, self.order + 1):
            acc = sum(out[j] * self.coeffs[k - j] for j in range(k))
            out[k] = (-c0_inv * acc) % p
        return TruncatedPoly(p, tuple(out))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __repr__(self):
        return f"TruncatedPoly(p={self.p}, {list(self.coeffs)})"


# ---------------------------------------------------------------------------
# weighted scalars


@dataclass(frozen=True)
class WeightedScalar:
    """Scalar in F_p together with its twist weight.

    Weight confusion is the dominant error class in this domain, so values
    that live in different twists refuse to mix.
    """

    value: int
    weight: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p)

    def __add__(self, other: "WeightedScalar") -> "WeightedScalar":
        if (self.weight, self.p) != (other.weight, other.p):
            raise ValueError("cannot add scalars of different weights")
        return WeightedScalar(self.value + other.value, self.weight, self.p)

    def __mul__(self, other):
        if isinstance(other, int):
            return WeightedScalar(self.value * other, self.weight, self.p)
        return WeightedScalar(
            self.value * other.value, self.weight + other.weight, self.p
        )

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.value == 0

    def __repr__(self):
        return f"{self.value} (weight {self.weight})"
