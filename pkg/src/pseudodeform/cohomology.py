"""Inhomogeneous cochains on finite group models, with twisted coefficients.

Conventions (pinned so that the first-order representation built in
``deform`` is multiplicative; a selfcheck suite fails if they drift):

    degree 0:  (dx)(g)    = omega(g)^w x - x
    degree 1:  (df)(g, h) = omega(g)^w f(h) - f(gh) + f(g)
    cup (1,1): (f cup g)(s, t) = f(s) * omega(s)^{w_g} * g(t)

Coboundary equations are solved by expressing a 1-cochain through its
values on a canonical generating set (affine propagation along a spanning
tree) and then imposing the full consistency system, whose row space is
tiny.  The reduction is cached per (group, weight), which makes repeated
solves on the same model cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import FpMatrix, LinearSolution, WeightedScalar, solve_linear

_DDCHECK_EXHAUSTIVE_MAX = 300  # |G| above which d(y)=0 is spot-checked
_SPACE2_MAX = 24


class NotACocycleError(ValueError):
    pass


@dataclass
class Cochain:
    """k-cochain (k in {0,1,2}) valued in F_p with the omega^w twist."""

    group: object  # GroupLike
    degree: int
    weight: int
    values: object  # int for degree 0, arrays otherwise

    def __post_init__(self):
        p = self.group.p
        n = self.group.n
        if self.degree == 0:
            self.values = int(self.values) % p
        else:
            arr = np.asarray(self.values, dtype=np.int64) % p
            expected = (n,) if self.degree == 1 else (n, n)
            if arr.shape != expected:
                raise ValueError(f"degree-{self.degree} table must have shape {expected}")
            self.values = arr

    @classmethod
    def zero(cls, group, degree, weight) -> "Cochain":
        if degree == 0:
            return cls(group, 0, weight, 0)
        shape = (group.n,) if degree == 1 else (group.n, group.n)
        return cls(group, degree, weight, np.zeros(shape, dtype=np.int64))

    def copy(self) -> "Cochain":
        v = self.values if self.degree == 0 else self.values.copy()
        return Cochain(self.group, self.degree, self.weight, v)

    def _check_mate(self, other: "Cochain"):
        if self.group is not other.group:
            raise ValueError("cochains live on different groups")
        if self.degree != other.degree or self.weight != other.weight:
            raise ValueError("degree/weight mismatch")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check_mate(other)
        return Cochain(self.group, self.degree, self.weight, self.values + other.values)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check_mate(other)
        return Cochain(self.group, self.degree, self.weight, self.values - other.values)

    def __neg__(self) -> "Cochain":
        return Cochain(self.group, self.degree, self.weight, -self.values)

    def scale(self, k: int) -> "Cochain":
        return Cochain(self.group, self.degree, self.weight, self.values * (k % self.group.p))

    def is_zero(self) -> bool:
        if self.degree == 0:
            return self.values == 0
        return not self.values.any()

    def same_values(self, other: "Cochain") -> bool:
        if self.degree == 0:
            return self.values == other.values
        return np.array_equal(self.values, other.values)

    def d(self) -> "Cochain":
        """Bar differential; degree-2 input is rejected (no degree-3 type)."""
        g = self.group
        p = g.p
        if self.degree == 0:
            vals = (g.omega_pow(self.weight) * self.values - self.values) % p
            return Cochain(g, 1, self.weight, vals)
        if self.degree == 1:
            f = self.values
            tw = g.omega_pow(self.weight)
            vals = (tw[:, None] * f[None, :] - f[g.mul] + f[:, None]) % p
            return Cochain(g, 2, self.weight, vals)
        raise ValueError("differential of a degree-2 cochain is outside the model")

    def cup(self, other: "Cochain") -> "Cochain":
        """Cup product of two degree-1 cochains."""
        if self.degree != 1 or other.degree != 1:
            raise ValueError("cup is defined for a pair of degree-1 cochains")
        if self.group is not other.group:
            raise ValueError("cochains live on different groups")
        g = self.group
        left = (self.values * g.omega_pow(other.weight)) % g.p
        vals = (left[:, None] * other.values[None, :]) % g.p
        return Cochain(g, 2, self.weight + other.weight, vals)

    def cup_scalar(self, x: WeightedScalar) -> "Cochain":
        """f cup x for a 0-cochain x: s |-> f(s) omega(s)^{w_x} x."""
        if self.degree != 1:
            raise ValueError("left factor must have degree 1")
        g = self.group
        vals = (self.values * g.omega_pow(x.weight) * x.value) % g.p
        return Cochain(g, 1, self.weight + x.weight, vals)

    def pointwise(self, other: "Cochain") -> "Cochain":
        """Pointwise product of degree-1 cochains (weights add)."""
        if self.degree != 1 or other.degree != 1 or self.group is not other.group:
            raise ValueError("pointwise product needs two degree-1 cochains")
        return Cochain(
            self.group, 1, self.weight + other.weight, self.values * other.values
        )


def restrict(f: Cochain, local) -> Cochain:
    """Restriction to a local subgroup view (or any SubgroupView)."""
    view = getattr(local, "view", local)
    idx = view.indices
    if f.degree == 0:
        return Cochain(view, 0, f.weight, f.values)
    if f.degree == 1:
        return Cochain(view, 1, f.weight, f.values[idx])
    return Cochain(view, 2, f.weight, f.values[np.ix_(idx, idx)])


def values_on(f: Cochain, parent_indices) -> np.ndarray:
    if f.degree != 1:
        raise ValueError("needs a degree-1 cochain")
    return f.values[np.asarray(parent_indices, dtype=np.int64)]


def coboundary_tables(group, weight: int) -> list[np.ndarray]:
    """Basis of B^1 as tables; empty when omega^w is trivial."""
    tw = group.omega_pow(weight)
    table = (tw - 1) % group.p
    return [table] if table.any() else []


# ---------------------------------------------------------------------------
# solver machinery


class _Reduction:
    """Cached affine description of C^1 solutions of df = y on one group.

    Values of f at every element are affine functions of f on a canonical
    generating set.  For a genuine 2-cocycle y, consistency of df = y on
    the pairs (sigma, a) with a a generator forces it on all pairs: the
    difference df - y is itself a 2-cocycle, and the cocycle identity with
    a generator in the last slot propagates its vanishing along words.
    Only the pivot rows of that thin system are solved per call.
    """

    def __init__(self, group, weight: int):
        self.group = group
        self.weight = weight
        p = group.p
        n = group.n
        gens = group.generators()
        self.gens = gens
        k = len(gens)
        tw = group.omega_pow(weight)
        coeff = np.zeros((n, k), dtype=np.int64)
        for i, a in enumerate(gens):
            coeff[a, i] = 1
        known = np.zeros(n, dtype=bool)
        known[group.identity] = True
        for a in gens:
            known[a] = True
        edges = []  # (g, a, x) with x = g*a discovered through the tree
        frontier = [group.identity] + gens
        while frontier:
            nxt = []
            for g in frontier:
                for a in gens:
                    x = int(group.mul[g, a])
                    if not known[x]:
                        known[x] = True
                        coeff[x] = (coeff[g] + tw[g] * coeff[a]) % p
                        edges.append((g, a, x))
                        nxt.append(x)
            frontier = nxt
        if not known.all():
            raise AssertionError("generator closure failed")
        self.edges = edges
        self.coeff = coeff
        gens_arr = np.array(gens, dtype=np.int64)
        mul = group.mul
        # consistency rows over (sigma, a): C(s) + w(s) C(a) - C(sa)
        rows = (
            coeff[:, None, :]
            + tw[:, None, None] * coeff[gens_arr][None, :, :]
            - coeff[mul[:, gens_arr]]
        ) % p
        rows = rows.reshape(-1, k)
        pivot_flat: list[int] = []
        basis: list[np.ndarray] = []
        cols: list[int] = []
        red = rows.copy()
        while len(basis) < k:
            nz = np.nonzero(red.any(axis=1))[0]
            if nz.size == 0:
                break
            r = int(nz[0])
            row = red[r].copy()
            lead = int(np.nonzero(row)[0][0])
            row = (row * pow(int(row[lead]), p - 2, p)) % p
            basis.append(row)
            cols.append(lead)
            pivot_flat.append(r)
            red = (red - np.outer(red[:, lead], row)) % p
        self.pivot_pairs = [
            (idx // k, int(gens_arr[idx % k])) for idx in pivot_flat
        ]
        if self.pivot_pairs:
            self.pivot_matrix = rows[np.array(pivot_flat, dtype=np.int64)]
        else:
            self.pivot_matrix = np.zeros((0, k), dtype=np.int64)
        # canonical Z^1 basis: kernel of the pivot system, as echelonized tables
        from .ring import kernel_basis, rref_in_place

        ker = kernel_basis(self.pivot_matrix, p)
        tables = (ker @ coeff.T) % p if ker.size else np.zeros((0, n), dtype=np.int64)
        tables = np.ascontiguousarray(tables)
        rref_in_place(tables, p)
        tables = tables[tables.any(axis=1)]
        self.z1_tables = tables

    def offsets(self, y: np.ndarray) -> np.ndarray:
        g = self.group
        p = g.p
        tw = g.omega_pow(self.weight)
        o = np.zeros(g.n, dtype=np.int64)
        o[g.identity] = y[g.identity, g.identity] % p
        for gg, a, x in self.edges:
            o[x] = (o[gg] + tw[gg] * o[a] - y[gg, a]) % p
        return o

    def solve(self, y: np.ndarray) -> np.ndarray | None:
        g = self.group
        p = g.p
        n = g.n
        o = self.offsets(y)
        tw = g.omega_pow(self.weight)
        if self.pivot_pairs:
            rhs = np.array(
                [
                    (y[s, t] - o[s] - tw[s] * o[t] + o[g.mul[s, t]]) % p
                    for (s, t) in self.pivot_pairs
                ],
                dtype=np.int64,
            )
            sol = solve_linear(FpMatrix(p, self.pivot_matrix), rhs)
            if sol is None:
                return None
            v = sol.solution
        else:
            v = np.zeros(self.coeff.shape[1], dtype=np.int64)
        f = (self.coeff @ v + o) % p
        # consistency on (sigma, generator) pairs decides solvability for
        # cocycle inputs; verify mod-size exhaustively, else on that thin
        # system plus a random sample
        gens_arr = np.array(self.gens, dtype=np.int64)
        dthin = (
            tw[:, None] * f[gens_arr][None, :] - f[g.mul[:, gens_arr]] + f[:, None]
        ) % p
        if not np.array_equal(dthin, y[:, gens_arr] % p):
            return None
        if n <= 1024:
            d = (tw[:, None] * f[None, :] - f[g.mul] + f[:, None]) % p
            if not np.array_equal(d, y % p):
                return None
        else:
            rng = np.random.default_rng(1)
            s = rng.integers(0, n, size=1 << 14)
            t = rng.integers(0, n, size=1 << 14)
            if ((tw[s] * f[t] - f[g.mul[s, t]] + f[s] - y[s, t]) % p).any():
                return None
        return f


def _reduction(group, weight: int) -> _Reduction:
    cache = group._solver_cache
    key = ("red", weight % (group.p - 1))
    if key not in cache:
        cache[key] = _Reduction(group, weight)
    return cache[key]


def cocycle_tables(group, weight: int) -> np.ndarray:
    """Canonical (echelonized) basis of Z^1(group, F_p(weight)) as rows."""
    return _reduction(group, weight).z1_tables


def zspace(group, weight: int) -> list[Cochain]:
    return [Cochain(group, 1, weight, t) for t in cocycle_tables(group, weight)]


def is_cocycle2(f: Cochain, rng=None) -> bool:
    """d(y) = 0 for a degree-2 cochain, checked without a degree-3 type.

    Exhaustive for groups up to _DDCHECK_EXHAUSTIVE_MAX elements; beyond
    that a fixed-size random sample of triples is tested.
    """
    g = f.group
    p = g.p
    n = g.n
    y = f.values
    tw = g.omega_pow(f.weight)
    if n <= _DDCHECK_EXHAUSTIVE_MAX:
        sigmas = range(n)
        for s in sigmas:
            lhs = (
                tw[s] * y
                - y[g.mul[s]]
                + y[s][g.mul]
                - y[s][:, None]
            ) % p
            if lhs.any():
                return False
        return True
    rng = rng or np.random.default_rng(0)
    for _ in range(16):
        s = rng.integers(0, n, size=4096)
        t = rng.integers(0, n, size=4096)
        u = rng.integers(0, n, size=4096)
        lhs = (
            tw[s] * y[t, u]
            - y[g.mul[s, t], u]
            + y[s, g.mul[t, u]]
            - y[s, t]
        ) % p
        if lhs.any():
            return False
    return True


def solve_coboundary(y: Cochain) -> Cochain | None:
    """Deterministic f with df = y, or None when y is not a coboundary.

    Raises NotACocycleError when y fails the degree-2 cocycle identity.
    """
    if y.degree != 2:
        raise ValueError("solve_coboundary expects a degree-2 cochain")
    if not is_cocycle2(y):
        raise NotACocycleError("right-hand side is not a 2-cocycle")
    red = _reduction(y.group, y.weight)
    f = red.solve(y.values)
    if f is None:
        return None
    return Cochain(y.group, 1, y.weight, f)


@dataclass
class CocycleSpace:
    degree: int
    weight: int
    z_basis: list
    b_basis: list

    @property
    def h_dim(self) -> int:
        return len(self.z_basis) - len(self.b_basis)


def space(group, degree: int, weight: int) -> CocycleSpace:
    """Deterministic bases for Z^k and B^k (k in {0,1,2}) and dim H^k."""
    from .ring import kernel_basis, rref_in_place

    p = group.p
    n = group.n
    if degree == 0:
        tw = group.omega_pow(weight)
        fixed = np.all(tw % p == 1)
        z = [Cochain(group, 0, weight, 1)] if fixed else []
        return CocycleSpace(0, weight, z, [])
    if degree == 1:
        z = zspace(group, weight)
        b = [Cochain(group, 1, weight, t) for t in coboundary_tables(group, weight)]
        return CocycleSpace(1, weight, z, b)
    if degree == 2:
        if n > _SPACE2_MAX:
            raise ValueError(
                f"degree-2 space supported for groups of size <= {_SPACE2_MAX}"
            )
        tw = group.omega_pow(weight)
        mul = group.mul
        rows = []
        for s in range(n):
            for t in range(n):
                for u in range(n):
                    row = np.zeros(n * n, dtype=np.int64)
                    row[t * n + u] += tw[s]
                    row[mul[s, t] * n + u] -= 1
                    row[s * n + mul[t, u]] += 1
                    row[s * n + t] -= 1
                    rows.append(row % p)
        ker = kernel_basis(np.array(rows, dtype=np.int64), p)
        z = [Cochain(group, 2, weight, v.reshape(n, n)) for v in ker]
        img = np.zeros((n, n * n), dtype=np.int64)
        for g in range(n):
            f = np.zeros(n, dtype=np.int64)
            f[g] = 1
            img[g] = ((tw[:, None] * f[None, :] - f[mul] + f[:, None]) % p).ravel()
        img = np.ascontiguousarray(img)
        rref_in_place(img, p)
        img = img[img.any(axis=1)]
        b = [Cochain(group, 2, weight, v.reshape(n, n)) for v in img]
        return CocycleSpace(2, weight, z, b)
    raise ValueError("degree must be 0, 1 or 2")


class PinnedSolveError(ValueError):
    pass


def solve_pinned_c1(model, gamma0: int | None = None) -> tuple[Cochain, WeightedScalar]:
    """The normalized weight(-1) cocycle and its local antiderivative at p.

    Constraints: vanishes identically on the ell1 decomposition group, is a
    coboundary dx on the p decomposition group, and takes the value 1 on
    the designated inertia generator at ell0 (overridable for re-pinning).
    Existence and uniqueness are both enforced.
    """
    p = model.p
    z = cocycle_tables(model, -1)  # rows: basis of Z^1(G, F_p(-1))
    k = z.shape[0]
    ell1 = model.local("ell1").view.indices
    dp = model.local("p").view.indices
    if gamma0 is None:
        gamma0 = model.gamma("ell0")
    tw = model.omega_pow(-1)
    rows = []
    rhs = []
    for g in ell1:  # c vanishes on D_ell1
        rows.append(np.concatenate([z[:, g], [0]]))
        rhs.append(0)
    for g in dp:  # c = dx on D_p, x the extra unknown
        rows.append(np.concatenate([z[:, g], [-(tw[g] - 1)]]))
        rhs.append(0)
    rows.append(np.concatenate([z[:, gamma0], [0]]))  # normalization
    rhs.append(1)
    mat = FpMatrix(p, np.array(rows, dtype=np.int64) % p)
    sol = solve_linear(mat, np.array(rhs, dtype=np.int64))
    if sol is None:
        raise PinnedSolveError("no such class")
    if sol.kernel_rank and sol.kernel[:, :k].any():
        raise PinnedSolveError("class not unique up to scaling")
    coeffs = sol.solution
    table = (coeffs[:k] @ z) % p if k else np.zeros(model.n, dtype=np.int64)
    c1 = Cochain(model, 1, -1, table)
    x = WeightedScalar(int(coeffs[k]), -1, p)
    return c1, x
