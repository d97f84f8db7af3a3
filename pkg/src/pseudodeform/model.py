"""Finite group models: multiplication tables, a character, local subgroups.

A model packages everything the cohomology and deformation layers need:
the group itself (dense multiplication table), the twisting character
omega, designated local subgroups tagged "ell0", "ell1" and "p" with
inertia subgroups and optional distinguished inertia generators, declared
flat subspaces of local 1-cocycles at p, and optionally pre-pinned global
cocycle tables.

Everything is validated on load; models are immutable afterwards and safe
to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .ring import check_odd_prime

LOCAL_TAGS = ("ell0", "ell1", "p")
_MODEL_FIELDS = {"p", "elements", "mul", "omega", "locals", "flat", "pinned"}
_LOCAL_FIELDS = {"decomposition", "inertia", "gamma"}
_FLAT_FIELDS = {"weight1", "weight0"}
_PINNED_FIELDS = {"b1", "b0", "a0", "ap"}


class ModelFormatError(ValueError):
    """Malformed model data; the message carries the offending field."""


class ModelValidationError(ValueError):
    """Structurally well-formed data that fails the group-model axioms."""


class GroupLike:
    """Shared behaviour of a full model and of its local subgroup views."""

    p: int
    n: int
    mul: np.ndarray
    omega: np.ndarray
    identity: int

    def _finish_init(self):
        mul = self.mul
        n = self.n
        # identity, inverses
        idn = None
        rng = np.arange(n)
        for g in range(n):
            if np.array_equal(mul[g], rng) and np.array_equal(mul[:, g], rng):
                idn = g
                break
        if idn is None:
            raise ModelValidationError("mul: no two-sided identity element")
        self.identity = idn
        inv = np.full(n, -1, dtype=np.int64)
        pos = np.argwhere(mul == idn)
        for g, h in pos:
            inv[g] = h
        if np.any(inv < 0):
            raise ModelValidationError("mul: some element has no inverse")
        self.inv = inv
        self._omega_pow_cache: dict[int, np.ndarray] = {}
        self._solver_cache: dict = {}

    def omega_pow(self, w: int) -> np.ndarray:
        """Vector of omega(g)^w over the element list."""
        w = w % (self.p - 1)
        cached = self._omega_pow_cache.get(w)
        if cached is None:
            table = {int(v): pow(int(v), w, self.p) for v in np.unique(self.omega)}
            cached = np.array([table[int(v)] for v in self.omega], dtype=np.int64)
            self._omega_pow_cache[w] = cached
        return cached

    def power(self, g: int, k: int) -> int:
        """g**k via the table (k may be negative)."""
        if k < 0:
            g, k = int(self.inv[g]), -k
        acc = self.identity
        for _ in range(k):
            acc = int(self.mul[acc, g])
        return acc

    def generators(self) -> list[int]:
        """Greedy generating set: repeatedly adjoin the smallest new element."""
        gens: list[int] = []
        reached = np.zeros(self.n, dtype=bool)
        reached[self.identity] = True
        while not reached.all():
            g = int(np.nonzero(~reached)[0][0])
            gens.append(g)
            frontier = list(np.nonzero(reached)[0])
            reached_set = reached
            stack = frontier
            while stack:
                new_stack = []
                prods = self.mul[np.ix_(stack, gens)].ravel()
                for x in prods:
                    if not reached_set[x]:
                        reached_set[x] = True
                        new_stack.append(int(x))
                stack = new_stack
        return gens


class SubgroupView(GroupLike):
    """A subgroup reindexed as a group of its own.

    ``indices`` maps local indices back to the parent model; its order is
    the order the subgroup was declared in, which also fixes the layout of
    any local cochain tables (flat declarations use it).
    """

    def __init__(self, parent: "GroupModel", indices):
        self.parent = parent
        self.indices = np.asarray(indices, dtype=np.int64)
        self.p = parent.p
        self.n = len(self.indices)
        back = {int(g): i for i, g in enumerate(self.indices)}
        if len(back) != self.n:
            raise ModelValidationError("subgroup list contains duplicates")
        self.index_of = back
        sub = parent.mul[np.ix_(self.indices, self.indices)]
        try:
            local = np.vectorize(back.__getitem__, otypes=[np.int64])(sub)
        except KeyError:
            raise ModelValidationError("subgroup is not closed under multiplication")
        self.mul = local
        self.omega = parent.omega[self.indices]
        self._finish_init()


@dataclass
class LocalData:
    tag: str
    view: SubgroupView
    inertia: np.ndarray  # parent indices
    gamma: int | None  # parent index
    frobenius: int  # parent index; generates view/inertia

    @property
    def inertia_local(self) -> np.ndarray:
        return np.array([self.view.index_of[int(g)] for g in self.inertia])


class GroupModel(GroupLike):
    def __init__(self, p, elements, mul, omega, locals_, flat, pinned=None):
        self.p = check_odd_prime(int(p))
        self.names = list(elements)
        self.n = len(self.names)
        self.mul = np.ascontiguousarray(np.asarray(mul, dtype=np.int64))
        self.omega = np.asarray(omega, dtype=np.int64) % self.p
        self._validate_group()
        self._finish_init()
        self._validate_omega()
        self.locals: dict[str, LocalData] = {}
        for tag in LOCAL_TAGS:
            if tag not in locals_:
                raise ModelFormatError(f"locals: missing tag {tag!r}")
            self.locals[tag] = self._build_local(tag, locals_[tag])
        self._validate_local_characters()
        self.flat1 = [np.asarray(t, dtype=np.int64) % self.p for t in flat.get("weight1", [])]
        self.flat0 = [np.asarray(t, dtype=np.int64) % self.p for t in flat.get("weight0", [])]
        self._validate_flat()
        self.pinned = None
        if pinned is not None:
            self.pinned = {
                k: np.asarray(v, dtype=np.int64) % self.p for k, v in pinned.items()
            }
            for key, table in self.pinned.items():
                if table.shape != (self.n,):
                    raise ModelFormatError(f"pinned.{key}: wrong table length")

    # -- validation ---------------------------------------------------------

    def _validate_group(self):
        n = self.n
        if self.mul.shape != (n, n):
            raise ModelFormatError(f"mul: expected {n}x{n} table")
        if self.mul.min() < 0 or self.mul.max() >= n:
            raise ModelFormatError("mul: entries must be element indices")
        # Light's associativity test: checking x(ay) = (xa)y for generators a
        # suffices, because the set of valid middle elements is closed under
        # products.
        self._finish_init_light()

    def _finish_init_light(self):
        # needs identity/inverses, so run a bare copy of that logic first
        n = self.n
        rng = np.arange(n)
        idn = None
        for g in range(n):
            if np.array_equal(self.mul[g], rng) and np.array_equal(self.mul[:, g], rng):
                idn = g
                break
        if idn is None:
            raise ModelValidationError("mul: no two-sided identity element")
        for g in range(n):
            row = np.bincount(self.mul[g], minlength=n)
            col = np.bincount(self.mul[:, g], minlength=n)
            if row.max() != 1 or col.max() != 1:
                raise ModelValidationError("mul: rows/columns are not permutations")
        self.identity = idn
        gens = self._greedy_generators_for_validation(idn)
        for a in gens:
            lhs = self.mul[:, self.mul[a, :]]
            rhs = self.mul[self.mul[:, a], :]
            if not np.array_equal(lhs, rhs):
                raise ModelValidationError("mul: associativity fails")

    def _greedy_generators_for_validation(self, idn):
        reached = np.zeros(self.n, dtype=bool)
        reached[idn] = True
        gens = []
        while not reached.all():
            g = int(np.nonzero(~reached)[0][0])
            gens.append(g)
            changed = True
            while changed:
                known = np.nonzero(reached)[0]
                prods = self.mul[np.ix_(known, np.array(gens))]
                before = reached.sum()
                reached[prods.ravel()] = True
                changed = reached.sum() > before
        return gens

    def _validate_omega(self):
        if self.omega.shape != (self.n,):
            raise ModelFormatError("omega: wrong length")
        if np.any(self.omega % self.p == 0):
            raise ModelValidationError("omega: values must be units mod p")
        prod = (self.omega[:, None] * self.omega[None, :]) % self.p
        if not np.array_equal(self.omega[self.mul], prod):
            raise ModelValidationError("omega: not a homomorphism")

    def _build_local(self, tag, data) -> LocalData:
        unknown = set(data) - _LOCAL_FIELDS
        if unknown:
            raise ModelFormatError(f"locals.{tag}: unknown fields {sorted(unknown)}")
        if "decomposition" not in data or "inertia" not in data:
            raise ModelFormatError(f"locals.{tag}: decomposition and inertia required")
        dec = list(data["decomposition"])
        ine = list(data["inertia"])
        if not set(ine) <= set(dec):
            raise ModelValidationError(f"locals.{tag}: inertia not inside decomposition")
        view = SubgroupView(self, dec)
        # inertia must itself be a subgroup, normal in the decomposition group
        iview = SubgroupView(self, ine) if ine else None
        ine_set = set(int(g) for g in ine) or {self.identity}
        for g in dec:
            for h in ine or [self.identity]:
                conj = self.mul[self.mul[int(g), int(h)], self.inv[int(g)]]
                if int(conj) not in ine_set:
                    raise ModelValidationError(f"locals.{tag}: inertia is not normal")
        gamma = data.get("gamma")
        if gamma is not None:
            gamma = int(gamma)
            if gamma not in set(int(g) for g in ine):
                raise ModelValidationError(f"locals.{tag}: gamma must lie in inertia")
        frob = self._frobenius(tag, view, ine)
        return LocalData(tag=tag, view=view, inertia=np.asarray(ine, dtype=np.int64),
                         gamma=gamma, frobenius=frob)

    def _frobenius(self, tag, view, inertia):
        """Smallest element of D whose coset generates the cyclic D/I."""
        ine_local = set(view.index_of[int(g)] for g in inertia)
        ine_local.add(view.identity)
        quotient = _coset_quotient(view, ine_local)
        if quotient is None:
            raise ModelValidationError(f"locals.{tag}: D/I is not cyclic")
        return int(view.indices[quotient])

    def _validate_local_characters(self):
        for tag in ("ell0", "ell1"):
            loc = self.locals[tag]
            if loc.gamma is None:
                raise ModelFormatError(f"locals.{tag}: gamma is required")
            if np.any(self.omega[loc.inertia] % self.p != 1):
                raise ModelValidationError(
                    f"locals.{tag}: omega must be trivial on inertia"
                )
        ell0 = self.locals["ell0"]
        if np.any(self.omega[ell0.view.indices] % self.p != 1):
            raise ModelValidationError(
                "locals.ell0: omega must be trivial on the whole decomposition group"
            )

    def _validate_flat(self):
        from .cohomology import Cochain, coboundary_tables

        dp = self.locals["p"].view
        for w, tables in ((1, self.flat1), (0, self.flat0)):
            for i, t in enumerate(tables):
                if t.shape != (dp.n,):
                    raise ModelFormatError(
                        f"flat.weight{w}[{i}]: table length must be |D_p|"
                    )
                f = Cochain(dp, 1, w, t)
                if not f.d().is_zero():
                    raise ModelValidationError(
                        f"flat.weight{w}[{i}]: table is not a local cocycle"
                    )
        # local coboundaries must be inside the weight-1 flat span
        for cob in coboundary_tables(dp, 1):
            if not _in_span(self.flat1, cob, self.p):
                raise ModelValidationError(
                    "flat.weight1: must contain the local coboundaries"
                )

    # -- convenience --------------------------------------------------------

    def local(self, tag: str) -> LocalData:
        if tag not in self.locals:
            raise KeyError(f"unknown local tag {tag!r}")
        return self.locals[tag]

    def gamma(self, tag: str) -> int:
        g = self.locals[tag].gamma
        if g is None:
            raise ModelValidationError(f"locals.{tag}: no gamma designated")
        return g

    # -- serialization ------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "GroupModel":
        if not isinstance(data, dict):
            raise ModelFormatError("model file must contain a JSON object")
        unknown = set(data) - _MODEL_FIELDS
        if unknown:
            raise ModelFormatError(f"unknown fields {sorted(unknown)}")
        for key in ("p", "elements", "mul", "omega", "locals"):
            if key not in data:
                raise ModelFormatError(f"missing required field {key!r}")
        flat = data.get("flat", {})
        if not isinstance(flat, dict) or set(flat) - _FLAT_FIELDS:
            raise ModelFormatError("flat: expected weight1/weight0 arrays")
        pinned = data.get("pinned")
        if pinned is not None:
            if not isinstance(pinned, dict) or set(pinned) - _PINNED_FIELDS:
                raise ModelFormatError("pinned: expected b1/b0/a0/ap tables")
        try:
            return cls(
                p=data["p"],
                elements=data["elements"],
                mul=data["mul"],
                omega=data["omega"],
                locals_=data["locals"],
                flat=flat,
                pinned=pinned,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (ModelFormatError, ModelValidationError)):
                raise
            raise ModelFormatError(f"malformed model data: {exc}") from exc

    @classmethod
    def load(cls, path) -> "GroupModel":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ModelFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {
            "p": int(self.p),
            "elements": list(self.names),
            "mul": self.mul.tolist(),
            "omega": self.omega.tolist(),
            "locals": {},
            "flat": {
                "weight1": [t.tolist() for t in self.flat1],
                "weight0": [t.tolist() for t in self.flat0],
            },
        }
        for tag, loc in self.locals.items():
            entry = {
                "decomposition": loc.view.indices.tolist(),
                "inertia": loc.inertia.tolist(),
            }
            if loc.gamma is not None:
                entry["gamma"] = int(loc.gamma)
            out["locals"][tag] = entry
        if self.pinned is not None:
            out["pinned"] = {k: v.tolist() for k, v in self.pinned.items()}
        return out

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)


def _coset_quotient(view: SubgroupView, inertia_local: set) -> int | None:
    """Local index of the smallest element whose I-coset generates D/I."""
    n = view.n
    coset_of = np.full(n, -1, dtype=np.int64)
    reps = []
    for g in range(n):
        if coset_of[g] >= 0:
            continue
        rep = len(reps)
        reps.append(g)
        for h in inertia_local:
            coset_of[view.mul[g, h]] = rep
    size = len(reps)
    for g in range(n):
        # walk the coset of g through the quotient
        seen = set()
        x = view.identity
        for _ in range(size):
            x = int(view.mul[x, g])
            seen.add(int(coset_of[x]))
        if len(seen) == size:
            return g
    return None


def _in_span(tables, target, p) -> bool:
    from .ring import FpMatrix, solve_linear

    target = np.asarray(target, dtype=np.int64) % p
    if not tables:
        return not target.any()
    a = FpMatrix(p, np.stack(tables, axis=1))
    return solve_linear(a, target) is not None
