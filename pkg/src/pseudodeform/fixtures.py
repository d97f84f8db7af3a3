"""Synthetic group models exercising every pipeline branch.

The generator builds groups (V ⋊ Δ) where V is an F_p-vector space with a
designated central "receiver" coordinate: bilinear cross terms feeding the
receiver during multiplication create exactly the 2-cocycle structure the
deformation equations probe, so the first-order invariant can be planted
by placing receiver components inside the local subgroups.

Element encoding: (v, s) with v the coordinate vector and s the power of
the acting generator delta; index = s * p^k + sum v_i p^i.
"""

from __future__ import annotations

import numpy as np

from .arith import least_primitive_root
from .cohomology import Cochain, cocycle_tables
from .model import GroupLike, GroupModel
from .ring import inv_mod


class _RawGroup(GroupLike):
    """Bare multiplication table wrapper, used while assembling a model."""

    def __init__(self, p, mul, omega):
        self.p = p
        self.n = len(omega)
        self.mul = np.asarray(mul, dtype=np.int64)
        self.omega = np.asarray(omega, dtype=np.int64) % p
        self._finish_init()


class _RawSub(GroupLike):
    def __init__(self, parent: _RawGroup, indices):
        self.p = parent.p
        self.indices = np.asarray(sorted(int(i) for i in indices), dtype=np.int64)
        self.n = len(self.indices)
        back = {int(g): i for i, g in enumerate(self.indices)}
        sub = parent.mul[np.ix_(self.indices, self.indices)]
        self.mul = np.vectorize(back.__getitem__, otypes=[np.int64])(sub)
        self.omega = parent.omega[self.indices]
        self._finish_init()


def build_semidirect(p: int, weights, cross=(), delta_order: int | None = None,
                     carry=()):
    """Multiplication table of (V ⋊ Δ) with receiver cross terms.

    weights: per-coordinate twist exponents (delta acts by g^w on each).
    cross: tuples (target, i, j, coeff); during v * w the target coordinate
    picks up coeff * v_i * w_j, where w is the already-twisted right
    operand.  Targets must carry the weight of their argument pair.
    carry: tuples (target, i, coeff); the target picks up the mod-p carry
    of v_i + w_i, gluing coordinates i and target into a Z/p^2 (both must
    have the same weight).
    """
    d = delta_order or (p - 1)
    if (p - 1) % d:
        raise ValueError("delta order must divide p-1")
    g = pow(least_primitive_root(p), (p - 1) // d, p)
    k = len(weights)
    ph = p**k
    n = ph * d
    for (t, i, j, coeff) in cross:
        if (weights[i] + weights[j] - weights[t]) % (p - 1):
            raise ValueError("cross term breaks the action equivariance")
    targets = {t for (t, _, _, _) in cross} | {t for (t, _, _) in carry}
    args = {i for (_, i, _, _) in cross} | {j for (_, _, j, _) in cross}
    args |= {i for (_, i, _) in carry}
    if targets & args:
        raise ValueError("cross receivers may not appear as arguments")
    for (t, i, coeff) in carry:
        if (weights[i] - weights[t]) % (p - 1):
            raise ValueError("carry gluing needs matching weights")
        # the Z/p^2 pattern is only delta-equivariant for invariant coords
        if weights[i] % (p - 1):
            raise ValueError("carry gluing supported on weight-0 coordinates")

    idx = np.arange(n)
    s_of = idx // ph
    digits = np.zeros((n, k), dtype=np.int64)
    rem = idx % ph
    for c in range(k):
        digits[:, c] = rem % p
        rem = rem // p
    # powg[s, c] = g^(s * w_c)
    powg = np.array(
        [[pow(g, (s * w) % (p - 1), p) for w in weights] for s in range(d)],
        dtype=np.int64,
    )
    mul = np.zeros((n, n), dtype=np.int64)
    pvec = np.array([p**c for c in range(k)], dtype=np.int64)
    chunk = max(1, (1 << 22) // max(n * k, 1))
    for start in range(0, n, chunk):
        sl = slice(start, min(n, start + chunk))
        vi = digits[sl][:, None, :]  # (c,1,k)
        si = s_of[sl][:, None]  # (c,1)
        w = digits[None, :, :] * powg[s_of[sl]][:, None, :] % p  # (c,n,k)
        u = vi + w
        for (t, a, b, coeff) in cross:
            u[:, :, t] += coeff * vi[:, :, a] * w[:, :, b]
        for (t, a, coeff) in carry:
            u[:, :, t] += coeff * ((vi[:, :, a] + w[:, :, a]) // p)
        u %= p
        s_out = (si + s_of[None, :]) % d
        mul[sl] = s_out * ph + (u * pvec).sum(axis=2)
    omega = np.array([pow(g, int(s), p) for s in s_of], dtype=np.int64)
    names = [
        "(" + ",".join(str(int(x)) for x in digits[i]) + f"|{int(s_of[i])})"
        for i in range(n)
    ]

    def encode(v, s=0):
        return int((s % d) * ph + sum((int(x) % p) * p**c for c, x in enumerate(v)))

    def coord_table(c):
        return digits[:, c].copy()

    return {
        "p": p,
        "names": names,
        "mul": mul,
        "omega": omega,
        "encode": encode,
        "coord_table": coord_table,
        "g": g,
        "delta_order": d,
    }


def closure(mul: np.ndarray, gens) -> list[int]:
    """Sorted element list of the subgroup generated by ``gens``."""
    idn = None
    rng = np.arange(mul.shape[0])
    for e in range(mul.shape[0]):
        if np.array_equal(mul[e], rng):
            idn = e
            break
    seen = {idn}
    frontier = [idn]
    gens = [int(g) for g in gens]
    while frontier:
        nxt = []
        for x in frontier:
            for a in gens:
                y = int(mul[x, a])
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(seen)


# ---------------------------------------------------------------------------
# the pipeline fixture family

_RAW_CACHE: dict = {}


def pipeline_model(
    p: int = 5,
    nu: int = 0,
    theta: int = 0,
    theta2: int = 0,
    theta3: int = 0,
    frob_value: int = 0,
    x_c: int = 1,
) -> GroupModel:
    """Full-context model: coordinates (b1, c, a0, receiver).

    nu plants the first-order invariant alpha (= nu when theta = 0);
    theta/theta2/theta3 pick the receiver extension class (bilinear twists
    and the Z/p^2 gluing of the a0 coordinate); frob_value plants a
    non-zero value of the first-order diagonal on the designated Frobenius
    at ell1, switching the pipeline to the obstructed branch.
    """
    if p < 5:
        raise ValueError("pipeline fixtures need p >= 5")
    weights = (1, -1, 0, 0)  # b1, c, a0, receiver
    cross = [(3, 0, 1, 1)]
    if theta % p:
        cross.append((3, 1, 0, theta % p))
    if theta2 % p:
        cross.append((3, 2, 2, theta2 % p))
    carry = [(3, 2, theta3 % p)] if theta3 % p else []
    key = (p, tuple(cross), tuple(carry))
    raw = _RAW_CACHE.get(key)
    if raw is None:
        raw = build_semidirect(p, weights, cross, carry=carry)
        _RAW_CACHE[key] = raw
    enc = raw["encode"]
    g = raw["g"]
    gamma0 = enc((0, 1, 1, nu % p), 0)
    phi0 = enc((0, 0, 1, 0), 0)
    gamma1 = enc((1, 0, 0, 0), 0)
    phi1 = enc((0, 0, 0, frob_value % p), 1)
    gamma_p = enc((0, (inv_mod(g, p) - 1) * x_c % p, 0, 0), 1)
    mul = raw["mul"]
    d_ell0 = closure(mul, [gamma0, phi0])
    i_ell0 = closure(mul, [gamma0])
    d_ell1 = closure(mul, [gamma1, phi1])
    i_ell1 = closure(mul, [gamma1])
    d_p = closure(mul, [gamma_p])
    group = _RawGroup(p, mul, raw["omega"])
    dp_view = _RawSub(group, d_p)
    flat1 = [t.tolist() for t in cocycle_tables(dp_view, 1)]
    b0_table = (group.omega_pow(1) - 1) % p  # coboundary representative
    pinned = {
        "b1": raw["coord_table"](0).tolist(),
        "b0": b0_table.tolist(),
        "a0": raw["coord_table"](2).tolist(),
        "ap": [0] * group.n,
    }
    data = {
        "p": p,
        "elements": raw["names"],
        "mul": mul.tolist(),
        "omega": raw["omega"].tolist(),
        "locals": {
            "ell0": {"decomposition": d_ell0, "inertia": i_ell0, "gamma": gamma0},
            "ell1": {"decomposition": d_ell1, "inertia": i_ell1, "gamma": gamma1},
            "p": {"decomposition": d_p, "inertia": d_p},
        },
        "flat": {"weight1": flat1, "weight0": []},
        "pinned": pinned,
    }
    return GroupModel.from_dict(data)


# ---------------------------------------------------------------------------
# small models for the brute-force oracles


def s3_model(p: int = 3, locals_mode: str = "oracle") -> GroupModel:
    """The 6-element model F_3 ⋊ F_3^x.

    locals_mode "oracle": honest small local subgroups (for coboundary
    oracles).  locals_mode "torsor": trivial ell0/ell1 subgroups so the
    second-order solution set is an exact torsor orbit at this tiny size.
    """
    raw = build_semidirect(p, (1,), (), p - 1)
    mul = raw["mul"]
    enc = raw["encode"]
    h = enc((1,), 0)
    delta = enc((0,), 1)
    if locals_mode == "torsor":
        ell0 = {"decomposition": [0], "inertia": [0], "gamma": 0}
        ell1 = {"decomposition": [0], "inertia": [0], "gamma": 0}
    else:
        hgrp = closure(mul, [h])
        ell0 = {"decomposition": hgrp, "inertia": hgrp, "gamma": h}
        ell1 = {"decomposition": hgrp, "inertia": hgrp, "gamma": h}
    d_p = closure(mul, [delta])
    group = _RawGroup(p, mul, raw["omega"])
    dp_view = _RawSub(group, d_p)
    flat1 = [t.tolist() for t in cocycle_tables(dp_view, 1)]
    data = {
        "p": p,
        "elements": raw["names"],
        "mul": mul.tolist(),
        "omega": raw["omega"].tolist(),
        "locals": {
            "ell0": ell0,
            "ell1": ell1,
            "p": {"decomposition": d_p, "inertia": [0]},
        },
        "flat": {"weight1": flat1, "weight0": []},
    }
    return GroupModel.from_dict(data)


def planted_second_order(fo, beta: int):
    """Locally consistent second-order data with a prescribed beta.

    Models at dense-table scale cannot carry globally coherent
    second-order solutions (the receiver coordinate forces a non-zero
    obstruction class on the subgroup it spans with the b1 coordinate;
    see the repository notes), so the local product tests are exercised
    on data planted to satisfy every condition the local checks read:
    the b-coordinate restricts to beta times the c1-line at ell0, all
    second-order coordinates vanish on the p and ell1 subgroups, the
    four coboundary equations hold on the ell0 subgroup, and the
    determinant is normalized exactly.
    """
    from .deform import SecondOrder
    from .ring import WeightedScalar, inv_mod

    model = fo.model
    p = model.p
    ell0 = model.local("ell0").view.indices
    mask = np.zeros(model.n, dtype=np.int64)
    mask[ell0] = 1
    c1v = fo.ctx.c1.values
    alpha = fo.alpha.value
    b2 = Cochain(model, 1, 1, beta * mask * c1v % p)
    combo = (alpha * alpha + beta) % p
    # second-order diagonal absorbing the ell0 restriction of equation (i)
    a2 = Cochain(model, 1, 0, combo * inv_mod(2, p) % p * mask * c1v * c1v % p)
    c2 = Cochain.zero(model, 1, -1)
    d2 = fo.ctx.b1.pointwise(c2) + b2.pointwise(fo.ctx.c1) \
        - fo.a1.pointwise(fo.d1) - a2
    s = SecondOrder(a2=a2, d2=d2, b2=b2, c2=c2, fo=fo,
                    flags={"det_normalized": True, "flat_normalized": True,
                           "planted": True})
    return s, WeightedScalar(beta, 2, p)


def write_fixture_files(out_dir: str) -> list[str]:
    """Materialize the bundled model files (JSON per the file contract).

    The full-context models are a few megabytes each as JSON, so they are
    generated on demand by this committed script instead of being checked
    in as data.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, model):
        path = os.path.join(out_dir, name)
        model.save(path)
        written.append(path)

    emit("a1_nonzero_at_l1.json", pipeline_model(p=5, nu=0, frob_value=1))
    emit("alpha_planted_2.json", pipeline_model(p=5, nu=2, frob_value=3))
    emit("s3_oracle.json", s3_model(locals_mode="oracle"))
    emit("s3_torsor.json", s3_model(locals_mode="torsor"))
    return written


def synthetic_first_order(model: GroupModel, x0: int = 0):
    """A hand-built first-order datum on a small model.

    b1 is the dual coordinate cocycle, c1 the coboundary of x0 (weight -1)
    and a1 the matching antiderivative b1 cup x0; all first-order
    identities hold by construction.  Used by the equation-set oracles and
    the convention selfchecks without requiring a full pinned context.
    """
    from .deform import DeformationContext, FirstOrder
    from .ring import WeightedScalar

    p = model.p
    # pick the first weight-1 cocycle basis vector that is not a coboundary
    basis = cocycle_tables(model, 1)
    table = None
    for t in basis:
        cob = (model.omega_pow(1) - 1) % p
        if t.any() and not np.array_equal(t, cob):
            table = t
            break
    if table is None:
        raise ValueError("model has no interesting weight-1 cocycle")
    b1 = Cochain(model, 1, 1, table)
    c1 = Cochain(model, 1, -1, (model.omega_pow(-1) - 1) * x0 % p)
    x = WeightedScalar(x0, -1, p)
    a1 = b1.cup_scalar(x)
    d1 = b1.pointwise(c1) - a1
    zero0 = Cochain.zero(model, 1, 0)
    ctx = DeformationContext(
        model=model, b1=b1, b0=Cochain.zero(model, 1, 1), a0=zero0, ap=zero0,
        c1=c1, x_c1=x, gamma0=model.gamma("ell0"), gamma1=model.gamma("ell1"),
    )
    alpha = WeightedScalar(0, 1, p)
    return FirstOrder(ctx=ctx, a1=a1, d1=d1, alpha=alpha)


if __name__ == "__main__":
    import argparse

    ap = argparse.ArgumentParser(description="write bundled fixture model files")
    ap.add_argument("--out-dir", default="fixtures")
    ns = ap.parse_args()
    for path in write_fixture_files(ns.out_dir):
        print(path)
