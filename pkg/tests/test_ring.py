import itertools
import random

import numpy as np
import pytest

from pseudodeform import _fpkernel_py
from pseudodeform.ring import (
    FpMatrix,
    TruncatedPoly,
    WeightedScalar,
    inv_mod,
    is_prime,
    kernel_basis,
    solve_linear,
)

try:
    from pseudodeform import _fpkernel

    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False


def tp(p, *coeffs):
    return TruncatedPoly(p, coeffs)


class TestPolyMul:
    def test_difference_of_squares(self):
        # (1+e)(1-e) = 1 - e^2 in F_5[e_2]
        assert (tp(5, 1, 1, 0) * tp(5, 1, -1, 0)).coeffs == (1, 0, 4)

    def test_truncation(self):
        assert (tp(5, 0, 1) * tp(5, 0, 1)).coeffs == (0, 0)

    def test_hand_convolution(self):
        # (1+2e+e^2)(1+3e) = 1 + 0e + 2e^2 mod 5
        assert (tp(5, 1, 2, 1) * tp(5, 1, 3, 0)).coeffs == (1, 0, 2)

    def test_mismatch_rejected(self):
        with pytest.raises(ValueError):
            tp(5, 1, 1) * tp(7, 1, 1)
        with pytest.raises(ValueError):
            tp(5, 1, 1) * tp(5, 1, 1, 1)

    def test_associative_commutative_randomized(self):
        rng = random.Random(0)
        cases = 0
        for p in (3, 5, 7):
            for _ in range(3500):
                order = rng.randrange(0, 5)
                a, b, c = (
                    TruncatedPoly(p, tuple(rng.randrange(p) for _ in range(order + 1)))
                    for _ in range(3)
                )
                assert (a * b) * c == a * (b * c)
                assert a * b == b * a
                cases += 1
        assert cases >= 10000


class TestPolyInvert:
    def test_geometric_series(self):
        assert tp(5, 1, 1).invert().coeffs == (1, 4)

    def test_constant(self):
        assert tp(5, 2).invert().coeffs == (3,)

    def test_linear_system_case(self):
        assert tp(5, 1, 1, 1).invert().coeffs == (1, 4, 0)

    def test_all_units_invert(self):
        for p in (3, 5):
            for coeffs in itertools.product(range(p), repeat=3):
                a = TruncatedPoly(p, coeffs)
                if a.is_unit():
                    assert (a * a.invert()).coeffs == (1, 0, 0)
                else:
                    with pytest.raises(ZeroDivisionError):
                        a.invert()


class TestSolveLinear:
    def test_identity(self):
        sol = solve_linear(FpMatrix(5, [[1, 0], [0, 1]]), [3, 4])
        assert list(sol.solution) == [3, 4]
        assert sol.kernel_rank == 0

    def test_inconsistent(self):
        assert solve_linear(FpMatrix(5, [[0]]), [1]) is None

    def test_rank_one(self):
        sol = solve_linear(FpMatrix(5, [[1, 2], [2, 4]]), [1, 2])
        assert list(sol.solution) == [1, 0]
        assert sol.kernel.tolist() == [[3, 1]]

    def test_solution_count_by_enumeration(self):
        rng = random.Random(1)
        for _ in range(40):
            p = rng.choice([3, 5])
            rows, cols = rng.randrange(1, 4), rng.randrange(1, 4)
            if p**cols > 5**4:
                continue
            a = FpMatrix(p, [[rng.randrange(p) for _ in range(cols)] for _ in range(rows)])
            y = np.array([rng.randrange(p) for _ in range(rows)])
            sols = [
                v
                for v in itertools.product(range(p), repeat=cols)
                if not ((a.entries @ np.array(v) - y) % p).any()
            ]
            got = solve_linear(a, y)
            if got is None:
                assert sols == []
            else:
                assert not ((a.entries @ got.solution - y) % p).any()
                for k in got.kernel:
                    assert not ((a.entries @ k) % p).any()
                assert len(sols) == p**got.kernel_rank

    def test_kernel_echelon_deterministic(self):
        k = kernel_basis(np.array([[1, 2, 0], [0, 0, 1]]), 5)
        assert k.tolist() == [[3, 1, 0]]


@pytest.mark.skipif(not HAVE_EXT, reason="compiled kernel unavailable")
class TestBackends:
    def test_rref_agreement(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = int(rng.choice([3, 5, 11]))
            rows, cols = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            m = rng.integers(0, p, size=(rows, cols)).astype(np.int64)
            m1, m2 = m.copy(), m.copy()
            piv1 = _fpkernel.rref(m1, p)
            piv2 = _fpkernel_py.rref(m2, p)
            assert list(piv1) == list(piv2)
            assert np.array_equal(m1, m2)


class TestMisc:
    def test_is_prime(self):
        assert [n for n in range(2, 40) if is_prime(n)] == [
            2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37,
        ]

    def test_inv_mod(self):
        assert inv_mod(2, 5) == 3

    def test_weighted_scalars(self):
        a = WeightedScalar(2, 1, 5)
        b = WeightedScalar(3, 2, 5)
        assert (a * a).weight == 2
        assert (a * a + b).value == (4 + 3) % 5
        with pytest.raises(ValueError):
            a + b
