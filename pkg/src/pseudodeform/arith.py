"""Elementary number-theoretic level criteria.

Everything here is deterministic and exact: primality by fixed-base
Miller-Rabin (valid for the 64-bit range), discrete logs by a power table
of the least primitive root, and the congruence/power-residue conditions
that qualify a prime pair (ell0, ell1) as an admissible level.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ring import is_prime


def least_primitive_root(q: int) -> int:
    """Smallest generator of F_q^x (q an odd prime)."""
    if not is_prime(q) or q == 2:
        raise ValueError(f"{q} is not an odd prime")
    factors = _prime_factors(q - 1)
    for g in range(2, q):
        if all(pow(g, (q - 1) // f, q) != 1 for f in factors):
            return g
    raise AssertionError("no primitive root found")


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def discrete_log(x: int, p: int, ell0: int) -> int:
    """Index of x in F_ell0^x w.r.t. the least primitive root, reduced mod p.

    Fixed convention: log(g) = 1 for the least primitive root g.  Requires
    ell0 = 1 mod p so the reduction is a surjection onto F_p.
    """
    if ell0 % p != 1:
        raise ValueError(f"{ell0} is not 1 mod {p}")
    x %= ell0
    if x == 0:
        raise ValueError("discrete log of zero")
    table = _log_table(ell0)
    return table[x] % p


_LOG_CACHE: dict[int, dict[int, int]] = {}


def _log_table(ell0: int) -> dict[int, int]:
    table = _LOG_CACHE.get(ell0)
    if table is None:
        g = least_primitive_root(ell0)
        table = {}
        acc = 1
        for k in range(ell0 - 1):
            table[acc] = k
            acc = acc * g % ell0
        _LOG_CACHE[ell0] = table
    return table


def merel_number(p: int, ell0: int) -> int:
    """sum_{i=1}^{(ell0-1)/2} i * log(i) in F_p, least-primitive-root log.

    The value depends on the log convention (scaling the log scales the
    sum) but its vanishing does not.
    """
    if ell0 % p != 1:
        raise ValueError(f"{ell0} is not 1 mod {p}")
    table = _log_table(ell0)
    total = sum(i * table[i] for i in range(1, (ell0 - 1) // 2 + 1))
    return total % p


def is_pth_power(ell1: int, p: int, ell0: int) -> bool:
    """Whether ell1 is a p-th power residue mod ell0."""
    if ell0 % p != 1:
        raise ValueError(f"{ell0} is not 1 mod {p}")
    if ell1 % ell0 == 0:
        raise ValueError("ell1 must be prime to ell0")
    return pow(ell1, (ell0 - 1) // p, ell0) == 1


def tame_at_p(ell: int, p: int) -> bool:
    """ell^(p-1) = 1 mod p^2: the ramification-at-p degeneracy test."""
    if ell % p == 0:
        raise ValueError("ell must differ from p")
    return pow(ell, p - 1, p * p) == 1


@dataclass(frozen=True)
class LevelCandidate:
    p: int
    ell0: int
    ell1: int
    cond1: bool  # ell0 = 1 mod p
    cond2: bool  # ell1 != 0, +-1 mod p and a p-th power mod ell0
    merel_nonzero: bool
    tame_at_p: bool
    merel_value: int | None  # None when cond1 fails (log undefined)

    def admissible(self) -> bool:
        return self.cond1 and self.cond2 and self.merel_nonzero

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "ell0": self.ell0,
            "ell1": self.ell1,
            "cond1": self.cond1,
            "cond2": self.cond2,
            "merel_nonzero": self.merel_nonzero,
            "tame_at_p": self.tame_at_p,
            "merel_value": self.merel_value,
        }


def check_level(p: int, ell0: int, ell1: int) -> LevelCandidate:
    if p < 5 or not is_prime(p):
        raise ValueError("p must be a prime >= 5")
    if not is_prime(ell0) or not is_prime(ell1):
        raise ValueError("ell0 and ell1 must be prime")
    if ell0 == p or ell1 == p or ell0 == ell1:
        raise ValueError("p, ell0, ell1 must be three distinct primes")
    cond1 = ell0 % p == 1
    residue = ell1 % p
    if cond1:
        cond2 = residue not in (0, 1, p - 1) and is_pth_power(ell1, p, ell0)
        merel = merel_number(p, ell0)
    else:
        cond2 = False
        merel = None
    return LevelCandidate(
        p=p, ell0=ell0, ell1=ell1, cond1=cond1, cond2=cond2,
        merel_nonzero=merel is not None and merel != 0,
        tame_at_p=tame_at_p(ell1, p),
        merel_value=merel,
    )


def scan_levels(p: int, ell0: int, max_ell1: int) -> list[LevelCandidate]:
    """All primes ell1 <= max_ell1 passing the residue/power conditions.

    The output is a prefix-stable ascending list; the Merel flag is a
    property of (p, ell0) alone and is attached to every row.
    """
    if p < 5 or not is_prime(p):
        raise ValueError("p must be a prime >= 5")
    if not is_prime(ell0):
        raise ValueError("ell0 must be prime")
    if ell0 % p != 1:
        raise ValueError(f"ell0 = {ell0} is not 1 mod {p}")
    out = []
    for ell1 in range(2, max_ell1 + 1):
        if ell1 in (p, ell0) or not is_prime(ell1):
            continue
        cand = check_level(p, ell0, ell1)
        if cand.cond2:
            out.append(cand)
    return out
