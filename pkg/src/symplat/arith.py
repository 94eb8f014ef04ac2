"""Multiplicative arithmetic for the orbit-weighted second moment.

The weight attached to the symplectic value s in half-dimension n is

    a(s) = (phi * X)(s) / (s^{2n-1} zeta(2n)),      m = n - 1,
    X(s) = s^{2m+1} prod_{p | s} (1 - p^{-2m}),

where * is Dirichlet convolution and phi the Euler totient.  X is the
stabilizer index of the orbit with divisor d = 1 at value s; summing the
indices against phi(d) over all divisors produces the convolution.  The
Dirichlet series of phi * X is zeta(sigma - 2n + 1) / zeta(sigma), its
partial sums grow like M^{2n} / (2n zeta(2n)), and the normalized summatory
A(M) of a(s) tends to M / zeta(2n)^2.

Everything in this module is exact (Python ints and Fractions) except the
floating point diagnostics, which use zeta values good to >= 15 significant
digits.  Each formula has an independent brute-force or series oracle used
by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "zeta_value",
    "X_func",
    "phi_star_X",
    "phi_star_X_naive",
    "a_coeff",
    "ArithmeticTable",
    "summatory_A",
    "a_rational_prefix",
    "sp_order_mod_q",
    "stabilizer_index",
    "brute_index_sl2",
    "sq_orders",
    "lfun_check",
    "tail_kernel",
    "IndexReport",
]


# ----------------------------------------------------------------------
# zeta values: Bernoulli closed forms at even integers, Euler-Maclaurin
# elsewhere.  Both give >= 15 significant digits for sigma >= 1.5.
# ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _bernoulli(k: int) -> Fraction:
    if k == 0:
        return Fraction(1)
    if k == 1:
        return Fraction(-1, 2)
    if k % 2 == 1:
        return Fraction(0)
    total = Fraction(0)
    for j in range(k):
        total += Fraction(math.comb(k + 1, j)) * _bernoulli(j)
    return -total / (k + 1)


def _zeta_euler_maclaurin(sigma: float, cutoff: int = 40, corrections: int = 8) -> float:
    if sigma <= 1.0:
        raise ValueError("need sigma > 1")
    total = math.fsum(j ** (-sigma) for j in range(1, cutoff))
    total += cutoff ** (1.0 - sigma) / (sigma - 1.0)
    total += 0.5 * cutoff ** (-sigma)
    rising = sigma
    power = cutoff ** (-sigma - 1.0)
    for r in range(1, corrections + 1):
        coeff = float(_bernoulli(2 * r)) / math.factorial(2 * r)
        total += coeff * rising * power
        rising *= (sigma + 2 * r - 1) * (sigma + 2 * r)
        power /= cutoff * cutoff
    return total


def zeta_value(sigma) -> float:
    """zeta(sigma) for real sigma > 1; exact Bernoulli form at even integers."""
    if float(sigma) == int(sigma) and int(sigma) % 2 == 0 and 2 <= int(sigma) <= 60:
        k = int(sigma) // 2
        rational = (
            Fraction((-1) ** (k + 1))
            * _bernoulli(2 * k)
            / (2 * math.factorial(2 * k))
        )
        return float(rational) * (2.0 * math.pi) ** (2 * k)
    return _zeta_euler_maclaurin(float(sigma))


# ----------------------------------------------------------------------
# pointwise values
# ----------------------------------------------------------------------


def _factorize(s: int):
    out = []
    p = 2
    while p * p <= s:
        if s % p == 0:
            e = 0
            while s % p == 0:
                s //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if s > 1:
        out.append((s, 1))
    return out


def X_func(s: int, n: int) -> int:
    """X(s) = s^{2m+1} prod_{p|s} (1 - p^{-2m}) with m = n - 1, exact.

    Computed as a rational and asserted integral.  For n = 1 the product
    collapses to 0 at every s > 1, leaving the convolution identity element.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    m = n - 1
    value = Fraction(s) ** (2 * m + 1)
    for p, _ in _factorize(s):
        value *= 1 - Fraction(1, p ** (2 * m)) if m > 0 else 0
    if s == 1:
        value = Fraction(1)
    assert value.denominator == 1, "X(s) failed integrality"
    return int(value)


def _phi(s: int) -> int:
    v = s
    for p, _ in _factorize(s):
        v = v // p * (p - 1)
    return v


def phi_star_X(s: int, n: int) -> int:
    """(phi * X)(s) built multiplicatively from honest prime-power convolutions."""
    if s < 1:
        raise ValueError("s must be >= 1")
    total = 1
    for p, e in _factorize(s):
        total *= _conv_prime_power(p, e, n)
    return total


def _conv_prime_power(p: int, e: int, n: int) -> int:
    acc = 0
    for i in range(e + 1):
        phi_pi = 1 if i == 0 else p ** (i - 1) * (p - 1)
        acc += phi_pi * X_func(p ** (e - i), n)
    return acc


def phi_star_X_naive(s: int, n: int) -> int:
    """Independent oracle: literal divisor-sum convolution, O(s) per value."""
    total = 0
    for d in range(1, s + 1):
        if s % d == 0:
            total += _phi(d) * X_func(s // d, n)
    return total


@dataclass(frozen=True)
class ACoeff:
    """a(s) split as an exact rational times the symbolic factor 1/zeta(2n)."""

    rational: Fraction
    zeta_argument: int

    def value(self) -> float:
        return float(self.rational) / zeta_value(self.zeta_argument)


def a_coeff(s: int, n: int) -> ACoeff:
    """a(s) = (phi*X)(s) / (s^{2n-1} zeta(2n)); rational part lies in (0, 1]."""
    if s < 1:
        raise ValueError("a(s) needs s >= 1 (use |s| for signed values)")
    rat = Fraction(phi_star_X(s, n), s ** (2 * n - 1))
    assert 0 < rat <= 1
    return ACoeff(rat, 2 * n)


# ----------------------------------------------------------------------
# sieve tables
# ----------------------------------------------------------------------


def _spf_array(limit: int) -> np.ndarray:
    spf = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, int(limit**0.5) + 1):
        if spf[p] == p:
            sl = spf[p * p :: p]
            np.minimum(sl, p, out=sl)
    return spf


class ArithmeticTable:
    """Sieved values of phi, X and phi*X for 1 <= s <= limit (exact ints).

    Built multiplicatively off a smallest-prime-factor table; the naive
    divisor-sum convolution stays available as the independent oracle.
    """

    def __init__(self, n: int, limit: int):
        if n < 1 or limit < 1:
            raise ValueError("need n >= 1 and limit >= 1")
        self.n = n
        self.limit = limit
        spf = _spf_array(limit)
        m = n - 1
        phi = [0] * (limit + 1)
        X = [0] * (limit + 1)
        conv = [0] * (limit + 1)
        phi[1] = X[1] = conv[1] = 1
        pp_cache: dict[tuple[int, int], tuple[int, int, int]] = {}
        for s in range(2, limit + 1):
            p = int(spf[s])
            e = 0
            rest = s
            while rest % p == 0:
                rest //= p
                e += 1
            key = (p, e)
            vals = pp_cache.get(key)
            if vals is None:
                phi_pp = p ** (e - 1) * (p - 1)
                if m == 0:
                    X_pp = 0
                else:
                    X_pp = p ** ((e - 1) * (2 * m + 1)) * (p ** (2 * m + 1) - p)
                conv_pp = 0
                xs = [1] + [
                    (p ** ((j - 1) * (2 * m + 1)) * (p ** (2 * m + 1) - p) if m > 0 else 0)
                    for j in range(1, e + 1)
                ]
                for i in range(e + 1):
                    phi_pi = 1 if i == 0 else p ** (i - 1) * (p - 1)
                    conv_pp += phi_pi * xs[e - i]
                vals = (phi_pp, X_pp, conv_pp)
                pp_cache[key] = vals
            phi[s] = phi[rest] * vals[0]
            X[s] = X[rest] * vals[1]
            conv[s] = conv[rest] * vals[2]
        self.phi = phi
        self.X = X
        self.conv = conv

    def a_rational(self, s: int) -> Fraction:
        return Fraction(self.conv[s], s ** (2 * self.n - 1))

    def rows(self):
        for s in range(1, self.limit + 1):
            yield s, self.phi[s], self.X[s], self.conv[s], self.a_rational(s)


_MAX_EXACT_SUM = 20_000


@dataclass(frozen=True)
class SummatoryReport:
    n: int
    M: int
    rational_sum: Fraction | None  # sum of a-rational parts, exact when feasible
    float_sum: float
    ratio: float  # A(M) zeta(2n)^2 / M


def summatory_A(M: int, n: int, table: ArithmeticTable | None = None) -> SummatoryReport:
    """Partial sums of a(s) with the diagnostic ratio A(M) zeta(2n)^2 / M.

    The rational part is summed exactly up to M = 20000 (beyond that the
    common denominator makes exact accumulation useless in practice, and the
    compensated float sum carries ~1e-12 relative error against a 1e-2
    acceptance tolerance).
    """
    if M < 1:
        raise ValueError("M >= 1")
    if table is None or table.limit < M or table.n != n:
        table = ArithmeticTable(n, M)
    k = 2 * n - 1
    float_sum = math.fsum(table.conv[s] / s**k for s in range(1, M + 1))
    rational = None
    if M <= _MAX_EXACT_SUM:
        rational = Fraction(0)
        for s in range(1, M + 1):
            rational += Fraction(table.conv[s], s**k)
    z = zeta_value(2 * n)
    ratio = float_sum * z / M  # = A(M) zeta(2n)^2 / M since A carries 1/zeta
    return SummatoryReport(n, M, rational, float_sum, ratio)


def a_rational_prefix(n: int, s_max: int, table: ArithmeticTable | None = None) -> np.ndarray:
    """cum[k] = sum_{s <= k} (phi*X)(s)/s^{2n-1} as float64, cum[0] = 0."""
    if table is None or table.limit < s_max or table.n != n:
        table = ArithmeticTable(n, s_max)
    k = 2 * n - 1
    vals = np.zeros(s_max + 1)
    for s in range(1, s_max + 1):
        vals[s] = table.conv[s] / s**k
    return np.cumsum(vals)


# ----------------------------------------------------------------------
# finite symplectic group orders and stabilizer indices
# ----------------------------------------------------------------------


def sp_order_mod_q(n: int, q: int) -> int:
    """|Sp(2n, Z/q)| = q^{2n^2+n} prod_{p|q} prod_{i=1}^n (1 - p^{-2i}), exact."""
    if q < 2:
        raise ValueError("q >= 2")
    value = Fraction(q) ** (2 * n * n + n)
    for p, _ in _factorize(q):
        for i in range(1, n + 1):
            value *= 1 - Fraction(1, p ** (2 * i))
    assert value.denominator == 1
    return int(value)


@dataclass(frozen=True)
class IndexReport:
    n: int
    s: int
    d: int
    q: int
    formula_value: int
    oracle_value: int | None = None

    @property
    def match(self) -> bool | None:
        if self.oracle_value is None:
            return None
        return self.oracle_value == self.formula_value


def stabilizer_index(n: int, s: int, d: int, brute: bool = False) -> IndexReport:
    """Index of the orbit stabilizer inside the embedded Sp(2n-2, Z):

        q^{2m+1} prod_{p|q} (1 - p^{-2m}),   q = s/d,  m = n - 1.

    q = 1 gives the full group (index 1).  At n = 1 only q = 1 occurs (the
    minors gcd always equals |s| there), so larger q is rejected.
    """
    if s == 0 or d <= 0 or s % d != 0:
        raise ValueError("need d > 0 dividing s != 0")
    q = abs(s) // d
    m = n - 1
    if q == 1:
        formula = 1
    elif m == 0:
        raise ValueError("n = 1 admits no orbits with q > 1")
    else:
        value = Fraction(q) ** (2 * m + 1)
        for p, _ in _factorize(q):
            value *= 1 - Fraction(1, p ** (2 * m))
        assert value.denominator == 1
        formula = int(value)
    oracle = None
    if brute:
        if n == 2 and 2 <= q <= 8:
            oracle = brute_index_sl2(q)
        elif q == 1:
            oracle = 1
    return IndexReport(n, s, d, q, formula, oracle)


def brute_index_sl2(q: int) -> int:
    """Enumerate SL(2, Z/q^2) and the order-q^3 congruence subgroup

        {(1+qk, 0; l, 1-qk)}  (k mod q, l mod q^2),

    returning the index; asserts the subgroup cardinality is exactly q^3."""
    if not 2 <= q <= 8:
        raise ValueError("enumeration supported for 2 <= q <= 8")
    from symplat import _kernels

    total, sub = _kernels.sl2_and_subgroup_counts(q)
    assert sub == q**3, f"subgroup size {sub} != q^3"
    assert total % sub == 0
    return total // sub


def sq_orders(m: int, q: int):
    """(|S_q|, kernel order, implied index) for the reduced stabilizer image.

    |S_q| = q^{2m^2 - m} prod_{p|q} prod_{i=1}^{m-1} (1 - p^{-2i}); the kernel
    of reduction mod q from level q^2 has order q^{2m^2 + m - 1}; the implied
    index |Sp(2m, Z/q^2)| / (|S_q| ker) must reproduce stabilizer_index.
    """
    if m < 1 or q < 2:
        raise ValueError("need m >= 1, q >= 2")
    sq = Fraction(q) ** (2 * m * m - m)
    for p, _ in _factorize(q):
        for i in range(1, m):
            sq *= 1 - Fraction(1, p ** (2 * i))
    assert sq.denominator == 1
    sq = int(sq)
    kernel = q ** (2 * m * m + m - 1)
    group = sp_order_mod_q(m, q * q)
    assert group % (sq * kernel) == 0
    return sq, kernel, group // (sq * kernel)


# ----------------------------------------------------------------------
# Dirichlet series and tail diagnostics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LfunReport:
    n: int
    sigma: float
    N: int
    partial_sum: float
    target: float  # zeta(sigma - 2n + 1) / zeta(sigma)
    relative_error: float
    tail_bound: float


def lfun_check(n: int, sigma: float, N: int, table: ArithmeticTable | None = None) -> LfunReport:
    """Partial Dirichlet sum of phi*X at sigma versus zeta(sigma-2n+1)/zeta(sigma).

    Absolute convergence needs sigma > 2n; the spec-level tail bound
    sum_{s>N} s^{2n-1-sigma} <= N^{2n-sigma}/(sigma-2n) is reported alongside.
    """
    if sigma <= 2 * n:
        raise ValueError("sigma too small: need sigma > 2n")
    if table is None or table.limit < N or table.n != n:
        table = ArithmeticTable(n, N)
    partial = math.fsum(table.conv[s] * s ** (-sigma) for s in range(1, N + 1))
    target = zeta_value(sigma - 2 * n + 1) / zeta_value(sigma)
    tail = N ** (2 * n - sigma) / (sigma - 2 * n)
    return LfunReport(n, sigma, N, partial, target, abs(partial - target) / target, tail)


@dataclass(frozen=True)
class TailKernelReport:
    n: int
    u: float
    M: int
    displayed: float  # u^{n-1} sum_{u < s <= M} a(s)/s^n
    variant: float  # u^n   sum_{u < s <= M} a(s)/s^{n+1}
    truncation_displayed: float
    truncation_variant: float


def tail_kernel(n: int, u: float, M: int, table: ArithmeticTable | None = None) -> TailKernelReport:
    """Both candidate tail kernels for the cone substitution, with truncation
    estimates from a(s) <= 1/zeta(2n).  No limiting constant is asserted; the
    two normalizations are reported for comparison downstream."""
    if u < 1:
        raise ValueError("u >= 1")
    if M <= u:
        raise ValueError("M must exceed u")
    if table is None or table.limit < M or table.n != n:
        table = ArithmeticTable(n, M)
    z = zeta_value(2 * n)
    k = 2 * n - 1
    lo = int(math.floor(u)) + 1
    disp = math.fsum(table.conv[s] / s**k / s**n for s in range(lo, M + 1)) / z
    var = math.fsum(table.conv[s] / s**k / s ** (n + 1) for s in range(lo, M + 1)) / z
    disp *= u ** (n - 1)
    var *= u**n
    if n >= 2:
        trunc_disp = u ** (n - 1) * M ** (1 - n) / ((n - 1) * z)
    else:
        trunc_disp = float("inf")  # harmonic tail: divergent as written
    trunc_var = u**n * M ** (-n) / (n * z)
    return TailKernelReport(n, u, M, disp, var, trunc_disp, trunc_var)
