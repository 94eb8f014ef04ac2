"""Classification of diagonal Sp(2n, Z)-orbits on primitive vector pairs.

A pair of primitive, linearly independent u, v in Z^{2n} is classified by

    s = <u, v>                     (symplectic value, any sign)
    d = gcd of all 2x2 minors of the 2n x 2 matrix (u | v)   (d >= 1)
    a = the residue class mod d with v = a*u mod d*L, where L is the
        saturation of span(u, v) in Z^{2n}

and every pair reduces, by an explicit word in the generators u_S, l_S and
block-diagonal GL(n, Z) moves, to the canonical representative

    (e^1,  a e^1 + s f^1 + d f^n)        with 0 <= a < d, gcd(a, d) = 1,

where d | s whenever s != 0.  The reduction returns the integer symplectic
witness gamma achieving it, so every result is self-certifying: the caller
can check gamma (u, v) = canonical exactly.

For n = 1 there is no f^n slot: the canonical pair is (e^1, a e^1 + s f^1)
with a reduced mod |s| (and the minors gcd equals |s|); these classes carry
kind "planar".  For n >= 2 a pair whose reduction passes through the flat
shape (a, 0, ..., s, 0, ...) is *not* a separate class: the divisor step
with d' = 0 moves it into the d = |s| class (there is an integer symplectic
map fixing e^1 with f^1 -> f^1 + f^n), so kinds are just "unit" (d = 1) and
"generic" (d > 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np

from symplat.symplectic import (
    SymplecticMatrix,
    Vector2n,
    standard_J,
    symplectic_form,
)

__all__ = [
    "PrimitivePair",
    "OrbitClass",
    "ReductionWitness",
    "minors_gcd",
    "orbit_invariants",
    "invariant_residue",
    "move_to_e1",
    "reduce_pair",
    "same_orbit",
    "transporter_T",
    "canonical_pair",
]


def _int_vec(v) -> np.ndarray:
    arr = v.coords if isinstance(v, Vector2n) else np.asarray(v, dtype=object)
    out = np.empty(arr.shape[0], dtype=object)
    for i, t in enumerate(arr):
        out[i] = int(t)
    return out


def _is_primitive(arr) -> bool:
    g = 0
    for t in arr:
        g = gcd(g, int(t))
    return g == 1


@dataclass(frozen=True)
class PrimitivePair:
    """Ordered pair of primitive, linearly independent vectors in Z^{2n}."""

    u: Vector2n
    v: Vector2n

    def __post_init__(self):
        u = self.u if isinstance(self.u, Vector2n) else Vector2n(_int_vec(self.u))
        v = self.v if isinstance(self.v, Vector2n) else Vector2n(_int_vec(self.v))
        if u.ring != "int" or v.ring != "int":
            raise ValueError("pair must be integral")
        if len(u) != len(v):
            raise ValueError("dimension mismatch")
        if not _is_primitive(u.coords) or not _is_primitive(v.coords):
            raise ValueError("both vectors must be primitive (coordinate gcd 1)")
        if minors_gcd_raw(u.coords, v.coords) == 0:
            raise ValueError("vectors must be linearly independent")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.u.n


@dataclass(frozen=True)
class OrbitClass:
    """The invariant triple (s, d, a) plus the half-dimension and a kind tag."""

    n: int
    s: int
    d: int
    a: int
    kind: str  # "generic" | "unit" | "planar" (planar only at n = 1)

    def key(self):
        return (self.n, self.s, self.d, self.a)


@dataclass(frozen=True)
class ReductionWitness:
    """Integer symplectic gamma with gamma (u, v) = canonical, plus a step log."""

    gamma: SymplecticMatrix
    canonical: PrimitivePair
    steps: tuple = field(default_factory=tuple)


def minors_gcd_raw(u, v) -> int:
    m = len(u)
    g = 0
    for i in range(m):
        ui, vi = int(u[i]), int(v[i])
        for j in range(i + 1, m):
            g = gcd(g, ui * int(v[j]) - int(u[j]) * vi)
            if g == 1:
                return 1
    return abs(g)


def minors_gcd(p: PrimitivePair) -> int:
    """gcd over all C(2n, 2) two-by-two minors of (u | v); 0 only if dependent."""
    return minors_gcd_raw(p.u.coords, p.v.coords)


def _ext_gcd(a: int, b: int):
    """(g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return (g, y, x - (a // b) * y)


def _concentrator(w):
    """A in GL(k, Z) with A w = (g, 0, ..., 0), g = gcd(w) >= 0."""
    k = len(w)
    A = [[1 if i == j else 0 for j in range(k)] for i in range(k)]
    g = int(w[0])
    for i in range(1, k):
        wi = int(w[i])
        if wi == 0 and g != 0:
            continue
        g2, p, q = _ext_gcd(g, wi)
        if g2 == 0:
            continue
        r0 = [p * A[0][j] + q * A[i][j] for j in range(k)]
        r1 = [(-wi // g2) * A[0][j] + (g // g2) * A[i][j] for j in range(k)]
        A[0], A[i] = r0, r1
        g = g2
    if g < 0:  # can only happen for k == 1
        A[0] = [-t for t in A[0]]
        g = -g
    return np.array(A, dtype=object), g


def _concentrate_last(red: _Reducer, values, on: str):
    """Move the gcd of the trailing n-1 coordinates into the last slot.

    `values` is the current (length n-1) coordinate window of red.v; the move
    is a block-diagonal generator fixing e^1, skipped when already in the
    (0, ..., 0, g >= 0) shape.
    """
    n = red.n
    g = 0
    for t in values:
        g = gcd(g, int(t))
    if all(int(t) == 0 for t in values[:-1]) and int(values[-1]) == g:
        return g
    C, g0 = _concentrator(values)
    assert g0 == g
    P = np.roll(np.identity(n - 1, dtype=object), -1, axis=0)
    red.block_diag(_embed_first(np.dot(P, C), n), on=on)
    return g


class _Reducer:
    """Accumulates generator moves applied diagonally to a working pair."""

    def __init__(self, u, v):
        self.n = len(u) // 2
        self.u = _int_vec(u)
        self.v = _int_vec(v)
        dim = 2 * self.n
        self.gamma = np.identity(dim, dtype=object)
        self.steps = []

    def _apply(self, M, kind, payload):
        if all(M[i, j] == (1 if i == j else 0) for i in range(M.shape[0]) for j in range(M.shape[1])):
            return  # no-op moves are not recorded
        self.u = np.dot(M, self.u)
        self.v = np.dot(M, self.v)
        self.gamma = np.dot(M, self.gamma)
        self.steps.append((kind, payload))

    def upper(self, S):
        n = self.n
        M = np.identity(2 * n, dtype=object)
        M[:n, n:] = S
        self._apply(M, "upper", tuple(map(tuple, S)))

    def lower(self, S):
        n = self.n
        M = np.identity(2 * n, dtype=object)
        M[n:, :n] = S
        self._apply(M, "lower", tuple(map(tuple, S)))

    def block_diag(self, A, on: str = "x"):
        """Apply [[A, 0], [0, A^{-T}]]; on="y" applies A to the y-part instead."""
        n = self.n
        from symplat.symplectic import _unimodular_inverse_transpose

        A = np.array(A, dtype=object)
        Ait = _unimodular_inverse_transpose(A)
        if on == "y":
            A, Ait = Ait, A
        M = np.zeros((2 * n, 2 * n), dtype=object)
        M[:n, :n] = A
        M[n:, n:] = Ait
        self._apply(M, "block_diag", tuple(map(tuple, A)))

    def J(self):
        self._apply(standard_J(self.n), "J", None)

    def sym_single(self, i, q):
        """Symmetric matrix q E_ii."""
        S = np.zeros((self.n, self.n), dtype=object)
        S[i, i] = q
        return S

    def sym_cross(self, i, j, q):
        """Symmetric matrix q (E_ij + E_ji), i != j."""
        S = np.zeros((self.n, self.n), dtype=object)
        S[i, j] = q
        S[j, i] = q
        return S

    def divisor_step(self, M):
        self._apply(M, "divisor_step", tuple(map(tuple, M)))

    # -- two-slot Euclidean machinery -------------------------------------
    #
    # Each "slot pair" exposes (value of slot A, value of slot B) together
    # with generator moves A += q*B and B += q*A.  The swap (A, B) -> (B, -A)
    # is the composite A+=B, B-=A, A+=B.  euclid() drives the pair to
    # (0, gcd >= 0), which is the termination normal form used everywhere.

    def _euclid(self, get, add_a, add_b):
        def swap():
            add_a(1)
            add_b(-1)
            add_a(1)

        a, b = get()
        while a != 0 and b != 0:
            if abs(a) >= abs(b):
                add_a(-(a // b))
            else:
                add_b(-(b // a))
            a, b = get()
        if a != 0:
            swap()
            a, b = get()
        if b < 0:
            swap()
            swap()
            a, b = get()
        assert a == 0 and b >= 0

    def euclid_plane(self, i, a_slot: str):
        """Euclid on (x_i, y_i); a_slot names which of "x"/"y" is driven to 0."""
        if a_slot == "y":
            get = lambda: (int(self.v[self.n + i]), int(self.v[i]))
            add_a = lambda q: self.lower(self.sym_single(i, q))
            add_b = lambda q: self.upper(self.sym_single(i, q))
        else:
            get = lambda: (int(self.v[i]), int(self.v[self.n + i]))
            add_a = lambda q: self.upper(self.sym_single(i, q))
            add_b = lambda q: self.lower(self.sym_single(i, q))
        self._euclid(get, add_a, add_b)

    def euclid_cross(self, i, j, a_slot: str):
        """Euclid on (x_i, y_j), i != j; requires x_j = y_i = 0 and keeps them 0."""
        n = self.n
        assert self.v[j] == 0 and self.v[n + i] == 0
        if a_slot == "x":
            get = lambda: (int(self.v[i]), int(self.v[n + j]))
            add_a = lambda q: self.upper(self.sym_cross(i, j, q))
            add_b = lambda q: self.lower(self.sym_cross(i, j, q))
        else:
            get = lambda: (int(self.v[n + j]), int(self.v[i]))
            add_a = lambda q: self.lower(self.sym_cross(i, j, q))
            add_b = lambda q: self.upper(self.sym_cross(i, j, q))
        self._euclid(get, add_a, add_b)


def _move_to_e1_inplace(red: _Reducer):
    """Drive red.v (primitive) to e^1 with generator moves."""
    n = red.n
    if all(t == 0 for t in red.v[:n]):
        red.J()
    if n == 1:
        red.euclid_plane(0, "y")  # (y_1, x_1) -> (0, 1)
    else:
        x = red.v[:n]
        if not (int(x[0]) >= 0 and all(int(t) == 0 for t in x[1:])):
            A, _ = _concentrator(x)
            red.block_diag(A, on="x")  # x -> (gx, 0, ..., 0)
        _concentrate_last(red, red.v[n + 1 :], on="y")  # (y_2..y_n) -> (0,..,0,d0)
        red.euclid_plane(0, "y")  # (y_1, x_1) -> (0, g1)
        red.euclid_cross(0, n - 1, "y")  # (y_n, x_1) -> (0, 1)
    if red.v[0] != 1:
        raise ArithmeticError("transitivity reduction failed (input not primitive?)")


def _embed_first(C, n):
    """[[1, 0], [0, C]] in GL(n, Z) for C in GL(n-1, Z)."""
    A = np.identity(n, dtype=object)
    A[1:, 1:] = C
    return A


def move_to_e1(u) -> SymplecticMatrix:
    """Integer symplectic gamma with gamma u = e^1, for primitive u."""
    uu = _int_vec(u)
    if not _is_primitive(uu):
        raise ValueError("input vector is not primitive")
    red = _Reducer(uu, uu)
    _move_to_e1_inplace(red)
    return SymplecticMatrix(red.gamma)


def _divisor_step_matrix_n2(r: int, k: int, l: int) -> np.ndarray:
    return np.array(
        [[1, 0, 0, k], [0, r, r * k, r * l - 1], [0, 0, 1, 0], [0, 1, k, l]],
        dtype=object,
    )


def _divisor_step_matrix_embedded(n: int, k: int, l: int) -> np.ndarray:
    """Sends (a, 0, .., s, .., d') to (a, -d' at x_2, .., s, .., d), acting on
    the coordinate planes (1, 2, n)."""
    i1, i2, i3 = 0, 1, n - 1  # x-slots; y-slots offset by n
    M = np.identity(2 * n, dtype=object)
    for idx in (i1, i2, i3):
        M[idx, idx] = 0
        M[n + idx, n + idx] = 0
    M[i1, i1] = 1
    M[i1, n + i2] = k
    M[i2, n + i3] = -1
    M[i3, n + i2] = -1
    M[n + i1, n + i1] = 1
    M[n + i2, i3] = 1
    M[n + i2, n + i2] = l
    M[n + i3, i2] = 1
    M[n + i3, n + i1] = k
    M[n + i3, n + i3] = l
    return M


def reduce_pair(p: PrimitivePair) -> ReductionWitness:
    """Reduce a pair to its canonical representative with an explicit witness.

    Stages: (1) move u to e^1; (2) concentrate the trailing y-part of v into
    y_n; (3) Euclidean elimination of x_n, ..., x_2 against y_n (or, if the
    y-part vanished, concentrate the trailing x-part and swap it into y_n);
    (4) the divisor step replacing d' = y_n by d = gcd(d', s); (5) reduction
    of the leading coefficient mod d.  Every move is an integer symplectic
    generator, so the witness verifies by multiplication.
    """
    if not isinstance(p, PrimitivePair):
        p = PrimitivePair(*p)
    n = p.n
    s = int(symplectic_form(p.u, p.v))
    # stage 1: move u to e^1, transporting v by the same moves
    red = _Reducer(p.v.coords, p.u.coords)  # reducer drives its .v slot
    _move_to_e1_inplace(red)
    red.u, red.v = red.v, red.u  # now u = e^1, v = transported second vector
    assert red.u[0] == 1 and all(t == 0 for t in red.u[1:])
    assert int(red.v[n]) == s

    if n == 1:
        d = abs(s)
        a = int(red.v[0]) % d
        delta = (a - int(red.v[0])) // s
        if delta != 0:
            red.upper(red.sym_single(0, delta))
        kind = "planar"
    else:
        # stage 2: (y_2, ..., y_n) -> (0, ..., 0, d0)
        d0 = _concentrate_last(red, red.v[n + 1 :], on="y")
        if d0 != 0:
            red.euclid_plane(n - 1, "x")  # (x_n, y_n) -> (0, d1)
            for i in range(n - 2, 0, -1):
                red.euclid_cross(i, n - 1, "x")  # (x_i, y_n) -> (0, d_next)
        else:
            # flat y-part: concentrate (x_2, ..., x_n) into x_n, then swap
            _concentrate_last(red, red.v[1:n], on="x")
            red.euclid_plane(n - 1, "x")  # (x_n, 0) -> (0, x_n)
        d_prime = int(red.v[2 * n - 1])
        assert d_prime >= 0 and all(t == 0 for t in red.v[1:n])
        # stage 4: d' -> d = gcd(d', s)
        d, k, l = _ext_gcd(s, d_prime)
        if d != d_prime:
            r = d_prime // d
            if n == 2:
                red.divisor_step(_divisor_step_matrix_n2(r, k, l))
            else:
                red.divisor_step(_divisor_step_matrix_embedded(n, k, l))
                red.upper(red.sym_cross(1, n - 1, r))
        # stage 5: a mod d, moving x_1 by multiples of d without disturbance
        a = int(red.v[0]) % d
        delta = (a - int(red.v[0])) // d
        if delta != 0:
            S = red.sym_cross(0, n - 1, delta)
            S[n - 1, n - 1] = -delta * (s // d)
            red.upper(S)
        kind = "unit" if d == 1 else "generic"

    canonical = PrimitivePair(Vector2n(red.u), Vector2n(red.v))
    witness = ReductionWitness(SymplecticMatrix(red.gamma), canonical, tuple(red.steps))
    _check_witness(p, witness, s, d, a, kind)
    return witness


def _check_witness(p, w, s, d, a, kind):
    g = w.gamma.entries
    if not (
        np.array_equal(np.dot(g, p.u.coords), w.canonical.u.coords)
        and np.array_equal(np.dot(g, p.v.coords), w.canonical.v.coords)
    ):
        raise ArithmeticError("reduction witness failed to verify")
    n = p.n
    vc = w.canonical.v.coords
    shape_ok = all(t == 0 for i, t in enumerate(vc) if i not in (0, n, 2 * n - 1))
    if not shape_ok or vc[n] != s or not (0 <= a < max(d, 1)):
        raise ArithmeticError("canonical form has unexpected shape")


def orbit_invariants(p: PrimitivePair) -> OrbitClass:
    """Classify a pair; (s, d) are direct, a comes from the reduction."""
    if not isinstance(p, PrimitivePair):
        p = PrimitivePair(*p)
    s = int(symplectic_form(p.u, p.v))
    d = minors_gcd(p)
    w = reduce_pair(p)
    a = int(w.canonical.v.coords[0])
    kind = "planar" if p.n == 1 else ("unit" if d == 1 else "generic")
    if p.n >= 2 and int(w.canonical.v.coords[2 * p.n - 1]) != d:
        raise ArithmeticError("reduction divisor disagrees with minors gcd")
    if p.n == 1 and d != abs(s):
        raise ArithmeticError("n=1 minors gcd must equal |s|")
    return OrbitClass(p.n, s, d, a, kind)


def invariant_residue(u, v, d: int) -> int:
    """The residue a mod d directly from pairings, without any reduction.

    For every integer z one has <z, v> = a <z, u> (mod d); since u is
    primitive some z makes <z, u> invertible mod d.  This is the independent
    cross-check for the a produced by reduce_pair.
    """
    if d == 1:
        return 0
    uu, vv = _int_vec(u), _int_vec(v)
    m = len(uu)
    n = m // 2

    def pairing(z):
        return int(symplectic_form(z, uu)), int(symplectic_form(z, vv))

    candidates = []
    eye = np.identity(m, dtype=object)
    candidates.extend(eye[i] for i in range(m))
    candidates.extend(eye[i] + eye[j] for i in range(m) for j in range(i + 1, m))
    rng = np.random.default_rng(12345)
    for _ in range(200):
        candidates.append(np.array([int(t) for t in rng.integers(-3, 4, size=m)], dtype=object))
    for z in candidates:
        pu, pv = pairing(z)
        if gcd(pu, d) == 1:
            return (pv * pow(pu, -1, d)) % d
    raise ArithmeticError("no pairing vector found with unit value mod d")


def same_orbit(p1: PrimitivePair, p2: PrimitivePair):
    """(equal, witness): equal iff the invariant triples coincide; the witness
    gamma satisfies gamma p1 = p2 and is assembled from the two reductions."""
    if not isinstance(p1, PrimitivePair):
        p1 = PrimitivePair(*p1)
    if not isinstance(p2, PrimitivePair):
        p2 = PrimitivePair(*p2)
    if p1.n != p2.n:
        return False, None
    w1 = reduce_pair(p1)
    w2 = reduce_pair(p2)
    if not np.array_equal(w1.canonical.v.coords, w2.canonical.v.coords):
        return False, None
    gamma = w2.gamma.inverse() @ w1.gamma
    assert np.array_equal(gamma.apply(p1.u.coords), p2.u.coords)
    assert np.array_equal(gamma.apply(p1.v.coords), p2.v.coords)
    return True, gamma


def canonical_pair(n: int, s: int, d: int, a: int) -> PrimitivePair:
    """The canonical representative for the class (s, d, a); d = |s| at n = 1."""
    if n == 1:
        if d != abs(s) or s == 0:
            raise ValueError("at n=1 the divisor is |s| and s must be nonzero")
    else:
        if d < 1 or (s != 0 and s % d != 0):
            raise ValueError("need d >= 1 dividing s")
    if gcd(a, d) != 1 and not (d == 1 and a % 1 == 0):
        raise ValueError("a must be a unit mod d")
    dim = 2 * n
    u = np.zeros(dim, dtype=object)
    u[0] = 1
    v = np.zeros(dim, dtype=object)
    v[0] = a
    v[n] = s
    if n >= 2:
        v[2 * n - 1] = d
    return PrimitivePair(Vector2n(u), Vector2n(v))


def transporter_T(cls: OrbitClass) -> SymplecticMatrix:
    """The rational symplectic transporter for a class with s != 0.

    Its columns follow the explicit basis: it fixes e^1, and it carries
    s f^1 to the canonical second vector a e^1 + s f^1 + d f^n (so its
    inverse maps the canonical pair onto (e^1, s f^1)).  All denominators
    divide s.
    """
    from fractions import Fraction

    n, s, d, a = cls.n, cls.s, cls.d, cls.a
    if s == 0:
        raise ValueError("transporter undefined for s = 0")
    dim = 2 * n
    T = np.zeros((dim, dim), dtype=object)
    T[:] = 0
    for j in range(dim):
        T[j, j] = Fraction(1)
    if n == 1:
        T[0, 1] = Fraction(a, s)
    else:
        T[0, n - 1] = Fraction(-d, s)  # column of e^n picks up -(d/s) e^1
        T[0, n] = Fraction(a, s)  # column of f^1 picks up (a/s) e^1
        T[2 * n - 1, n] = Fraction(d, s)  # ... and (d/s) f^n
    M = SymplecticMatrix(T, "rational")
    sf1 = np.zeros(dim, dtype=object)
    sf1[n] = s
    target = canonical_pair(n, s, d, a).v.coords
    assert all(Fraction(t) == Fraction(c) for t, c in zip(M.apply(sf1), target))
    return M
