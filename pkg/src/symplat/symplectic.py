"""Exact and floating point linear algebra for the symplectic group Sp(2n).

Conventions.  The standard basis of R^{2n} is split into pairs e^1..e^n,
f^1..f^n, a vector v = (x, y) with x the e-part and y the f-part.  The form
matrix is

    J = [[0, I], [-I, 0]]     so    <u, v> = u^T J v = sum_i x_i(u) y_i(v) - y_i(u) x_i(v)

which gives <e^1, f^1> = +1.  The companion map tau(x, y) = (y, -x) is
multiplication by J, and <u, v> = [u, tau(v)] for the Euclidean dot [ , ].

Matrices live in one of three scalar rings:

    "int"       Python ints in an object ndarray (exact)
    "rational"  fractions.Fraction entries in an object ndarray (exact)
    "real"      float64 ndarray; symplectic residuals checked to 1e-9

Exact rings use exact equality everywhere; there is no epsilon in the orbit
algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

REAL_SYMPLECTIC_TOL = 1e-9
PIVOT_TOL = 1e-12

ExactScalar = (int, np.integer, Fraction)


def _as_exact_array(entries) -> np.ndarray:
    """Copy `entries` into an object ndarray of ints/Fractions."""
    arr = np.array(entries, dtype=object)
    flat = arr.ravel()
    for i, v in enumerate(flat):
        if isinstance(v, (int, Fraction)):
            continue
        if isinstance(v, np.integer):
            flat[i] = int(v)
        else:
            raise TypeError(f"not an exact scalar: {v!r} ({type(v).__name__})")
    return arr


def _ring_of(arr: np.ndarray) -> str:
    if arr.dtype == object:
        return "rational" if any(isinstance(v, Fraction) for v in arr.ravel()) else "int"
    return "real"


def coerce_matrix(entries, ring: str | None = None):
    """Return (ndarray, ring) with the array dtype matching the ring."""
    if ring == "real":
        return np.asarray(entries, dtype=float), "real"
    if ring in ("int", "rational"):
        return _as_exact_array(entries), ring
    if ring is None:
        arr = np.asarray(entries)
        if arr.dtype == object or np.issubdtype(arr.dtype, np.integer):
            exact = _as_exact_array(entries)
            return exact, _ring_of(exact)
        return arr.astype(float), "real"
    raise ValueError(f"unknown ring {ring!r}")


def standard_J(n: int, ring: str = "int") -> np.ndarray:
    """The form matrix J = [[0, I], [-I, 0]] for half-dimension n."""
    if ring == "real":
        J = np.zeros((2 * n, 2 * n))
    else:
        J = np.zeros((2 * n, 2 * n), dtype=object)
        J[:] = 0
    for i in range(n):
        J[i, n + i] = 1
        J[n + i, i] = -1
    return J


@dataclass(frozen=True)
class Vector2n:
    """A vector in R^{2n} (or Z^{2n}) with its x/y split views."""

    coords: np.ndarray
    ring: str | None = field(default=None)

    def __post_init__(self):
        coords, ring = coerce_matrix(self.coords, self.ring)
        if coords.ndim != 1 or coords.shape[0] % 2 != 0 or coords.shape[0] == 0:
            raise ValueError(f"length must be 2n > 0, got shape {coords.shape}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "ring", ring)

    @property
    def n(self) -> int:
        return self.coords.shape[0] // 2

    @property
    def x(self) -> np.ndarray:
        return self.coords[: self.n]

    @property
    def y(self) -> np.ndarray:
        return self.coords[self.n :]

    def __len__(self) -> int:
        return self.coords.shape[0]


def _vec(v) -> np.ndarray:
    return v.coords if isinstance(v, Vector2n) else np.asarray(v)


def symplectic_form(u, v):
    """<u, v> = sum_i x_i(u) y_i(v) - y_i(u) x_i(v).  Bilinear, antisymmetric."""
    a, b = _vec(u), _vec(v)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0] // 2
    if 2 * n != a.shape[0]:
        raise ValueError("odd dimension")
    return (a[:n] * b[n:]).sum() - (a[n:] * b[:n]).sum()


def tau(v):
    """tau(x, y) = (y, -x), i.e. multiplication by J.  tau o tau = -id."""
    if isinstance(v, Vector2n):
        n = v.n
        out = np.concatenate([v.coords[n:], -v.coords[:n]])
        return Vector2n(out, v.ring)
    arr = _vec(v)
    n = arr.shape[0] // 2
    return np.concatenate([arr[n:], -arr[:n]])


def _blocks(M: np.ndarray):
    n = M.shape[0] // 2
    return M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]


def is_symplectic(M, tol: float = REAL_SYMPLECTIC_TOL):
    """Check M^T J M = J; returns (ok, certificate).

    The certificate lists the violated block equations a^T d - c^T b = I,
    a^T c symmetric, b^T d symmetric, with residual magnitudes for the real
    ring.  Exact rings are checked with exact equality.
    """
    arr, ring = coerce_matrix(M) if not isinstance(M, SymplecticMatrix) else (M.entries, M.ring)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("matrix must be square")
    if arr.shape[0] % 2 != 0:
        raise ValueError("odd dimension")
    a, b, c, d = _blocks(arr)
    n = arr.shape[0] // 2
    eye = np.eye(n) if ring == "real" else np.identity(n, dtype=object)
    resid = [
        ("a^T d - c^T b = I", np.dot(a.T, d) - np.dot(c.T, b) - eye),
        ("a^T c symmetric", np.dot(a.T, c) - np.dot(a.T, c).T),
        ("b^T d symmetric", np.dot(b.T, d) - np.dot(b.T, d).T),
    ]
    cert = []
    for name, r in resid:
        if ring == "real":
            m = float(np.max(np.abs(r))) if r.size else 0.0
            if m > tol:
                cert.append(f"{name} violated (max residual {m:.3e})")
        else:
            if any(v != 0 for v in r.ravel()):
                cert.append(f"{name} violated")
    return len(cert) == 0, cert


def exact_det(M: np.ndarray):
    """Fraction-free (Bareiss) determinant of an exact object matrix."""
    A = [list(row) for row in M]
    m = len(A)
    sign = 1
    prev = 1
    for k in range(m - 1):
        if A[k][k] == 0:
            for i in range(k + 1, m):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, m):
            for j in range(k + 1, m):
                num = A[i][j] * A[k][k] - A[i][k] * A[k][j]
                q, r = divmod(num, prev) if isinstance(num, int) and isinstance(prev, int) else (num / prev, 0)
                if r != 0:
                    q = Fraction(num) / Fraction(prev)
                A[i][j] = q
            A[i][k] = 0
        prev = A[k][k]
    return sign * A[m - 1][m - 1]


@dataclass(frozen=True)
class SymplecticMatrix:
    """A 2n x 2n matrix carrying a verified symplectic certificate.

    Immutable; products and inverses stay in the class.  The inverse of a
    symplectic M is -J M^T J, so exact rings invert without elimination.
    """

    entries: np.ndarray
    ring: str | None = field(default=None)

    def __post_init__(self):
        arr, ring = coerce_matrix(self.entries, self.ring)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 != 0:
            raise ValueError(f"need square even-dimensional matrix, got {arr.shape}")
        ok, cert = is_symplectic(arr)
        if not ok:
            raise ValueError("matrix is not symplectic: " + "; ".join(cert))
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "ring", ring)

    @property
    def n(self) -> int:
        return self.entries.shape[0] // 2

    def __matmul__(self, other):
        if isinstance(other, SymplecticMatrix):
            ring = "real" if "real" in (self.ring, other.ring) else None
            prod = np.dot(self.entries, other.entries)
            return SymplecticMatrix(prod, ring if ring else None)
        if isinstance(other, Vector2n):
            return Vector2n(np.dot(self.entries, other.coords), None)
        return np.dot(self.entries, np.asarray(other))

    def apply(self, v):
        """Matrix-vector product returning a plain ndarray."""
        return np.dot(self.entries, _vec(v))

    def inverse(self) -> "SymplecticMatrix":
        J = standard_J(self.n, self.ring)
        inv = -np.dot(J, np.dot(self.entries.T, J))
        return SymplecticMatrix(inv, self.ring)

    def det(self):
        if self.ring == "real":
            return float(np.linalg.det(self.entries))
        return exact_det(self.entries)

    def __eq__(self, other):
        if not isinstance(other, SymplecticMatrix):
            return NotImplemented
        if self.ring == "real" or other.ring == "real":
            return self.entries.shape == other.entries.shape and np.allclose(
                self.entries.astype(float), other.entries.astype(float)
            )
        return self.entries.shape == other.entries.shape and all(
            a == b for a, b in zip(self.entries.ravel(), other.entries.ravel())
        )


def _unimodular_inverse_transpose(A: np.ndarray) -> np.ndarray:
    """Inverse transpose of an integer matrix with det +-1, exact."""
    d = exact_det(A)
    if d not in (1, -1):
        raise ValueError(f"payload must be unimodular (det +-1), det = {d}")
    m = A.shape[0]
    # adjugate via Fraction elimination would do; for small m use cofactors
    inv = np.zeros((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            minor = np.delete(np.delete(A, i, axis=0), j, axis=1)
            cof = exact_det(minor) if m > 1 else 1
            inv[j, i] = ((-1) ** (i + j)) * cof * d  # d = 1/d for d = +-1
    return inv.T


def make_generator(kind: str, payload, n: int | None = None) -> SymplecticMatrix:
    """Build a standard Sp(2n, Z) generator.

    kind = "upper":      [[I, S], [0, I]] for symmetric S (adds S y to x)
    kind = "lower":      [[I, 0], [S, I]] for symmetric S (adds S x to y)
    kind = "block_diag": [[A, 0], [0, A^{-T}]] for A in GL(n, Z)

    The payload is the n x n block named above; `n` is inferred from it.
    """
    P = _as_exact_array(payload)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("payload must be a square matrix")
    m = P.shape[0]
    if n is not None and n != m:
        raise ValueError(f"payload is {m}x{m} but n={n} requested")
    eye = np.identity(m, dtype=object)
    zero = np.zeros((m, m), dtype=object)
    zero[:] = 0
    if kind in ("upper", "lower"):
        if any(P[i, j] != P[j, i] for i in range(m) for j in range(m)):
            raise ValueError(f"{kind} payload must be symmetric")
        if kind == "upper":
            M = np.block([[eye, P], [zero, eye]])
        else:
            M = np.block([[eye, zero], [P, eye]])
    elif kind == "block_diag":
        M = np.block([[P, zero], [zero, _unimodular_inverse_transpose(P)]])
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    return SymplecticMatrix(np.array(M, dtype=object))


def standard_J_matrix(n: int) -> SymplecticMatrix:
    """J itself as an integer symplectic matrix (it maps (x,y) to (y,-x))."""
    return SymplecticMatrix(standard_J(n))


def _project_out_pair(z, u, w):
    """Remove the span(u, w) component: z - <z,w> u + <z,u> w.

    Requires <u, w> = 1; the output pairs to zero with both u and w.
    """
    return z - symplectic_form(z, w) * u + symplectic_form(z, u) * w


def complete_symplectic_basis(v1, v2, order: str = "forward") -> SymplecticMatrix:
    """Extend (v1, v2/s) with s = <v1, v2> != 0 to a symplectic basis (real ring).

    Returns g with g e^1 = v1 and g f^1 = v2/s, built by symplectic
    Gram-Schmidt over the remaining standard basis vectors taken in fixed
    index order (reversed for order="reverse"), skipping candidates whose
    residual falls below the pivot threshold 1e-12.  Later u-columns are
    unit-normalized, which makes the output canonical for a given order.
    """
    a = np.asarray(_vec(v1), dtype=float)
    b = np.asarray(_vec(v2), dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("v1, v2 must be vectors of equal length")
    dim = a.shape[0]
    n = dim // 2
    s = symplectic_form(a, b)
    scale = max(np.linalg.norm(a) * np.linalg.norm(b), 1.0)
    if abs(s) <= PIVOT_TOL * scale:
        raise ValueError("pair has symplectic value ~0; isotropic completion not provided")
    us = [a]
    ws = [b / s]
    candidates = [np.eye(dim)[i] for i in range(dim)]
    if order == "reverse":
        candidates = candidates[::-1]
    elif order != "forward":
        raise ValueError("order must be 'forward' or 'reverse'")
    idx = 0
    while len(us) < n:
        # next u: first candidate with nonzero residual after projection
        u_next = None
        while idx < len(candidates):
            z = candidates[idx]
            idx += 1
            for u, w in zip(us, ws):
                z = _project_out_pair(z, u, w)
            if np.linalg.norm(z) > PIVOT_TOL:
                u_next = z / np.linalg.norm(z)
                break
        if u_next is None:
            raise ValueError("ran out of candidates completing the basis")
        # partner w: first remaining candidate pairing nontrivially with u_next
        w_next = None
        for j in range(idx, len(candidates)):
            z = candidates[j]
            for u, w in zip(us, ws):
                z = _project_out_pair(z, u, w)
            p = symplectic_form(u_next, z)
            if abs(p) > PIVOT_TOL:
                w_next = z / p
                break
        if w_next is None:
            raise ValueError("no symplectic partner found; inputs degenerate")
        # second orthogonalization sweep for numerical hygiene
        for u, w in zip(us, ws):
            u_next = _project_out_pair(u_next, u, w)
            w_next = _project_out_pair(w_next, u, w)
        u_next /= np.linalg.norm(u_next)
        w_next = w_next / symplectic_form(u_next, w_next)
        us.append(u_next)
        ws.append(w_next)
    g = np.column_stack(us + ws)
    ok, cert = is_symplectic(g)
    if not ok:
        raise ArithmeticError("completion failed symplectic residual check: " + "; ".join(cert))
    return SymplecticMatrix(g, "real")
