"""Hot numeric kernels: numba @njit with a pure-numpy fallback.

Backend selection: the environment variable SYMPLAT_NO_NUMBA=1 forces the
numpy fallback; otherwise numba is used when importable.  Both backends are
exact (they produce identical point sets / counts); only speed differs.
`BACKEND` reports which one is active.  benchmarks/bench_kernels.py compares
the two.

Kernels here:
  * enumerate_points      complete lattice point enumeration |g z| <= R
                          (Cholesky backtracking vs. bounding-box scan)
  * sp_order_scan         |Sp(2n, Z/q)| by scanning all matrices mod q
  * sl2_and_subgroup_counts  |SL(2, Z/q^2)| and the order-q^3 congruence
                          subgroup, by full scan
  * pair_bfs              breadth-first orbit search on bounded boxes of
                          primitive pairs (test oracle)
"""

from __future__ import annotations

import math
import os

import numpy as np

USE_NUMBA = os.environ.get("SYMPLAT_NO_NUMBA", "") not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - environment without numba
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"

DEFAULT_ENUM_BUDGET = 100_000_000


class EnumerationBudgetError(RuntimeError):
    """Raised when an enumeration would exceed its point budget (no truncation)."""


# ----------------------------------------------------------------------
# LLL reduction (shared, float; dimensions here are <= 8)
# ----------------------------------------------------------------------


def lll_reduce(B: np.ndarray, delta: float = 0.75):
    """Return (B_reduced, U) with B_reduced = B @ U, U unimodular (int64).

    Columns are basis vectors.  Plain Lovasz-condition LLL in floats, which
    is ample for the well-conditioned, low-dimensional Gram matrices used
    here; the output feeds enumeration whose result set is basis-independent.
    """
    B = np.array(B, dtype=float)
    dim = B.shape[1]
    U = np.eye(dim, dtype=np.int64)

    def gso(Bc):
        Q = np.zeros_like(Bc)
        mu = np.zeros((dim, dim))
        for i in range(dim):
            Q[:, i] = Bc[:, i]
            for j in range(i):
                denom = np.dot(Q[:, j], Q[:, j])
                mu[i, j] = np.dot(Bc[:, i], Q[:, j]) / denom if denom > 0 else 0.0
                Q[:, i] -= mu[i, j] * Q[:, j]
        return Q, mu

    Bc = B.copy()
    Q, mu = gso(Bc)
    k = 1
    guard = 0
    while k < dim and guard < 10_000:
        guard += 1
        for j in range(k - 1, -1, -1):
            r = round(mu[k, j])
            if r != 0:
                Bc[:, k] -= r * Bc[:, j]
                U[:, k] -= r * U[:, j]
                Q, mu = gso(Bc)
        nk = np.dot(Q[:, k], Q[:, k])
        nk1 = np.dot(Q[:, k - 1], Q[:, k - 1])
        if nk >= (delta - mu[k, k - 1] ** 2) * nk1:
            k += 1
        else:
            Bc[:, [k - 1, k]] = Bc[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            Q, mu = gso(Bc)
            k = max(k - 1, 1)
    return Bc, U


# ----------------------------------------------------------------------
# enumeration
# ----------------------------------------------------------------------


def _enum_backtrack_py(Ut: np.ndarray, R2: float, max_count: int):
    """Reference backtracking used only to mirror the njit kernel's logic."""
    dim = Ut.shape[0]
    q = np.array([Ut[i, i] ** 2 for i in range(dim)])
    mu = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            mu[i, j] = Ut[i, j] / Ut[i, i]
    out = []
    z = np.zeros(dim, dtype=np.int64)
    lo = np.zeros(dim, dtype=np.int64)
    hi = np.zeros(dim, dtype=np.int64)
    T = np.zeros(dim + 1)
    T[dim] = R2
    S = np.zeros(dim)

    def center(i):
        return sum(mu[i, j] * z[j] for j in range(i + 1, dim))

    i = dim - 1
    S[i] = 0.0
    rad = math.sqrt(max(T[i + 1], 0.0) / q[i])
    lo[i] = math.ceil(-S[i] - rad - 1e-12)
    hi[i] = math.floor(-S[i] + rad + 1e-12)
    z[i] = lo[i] - 1
    while i < dim:
        z[i] += 1
        if z[i] > hi[i]:
            i += 1
            continue
        t = T[i + 1] - q[i] * (z[i] + S[i]) ** 2
        if t < -1e-9:
            continue
        if i == 0:
            if len(out) >= max_count:
                return None
            out.append(z.copy())
            continue
        i -= 1
        T[i + 1] = max(t, 0.0)
        S[i] = center(i)
        rad = math.sqrt(T[i + 1] / q[i])
        lo[i] = math.ceil(-S[i] - rad - 1e-12)
        hi[i] = math.floor(-S[i] + rad + 1e-12)
        z[i] = lo[i] - 1
    return np.array(out, dtype=np.int64).reshape(len(out), dim)


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _enum_backtrack_nb(Ut, R2, max_count):  # pragma: no cover - jit
        dim = Ut.shape[0]
        q = np.empty(dim)
        for i in range(dim):
            q[i] = Ut[i, i] * Ut[i, i]
        mu = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i + 1, dim):
                mu[i, j] = Ut[i, j] / Ut[i, i]
        out = np.empty((max_count, dim), dtype=np.int64)
        count = 0
        z = np.zeros(dim, dtype=np.int64)
        lo = np.zeros(dim, dtype=np.int64)
        hi = np.zeros(dim, dtype=np.int64)
        T = np.zeros(dim + 1)
        T[dim] = R2
        S = np.zeros(dim)
        i = dim - 1
        S[i] = 0.0
        rad = math.sqrt(max(T[i + 1], 0.0) / q[i])
        lo[i] = int(math.ceil(-S[i] - rad - 1e-12))
        hi[i] = int(math.floor(-S[i] + rad + 1e-12))
        z[i] = lo[i] - 1
        while i < dim:
            z[i] += 1
            if z[i] > hi[i]:
                i += 1
                continue
            t = T[i + 1] - q[i] * (z[i] + S[i]) ** 2
            if t < -1e-9:
                continue
            if i == 0:
                if count >= max_count:
                    return out[:0], -1
                out[count] = z
                count += 1
                continue
            i -= 1
            tt = t if t > 0.0 else 0.0
            T[i + 1] = tt
            s = 0.0
            for j in range(i + 1, dim):
                s += mu[i, j] * z[j]
            S[i] = s
            rad = math.sqrt(T[i + 1] / q[i])
            lo[i] = int(math.ceil(-S[i] - rad - 1e-12))
            hi[i] = int(math.floor(-S[i] + rad + 1e-12))
            z[i] = lo[i] - 1
        return out[:count].copy(), count


def _enum_boxscan_np(B: np.ndarray, R: float, max_count: int):
    """Pure-numpy fallback: scan the bounding box of the ellipsoid |Bz| <= R."""
    dim = B.shape[0]
    Binv = np.linalg.inv(B)
    bounds = np.floor(R * np.linalg.norm(Binv, axis=1) + 1e-9).astype(np.int64)
    sizes = 2 * bounds + 1
    total = int(np.prod(sizes.astype(object)))
    if total > 64 * max_count + 10_000_000:
        raise EnumerationBudgetError(
            f"bounding box of {total} cells exceeds the scan budget"
        )
    chunks = []
    chunk = 1 << 20
    R2 = R * R + 1e-9
    count = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        zs = np.empty((idx.shape[0], dim), dtype=np.int64)
        rem = idx
        for k in range(dim):
            zs[:, k] = rem % sizes[k] - bounds[k]
            rem = rem // sizes[k]
        pts = zs @ B.T
        keep = np.einsum("ij,ij->i", pts, pts) <= R2
        sel = zs[keep]
        count += sel.shape[0]
        if count > max_count:
            return None
        chunks.append(sel)
    return np.concatenate(chunks, axis=0) if chunks else np.empty((0, dim), dtype=np.int64)


def enumerate_points(
    basis: np.ndarray, R: float, budget: int = DEFAULT_ENUM_BUDGET
) -> np.ndarray:
    """All integer z with |basis @ z| <= R, exactly and completely.

    The basis is LLL-reduced first (the result set does not depend on the
    basis).  Exceeding `budget` raises EnumerationBudgetError; output is
    never silently truncated.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("basis must be square")
    if R < 0:
        raise ValueError("radius must be nonnegative")
    dim = B.shape[0]
    det = abs(np.linalg.det(B))
    if det < 1e-300:
        raise ValueError("basis is singular")
    ball_vol = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * R**dim
    expect = ball_vol / det
    if expect > budget:
        raise EnumerationBudgetError(
            f"expected ~{expect:.3g} points exceeds the budget {budget}"
        )
    Bred, U = lll_reduce(B)
    max_count = int(min(budget, 4 * expect + 1_000_000))
    if USE_NUMBA:
        G = Bred.T @ Bred
        L = np.linalg.cholesky(G)
        pts, count = _enum_backtrack_nb(np.ascontiguousarray(L.T), R * R + 1e-9, max_count)
        if count < 0:
            raise EnumerationBudgetError("enumeration exceeded its point budget")
        z = pts
    else:
        z = _enum_boxscan_np(Bred, R, max_count)
        if z is None:
            raise EnumerationBudgetError("enumeration exceeded its point budget")
    return z @ U.T  # coordinates w.r.t. the original basis


# ----------------------------------------------------------------------
# finite group scans
# ----------------------------------------------------------------------


def _symp_J_mod(dim: int, q: int) -> np.ndarray:
    n = dim // 2
    J = np.zeros((dim, dim), dtype=np.int64)
    for i in range(n):
        J[i, n + i] = 1
        J[n + i, i] = (q - 1) % q
    return J


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _sp_scan_nb(dim, q, J):  # pragma: no cover - jit
        cells = dim * dim
        total = 1
        for _ in range(cells):
            total *= q
        digits = np.zeros(cells, dtype=np.int64)
        M = np.zeros((dim, dim), dtype=np.int64)
        count = 0
        for _ in range(total):
            for i in range(dim):
                for j in range(dim):
                    M[i, j] = digits[i * dim + j]
            ok = True
            for i in range(dim):
                for j in range(dim):
                    acc = 0
                    for k in range(dim):
                        for l in range(dim):
                            acc += M[k, i] * J[k, l] * M[l, j]
                    if acc % q != J[i, j]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                count += 1
            pos = 0
            while pos < cells:
                digits[pos] += 1
                if digits[pos] < q:
                    break
                digits[pos] = 0
                pos += 1
        return count


def _sp_scan_np(dim: int, q: int, J: np.ndarray) -> int:
    cells = dim * dim
    total = q**cells
    count = 0
    chunk = 1 << 18
    powers = q ** np.arange(cells, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digs = (idx[:, None] // powers[None, :]) % q
        M = digs.reshape(-1, dim, dim)
        JM = np.matmul(J, M)
        P = np.matmul(M.transpose(0, 2, 1), JM) % q
        count += int(np.sum(np.all(P == J % q, axis=(1, 2))))
    return count


def sp_order_scan(n: int, q: int) -> int:
    """|Sp(2n, Z/q)| by scanning every matrix mod q (enumeration oracle)."""
    dim = 2 * n
    if q ** (dim * dim) > 200_000_000:
        raise ValueError("scan too large; oracle supports desk-scale (n,q) only")
    J = _symp_J_mod(dim, q)
    if USE_NUMBA:
        return int(_sp_scan_nb(dim, q, J))
    return _sp_scan_np(dim, q, J)


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _sl2_scan_nb(q):  # pragma: no cover - jit
        mod = q * q
        total = 0
        sub = 0
        for a in range(mod):
            for b in range(mod):
                for c in range(mod):
                    for d in range(mod):
                        if (a * d - b * c) % mod == 1:
                            total += 1
                            if b == 0 and a % q == 1 and (a + d) % mod == 2:
                                sub += 1
        return total, sub


def _sl2_scan_np(q: int):
    mod = q * q
    total = 0
    sub = 0
    chunk = 1 << 20
    full = mod**4
    powers = mod ** np.arange(4, dtype=np.int64)
    for start in range(0, full, chunk):
        idx = np.arange(start, min(start + chunk, full), dtype=np.int64)
        digs = (idx[:, None] // powers[None, :]) % mod
        a, b, c, d = digs[:, 0], digs[:, 1], digs[:, 2], digs[:, 3]
        det1 = (a * d - b * c) % mod == 1
        total += int(np.sum(det1))
        sub += int(np.sum(det1 & (b == 0) & (a % q == 1) & ((a + d) % mod == 2)))
    return total, sub


def sl2_and_subgroup_counts(q: int):
    """(|SL(2, Z/q^2)|, size of the congruence subgroup) by full scan."""
    if q**8 > 200_000_000:
        raise ValueError("q too large for the scan oracle")
    if USE_NUMBA:
        t, s = _sl2_scan_nb(q)
        return int(t), int(s)
    return _sl2_scan_np(q)


# ----------------------------------------------------------------------
# breadth-first orbit search on a bounded box (test oracle)
# ----------------------------------------------------------------------


def encode_pairs(us: np.ndarray, vs: np.ndarray, box: int) -> np.ndarray:
    """Pack pairs with entries in [-box, box] into base-(2 box + 1) codes."""
    base = 2 * box + 1
    coords = np.concatenate([us, vs], axis=1).astype(np.int64) + box
    if coords.min() < 0 or coords.max() >= base:
        raise ValueError("pair leaves the encoding box")
    code = np.zeros(coords.shape[0], dtype=np.int64)
    for k in range(coords.shape[1]):
        code = code * base + coords[:, coords.shape[1] - 1 - k]
    return code


def query_bits(bitset: np.ndarray, codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    shifts = (codes & np.int64(63)).astype(np.uint64)
    return ((bitset[codes >> 6] >> shifts) & np.uint64(1)).astype(bool)


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _bfs_nb(moves, u0, v0, box, bitset, queue, max_states):  # pragma: no cover
        dim = u0.shape[0]
        base = 2 * box + 1
        nm = moves.shape[0]
        uu = np.empty(dim, dtype=np.int64)
        vv = np.empty(dim, dtype=np.int64)
        nu = np.empty(dim, dtype=np.int64)
        nv = np.empty(dim, dtype=np.int64)

        code = np.int64(0)
        for k in range(2 * dim - 1, -1, -1):
            if k < dim:
                c = u0[k] + box
            else:
                c = v0[k - dim] + box
            code = code * base + c
        head = 0
        tail = 0
        queue[tail] = code
        tail += 1
        bitset[code >> 6] |= np.uint64(1) << np.uint64(code & 63)
        visited = 1
        pruned = 0
        exceeded = 0
        while head < tail:
            cur = queue[head]
            head += 1
            rem = cur
            for k in range(dim):
                uu[k] = rem % base - box
                rem //= base
            for k in range(dim):
                vv[k] = rem % base - box
                rem //= base
            for mi in range(nm):
                ok = True
                for i in range(dim):
                    au = 0
                    av = 0
                    for j in range(dim):
                        au += moves[mi, i, j] * uu[j]
                        av += moves[mi, i, j] * vv[j]
                    if au > box or au < -box or av > box or av < -box:
                        ok = False
                        break
                    nu[i] = au
                    nv[i] = av
                if not ok:
                    pruned = 1
                    continue
                ncode = np.int64(0)
                for k in range(2 * dim - 1, -1, -1):
                    if k < dim:
                        c = nu[k] + box
                    else:
                        c = nv[k - dim] + box
                    ncode = ncode * base + c
                w = ncode >> 6
                bit = np.uint64(1) << np.uint64(ncode & 63)
                if bitset[w] & bit:
                    continue
                if tail >= max_states:
                    exceeded = 1
                    return visited, pruned, exceeded
                bitset[w] |= bit
                queue[tail] = ncode
                tail += 1
                visited += 1
        return visited, pruned, exceeded


def _bfs_py(moves, u0, v0, box, bitset, queue, max_states):
    from collections import deque

    dim = u0.shape[0]
    base = 2 * box + 1

    def enc(u, v):
        code = 0
        for k in range(2 * dim - 1, -1, -1):
            c = int(u[k] if k < dim else v[k - dim]) + box
            code = code * base + c
        return code

    start = (tuple(int(t) for t in u0), tuple(int(t) for t in v0))
    seen = {enc(*start)}
    todo = deque([start])
    pruned = 0
    exceeded = 0
    while todo and not exceeded:
        u, v = todo.popleft()
        ua = np.array(u, dtype=np.int64)
        va = np.array(v, dtype=np.int64)
        for M in moves:
            nu2 = M @ ua
            nv2 = M @ va
            if max(np.abs(nu2).max(), np.abs(nv2).max()) > box:
                pruned = 1
                continue
            c = enc(nu2, nv2)
            if c in seen:
                continue
            if len(seen) >= max_states:
                exceeded = 1
                break
            seen.add(c)
            todo.append((tuple(int(t) for t in nu2), tuple(int(t) for t in nv2)))
    codes = np.fromiter(seen, dtype=np.int64, count=len(seen))
    bitset[codes >> 6] |= np.uint64(1) << (codes & np.int64(63)).astype(np.uint64)
    return len(seen), pruned, exceeded


def pair_bfs(moves: np.ndarray, u0, v0, box: int, max_states: int):
    """Breadth-first closure of a pair under `moves` inside the coordinate box.

    Returns (bitset, visited, pruned, exceeded): bitset marks visited encoded
    pairs; pruned flags that some neighbor left the box; exceeded flags a
    budget stop (the closure is then incomplete).
    """
    dim = len(u0)
    base = 2 * box + 1
    nbits = base ** (2 * dim)
    bitset = np.zeros((nbits + 63) >> 6, dtype=np.uint64)
    queue = np.zeros(max_states, dtype=np.int64)
    u0 = np.asarray(u0, dtype=np.int64)
    v0 = np.asarray(v0, dtype=np.int64)
    moves = np.asarray(moves, dtype=np.int64)
    if USE_NUMBA:
        visited, pruned, exceeded = _bfs_nb(moves, u0, v0, box, bitset, queue, max_states)
    else:
        visited, pruned, exceeded = _bfs_py(moves, u0, v0, box, bitset, queue, max_states)
    return bitset, int(visited), bool(pruned), bool(exceeded)


def sp4_generator_moves() -> np.ndarray:
    """A generating set of Sp(4, Z) moves (with inverses) for the BFS oracle."""
    from symplat.symplectic import make_generator, standard_J

    mats = []
    for S in (
        [[1, 0], [0, 0]],
        [[0, 0], [0, 1]],
        [[0, 1], [1, 0]],
    ):
        Sm = np.array(S)
        for sign in (1, -1):
            mats.append(make_generator("upper", sign * Sm).entries)
            mats.append(make_generator("lower", sign * Sm).entries)
    for A in ([[1, 1], [0, 1]], [[1, -1], [0, 1]], [[0, 1], [-1, 0]], [[0, -1], [1, 0]]):
        mats.append(make_generator("block_diag", np.array(A)).entries)
    J = standard_J(2)
    mats.append(J)
    mats.append(-J)
    return np.array([[[int(x) for x in row] for row in M] for M in mats], dtype=np.int64)
