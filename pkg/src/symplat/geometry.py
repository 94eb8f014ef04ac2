"""Borel regions, equivariant hypersurface frames, and the G-integrals.

For an indicator f = chi_B the pair-correlation weight at symplectic value s
is the hypersurface integral

    G(s) = int_B  [ t-volume of { t : s y*(x) + sum_i t_i y_i(x) in B } ] dx

where y*(x) pairs to 1 with x and y_1..y_{2n-1} span the hyperplane
<x, .> = 0.  The frame is a deterministic section built from symplectic
basis completion; any section whose assembled basis (y* | y_1 | ... ) has
determinant +-1 integrates to the same G, which the tests check by
comparing two different constructions and by the Fubini identity
int G(s) ds = vol(B)^2.

The cone-averaged variant carries an extra nu in (0, 1] with weight nu^n and
argument s nu y* + sum t_i y_i.

Monte Carlo estimators sample x uniformly in B and t uniformly in a box
whose half-width is certified per sample via the inverse frame matrix, with
importance correction; estimates come back with standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import gcd

import numpy as np

from symplat.symplectic import complete_symplectic_basis, is_symplectic

__all__ = [
    "RegionSpec",
    "FrameAtX",
    "frame_at",
    "G_integral",
    "G_tilde",
    "G_closed_disc",
    "condition_integral",
    "kernel_bound_check",
    "dependent_pairs_term",
    "region_from_volume",
    "fubini_integral",
    "form_batch",
    "line_intervals",
]


def ball_volume(dim: int, R: float) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * R**dim


def form_batch(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """<x, y> row-wise for (m, 2n) arrays."""
    n = xs.shape[1] // 2
    return np.einsum("ij,ij->i", xs[:, :n], ys[:, n:]) - np.einsum(
        "ij,ij->i", xs[:, n:], ys[:, :n]
    )


@dataclass(frozen=True, eq=False)
class RegionSpec:
    """Ball, symplectic ellipsoid g B(0,R), or centered box; exact volume."""

    kind: str  # "ball" | "ellipsoid" | "box"
    n: int
    radius: float = 0.0
    g: np.ndarray | None = None  # ellipsoid shape matrix, real symplectic
    half_widths: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "ellipsoid", "box"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind in ("ball", "ellipsoid") and self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.kind == "ellipsoid":
            g = np.asarray(self.g, dtype=float)
            ok, cert = is_symplectic(g)
            if not ok:
                raise ValueError("ellipsoid matrix must be symplectic: " + "; ".join(cert))
            object.__setattr__(self, "g", g)
            object.__setattr__(self, "_ginv", np.linalg.inv(g))
        if self.kind == "box":
            hw = np.asarray(self.half_widths, dtype=float)
            if hw.shape != (2 * self.n,) or np.any(hw <= 0):
                raise ValueError("box needs 2n positive half-widths")
            object.__setattr__(self, "half_widths", hw)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def volume(self) -> float:
        if self.kind == "box":
            return float(np.prod(2.0 * self.half_widths))
        return ball_volume(self.dim, self.radius)  # det g = 1 for ellipsoids

    def circumradius(self) -> float:
        if self.kind == "ball":
            return self.radius
        if self.kind == "ellipsoid":
            return self.radius * float(np.linalg.norm(self.g, 2))
        return float(np.linalg.norm(self.half_widths))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.kind == "ball":
            return np.einsum("ij,ij->i", pts, pts) <= self.radius**2 + 1e-12
        if self.kind == "ellipsoid":
            q = pts @ self._ginv.T
            return np.einsum("ij,ij->i", q, q) <= self.radius**2 + 1e-12
        return np.all(np.abs(pts) <= self.half_widths + 1e-12, axis=1)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self.kind == "box":
            return rng.uniform(-1.0, 1.0, size=(m, self.dim)) * self.half_widths
        z = rng.normal(size=(m, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = self.radius * rng.uniform(0.0, 1.0, size=(m, 1)) ** (1.0 / self.dim)
        pts = z * r
        if self.kind == "ellipsoid":
            pts = pts @ self.g.T
        return pts

    def scaled(self, factor: float) -> "RegionSpec":
        if self.kind == "box":
            return RegionSpec("box", self.n, half_widths=self.half_widths * factor)
        return RegionSpec(self.kind, self.n, radius=self.radius * factor, g=self.g)


def region_from_volume(kind: str, n: int, volume: float, g=None) -> RegionSpec:
    """Region of the requested volume (ball/ellipsoid radius or cube widths)."""
    dim = 2 * n
    if kind == "box":
        w = 0.5 * volume ** (1.0 / dim)
        return RegionSpec("box", n, half_widths=np.full(dim, w))
    R = (volume / ball_volume(dim, 1.0)) ** (1.0 / dim)
    return RegionSpec(kind, n, radius=R, g=g)


@dataclass(frozen=True, eq=False)
class FrameAtX:
    """x, its dual y* with <x, y*> = 1, and a basis of the hyperplane <x,.> = 0.

    The hyperplane basis starts with x itself; the assembled 2n x 2n matrix
    (y* | y_1 | ... | y_{2n-1}) has determinant +-1, which is the condition
    making dx dt the hypersurface measure.
    """

    x: np.ndarray
    y_star: np.ndarray
    ys: tuple

    def basis_matrix(self) -> np.ndarray:
        return np.column_stack([self.y_star, *self.ys])


def frame_at(x, order: str = "forward") -> FrameAtX:
    """Deterministic frame from symplectic basis completion of (x, -tau(x)/|x|^2)."""
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    n = dim // 2
    r2 = float(np.dot(x, x))
    if r2 < 1e-24:
        raise ValueError("|x| too small for a frame")
    v2 = np.concatenate([-x[n:], x[:n]]) / r2  # -tau(x)/|x|^2, pairs to 1 with x
    if n == 1:
        return FrameAtX(x, v2, (x,))
    g = complete_symplectic_basis(x, v2, order=order).entries
    y_star = g[:, n]
    ys = (x,) + tuple(g[:, j] for j in range(1, n)) + tuple(g[:, n + j] for j in range(1, n))
    return FrameAtX(x, y_star, ys)


# ----------------------------------------------------------------------
# Monte Carlo estimators
# ----------------------------------------------------------------------


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def _mean_stderr(w: np.ndarray):
    m = w.shape[0]
    mean = float(np.mean(w))
    stderr = float(np.std(w) / math.sqrt(m)) if m > 1 else float("inf")
    return mean, stderr


def _frame_data_n1(xs: np.ndarray):
    """Vectorized n=1 frames: y* = (-y, x)/r^2, hyperplane vector = x.

    The t-coordinate of a point P in the frame is <x, P>/r^2, so |t| inside a
    region of circumradius Rc is at most Rc/r; the returned bound is 1/r."""
    r2 = np.einsum("ij,ij->i", xs, xs)
    ystar = np.column_stack([-xs[:, 1], xs[:, 0]]) / r2[:, None]
    tb = 1.0 / np.sqrt(r2)
    return ystar, tb


def _t_bounds(frame: FrameAtX, Rc: float) -> np.ndarray:
    """Per-coordinate bounds |t_i| <= Rc * ||row_i(M^{-1})|| for the frame box.

    Row-wise bounds (rather than one operator norm) keep the importance
    weights bounded when |x| is small: the x-row scales like 1/|x| while the
    membership length along y* scales like |x|, and the two cancel."""
    M = frame.basis_matrix()
    rows = np.linalg.inv(M)[1:]  # duals of y_1..y_{2n-1}; row 0 is the lambda slot
    return Rc * np.linalg.norm(rows, axis=1)


def G_integral(s: float, B: RegionSpec, samples: int, seed: int, order: str = "forward"):
    """Monte Carlo G(s) with standard error.

    x is uniform in B; t uniform in a per-sample box of half-width
    T = circumradius(B) * ||frame^{-1}||_2 certified to contain the support;
    the estimate is importance-corrected by the box volume.
    """
    if B.volume() <= 0:
        raise ValueError("zero-volume region")
    n = B.n
    rng = _rng(seed, 0x47)
    xs = B.sample(rng, samples)
    Rc = B.circumradius()
    vol = B.volume()
    if n == 1:
        ystar, tb = _frame_data_n1(xs)
        T = Rc * tb
        t = rng.uniform(-1.0, 1.0, size=samples) * T
        P = s * ystar + t[:, None] * xs
        w = vol * 2.0 * T * B.contains(P)
        return _mean_stderr(w)
    ts = rng.uniform(-1.0, 1.0, size=(samples, 2 * n - 1))
    w = np.zeros(samples)
    for i in range(samples):
        fr = frame_at(xs[i], order=order)
        M = fr.basis_matrix()
        T = Rc * float(np.linalg.norm(np.linalg.inv(M), 2))
        P = s * fr.y_star + np.column_stack(fr.ys) @ (T * ts[i])
        w[i] = vol * (2.0 * T) ** (2 * n - 1) * float(B.contains(P[None, :])[0])
    return _mean_stderr(w)


def G_tilde(s: int, B: RegionSpec, samples: int, seed: int, order: str = "forward"):
    """Cone-averaged G: extra nu in (0,1], weight nu^n, argument s nu y* + t y."""
    if s == 0:
        raise ValueError("s = 0 carries no arithmetic weight; dependent pairs are separate")
    if B.volume() <= 0:
        raise ValueError("zero-volume region")
    n = B.n
    rng = _rng(seed, 0x49)
    xs = B.sample(rng, samples)
    nus = 1.0 - rng.uniform(0.0, 1.0, size=samples)  # (0, 1]
    Rc = B.circumradius()
    vol = B.volume()
    if n == 1:
        ystar, tb = _frame_data_n1(xs)
        T = Rc * tb
        t = rng.uniform(-1.0, 1.0, size=samples) * T
        P = (s * nus)[:, None] * ystar + t[:, None] * xs
        w = vol * 2.0 * T * nus * B.contains(P)
        return _mean_stderr(w)
    ts = rng.uniform(-1.0, 1.0, size=(samples, 2 * n - 1))
    w = np.zeros(samples)
    for i in range(samples):
        fr = frame_at(xs[i], order=order)
        M = fr.basis_matrix()
        T = Rc * float(np.linalg.norm(np.linalg.inv(M), 2))
        P = s * nus[i] * fr.y_star + np.column_stack(fr.ys) @ (T * ts[i])
        w[i] = vol * (2.0 * T) ** (2 * n - 1) * nus[i] ** n * float(B.contains(P[None, :])[0])
    return _mean_stderr(w)


def line_intervals(B: RegionSpec, ystar: np.ndarray, c: np.ndarray):
    """Per-row [lo, hi] with lo <= lambda <= hi iff lambda*ystar + c in B.

    Empty intervals come back with lo > hi.  Used by the fused formula-side
    kernel at n = 1, where the whole s-sum collapses to prefix sums over one
    membership interval per sample.
    """
    m = ystar.shape[0]
    lo = np.full(m, np.inf)
    hi = np.full(m, -np.inf)
    if B.kind in ("ball", "ellipsoid"):
        if B.kind == "ball":
            u, w = ystar, c
        else:
            u, w = ystar @ B._ginv.T, c @ B._ginv.T
        A = np.einsum("ij,ij->i", u, u)
        Bq = np.einsum("ij,ij->i", u, w)
        C = np.einsum("ij,ij->i", w, w) - B.radius**2
        disc = Bq * Bq - A * C
        ok = disc >= 0
        root = np.sqrt(np.maximum(disc, 0.0))
        lo[ok] = ((-Bq - root) / A)[ok]
        hi[ok] = ((-Bq + root) / A)[ok]
        return lo, hi
    # box: intersect coordinate slabs
    lo[:] = -np.inf
    hi[:] = np.inf
    for k in range(B.dim):
        yk = ystar[:, k]
        ck = c[:, k]
        wk = B.half_widths[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            l1 = (-wk - ck) / yk
            l2 = (wk - ck) / yk
        lo_k = np.minimum(l1, l2)
        hi_k = np.maximum(l1, l2)
        flat = np.abs(yk) < 1e-300
        lo_k[flat] = np.where(np.abs(ck[flat]) <= wk, -np.inf, np.inf)
        hi_k[flat] = np.where(np.abs(ck[flat]) <= wk, np.inf, -np.inf)
        lo = np.maximum(lo, lo_k)
        hi = np.minimum(hi, hi_k)
    return lo, hi


def fubini_integral(B: RegionSpec, samples: int, seed: int, order: str = "forward"):
    """Monte Carlo for int_R G(s) ds over real s, which must equal vol(B)^2.

    Along the y*(x) line the s-integral of the indicator is the exact length
    of the membership interval, so each sample contributes smoothly and the
    estimator converges much faster than a per-s Riemann sum."""
    n = B.n
    rng = _rng(seed, 0x4B)
    Rc = B.circumradius()
    vol = B.volume()
    m = samples
    xs = B.sample(rng, m)
    if n == 1:
        ystar, tb = _frame_data_n1(xs)
        T = Rc * tb
        t = rng.uniform(-1.0, 1.0, size=m) * T
        lo, hi = line_intervals(B, ystar, t[:, None] * xs)
        w = vol * 2.0 * T * np.maximum(hi - lo, 0.0)
        return _mean_stderr(w)
    ts = rng.uniform(-1.0, 1.0, size=(m, 2 * n - 1))
    w = np.zeros(m)
    for i in range(m):
        fr = frame_at(xs[i], order=order)
        M = fr.basis_matrix()
        T = Rc * float(np.linalg.norm(np.linalg.inv(M), 2))
        c = np.column_stack(fr.ys) @ (T * ts[i])
        lo, hi = line_intervals(B, fr.y_star[None, :], c[None, :])
        w[i] = vol * (2.0 * T) ** (2 * n - 1) * max(float(hi[0] - lo[0]), 0.0)
    return _mean_stderr(w)


def condition_integral(B: RegionSpec, delta: float, samples: int, seed: int):
    """vol(B)^2 E |<x, y>|_+^{-delta} over independent uniform pairs in B."""
    if not 0 < delta < 2 * B.n:
        raise ValueError("delta must lie in (0, 2n)")
    rng = _rng(seed, 0x51)
    xs = B.sample(rng, samples)
    ys = B.sample(rng, samples)
    kern = np.maximum(1.0, np.abs(form_batch(xs, ys))) ** (-delta)
    vol2 = B.volume() ** 2
    mean, err = _mean_stderr(kern)
    return vol2 * mean, vol2 * err


def kernel_bound_check(S: RegionSpec, B: RegionSpec, delta: float, samples: int, seed: int):
    """Estimate int_S int_B |<s,y>|_+^{-delta} / (m(S) m(B)^{1 - delta/2n}).

    Requires m(S) >= m(B) >= vol(unit ball), B a ball; the lemma predicts the
    ratio stays bounded as B grows.
    """
    if B.kind != "ball":
        raise ValueError("B must be a ball centered at the origin")
    if not (S.volume() >= B.volume() >= ball_volume(B.dim, 1.0) - 1e-9):
        raise ValueError("need m(S) >= m(B) >= m(unit ball)")
    rng = _rng(seed, 0x53)
    xs = S.sample(rng, samples)
    ys = B.sample(rng, samples)
    kern = np.maximum(1.0, np.abs(form_batch(xs, ys))) ** (-delta)
    mean, err = _mean_stderr(kern)
    denom = S.volume() * B.volume() ** (1.0 - delta / (2 * B.n))
    scale = S.volume() * B.volume() / denom
    return scale * mean, scale * err


def _coprime_pairs(K: int, convention: str):
    if convention == "all_coprime":
        for k in range(-K, K + 1):
            for l in range(-K, K + 1):
                if k != 0 and l != 0 and gcd(abs(k), abs(l)) == 1:
                    yield k, l
    elif convention == "signed_half":
        yield 1, 1
        yield 1, -1
    elif convention == "four_signs":
        for k in (1, -1):
            for l in (1, -1):
                yield k, l
    else:
        raise ValueError(f"unknown (k,l) convention {convention!r}")


def dependent_pairs_term(B: RegionSpec, K: int, convention: str = "all_coprime"):
    """sum over the (k, l) index set of vol({x : kx in B and lx in B}).

    For the 0-symmetric star-shaped regions supported here each term equals
    vol(B) / max(|k|, |l|)^{2n}.  Returns (value, tail_bound) where the tail
    bound covers the discarded max(|k|,|l|) > K terms of the all-coprime set
    (infinite at n = 1, where that literal set diverges; the reduced
    conventions are exact with no tail).
    """
    if B.kind not in ("ball", "ellipsoid", "box"):
        raise ValueError("region must be star-shaped about 0")
    vol = B.volume()
    dim = B.dim
    total = 0.0
    for k, l in _coprime_pairs(K, convention):
        total += vol / max(abs(k), abs(l)) ** dim
    if convention == "all_coprime":
        if dim == 2:
            tail = float("inf")
        else:
            # sum_{m > K} 8 phi(m) / m^{2n} <= 8 K^{2-2n} / (2n - 2)
            tail = vol * 8.0 * K ** (2 - dim) / (dim - 2)
    else:
        tail = 0.0
    return total, tail


def G_closed_disc(s: float, R: float, quad_points: int = 20_000) -> float:
    """Closed-form radial reduction of G(s) for the disc of radius R (n = 1):

        G(s) = 4 pi int_{|s|/R}^{R} sqrt(R^2 - s^2 / r^2) dr,   |s| <= R^2,

    evaluated by composite Simpson quadrature; the independent oracle for the
    Monte Carlo estimator."""
    s = abs(float(s))
    if s > R * R:
        return 0.0
    a, b = s / R, R
    if b - a < 1e-15:
        return 0.0
    k = quad_points + (quad_points % 2)
    r = np.linspace(a, b, k + 1)
    vals = np.sqrt(np.maximum(R * R - (s / r) ** 2, 0.0))
    weights = np.ones(k + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    integral = (b - a) / (3 * k) * float(np.dot(weights, vals))
    return 4.0 * math.pi * integral
