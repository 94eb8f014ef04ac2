"""Random symplectic lattices, point counting, and the moment experiments.

A cone lattice is nu^{1/2} g Z^{2n} with g unimodular symplectic and the
scale nu uniform in (0, 1]; its statistic is h = nu^n * (number of primitive
points in B).  Against the product measure (Haar on the unimodular part
times d nu) the mean of h is vol(B)/zeta(2n) and its second moment unfolds
into the arithmetic-weighted hypersurface integrals

    E[h^2] = sum_{s != 0} a(|s|) Gtilde(s) + D / (n + 1),

where D is the linearly-dependent-pairs term of the flat second moment.
The dependent primitive pairs of a lattice are exactly (x, +-x), so

    D = (int f(x)^2 dx + int f(x) f(-x) dx) / zeta(2n)
      = 2 vol(B) / zeta(2n)            for 0-symmetric B

(the "signed_half + zeta" convention: index pairs {(1,1), (1,-1)} with a
1/zeta(2n) normalization).  The one-time n = 1 calibration freezing this
convention is tests/test_acceptance.py::test_c8_second_moment; the CLI still
exposes the alternatives for comparison.

Sampling at n = 1 is exact (fundamental-domain rejection on the modular
surface plus a uniform rotation).  For n in {2, 3} a Siegel-set Iwasawa
sampler with documented truncation is provided, flagged approximate, and
used only in qualitative checks.

Determinism: each sample i draws from an independent Philox stream keyed by
(seed, i), and per-sample results land in index-addressed arrays before a
sequential reduction, so results are byte-identical for a fixed seed and
parameter set regardless of the thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from symplat import _kernels
from symplat._kernels import EnumerationBudgetError, enumerate_points
from symplat.arith import ArithmeticTable, a_rational_prefix, zeta_value
from symplat.geometry import RegionSpec, line_intervals, _frame_data_n1
from symplat.records import ExperimentRecord
from symplat.symplectic import is_symplectic

__all__ = [
    "LatticeSample",
    "sample_lattice_n1",
    "sample_lattice_siegel",
    "enumerate_points",
    "EnumerationBudgetError",
    "siegel_count",
    "h_statistic",
    "mean_experiment",
    "second_moment_experiment",
    "discrepancy_series",
    "dependent_term_value",
    "KL_CONVENTIONS",
]

SIEGEL_HEIGHT_CAP = 3.0  # truncation of the A-part exponentials (documented bias)


@dataclass(frozen=True, eq=False)
class LatticeSample:
    """nu^{1/2} g Z^{2n}: unimodular symplectic part plus the cone scale."""

    n: int
    g: np.ndarray
    nu: float
    provenance: str  # "exact_haar_n1" | "siegel_approx" | "user_supplied"
    seed_key: tuple = (0, 0)

    def __post_init__(self):
        ok, cert = is_symplectic(self.g)
        if not ok:
            raise ValueError("lattice matrix not symplectic: " + "; ".join(cert))
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")

    def basis(self) -> np.ndarray:
        return self.nu ** (1.0 / 2.0) * self.g


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=np.array([seed & (2**64 - 1), index], dtype=np.uint64))
    )


def fundamental_domain_point(rng: np.random.Generator):
    """z = x + iy from the modular fundamental domain, density prop. to 1/y^2.

    Rejection from the strip |x| <= 1/2, y >= sqrt(3)/2 (inverse-CDF in y);
    acceptance probability is pi sqrt(3)/6 ~ 0.9069.
    """
    y0 = math.sqrt(3.0) / 2.0
    while True:
        x = rng.uniform(-0.5, 0.5)
        y = y0 / (1.0 - rng.uniform(0.0, 1.0))  # P(Y > t) = y0/t on [y0, inf)
        if x * x + y * y >= 1.0:
            return x, y


def sample_lattice_n1(rng: np.random.Generator, seed_key=(0, 0)) -> LatticeSample:
    """Exact Haar sample of a unimodular lattice in R^2 with a cone scale.

    The lattice is the rotated copy of (Z + z Z)/sqrt(y), z from the
    fundamental domain, theta uniform; nu is uniform in (0, 1]."""
    x, y = fundamental_domain_point(rng)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    sy = math.sqrt(y)
    shear = np.array([[1.0 / sy, x / sy], [0.0, sy]])
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    nu = 1.0 - rng.uniform(0.0, 1.0)
    return LatticeSample(1, rot @ shear, nu, "exact_haar_n1", seed_key)


def _haar_unitary_embedded(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    Q = Q * (np.conj(d) / np.abs(d))
    A, B = Q.real, Q.imag
    return np.block([[A, -B], [B, A]])


def sample_lattice_siegel(n: int, rng: np.random.Generator, seed_key=(0, 0)) -> LatticeSample:
    """Approximate Haar sample for n >= 2 from a truncated Siegel set.

    Iwasawa coordinates g = N a K: the unipotent block is uniform in a unit
    box, the torus coordinates follow the root-system exponential weights
    truncated at SIEGEL_HEIGHT_CAP, and K is Haar on the embedded U(n).
    Flagged approximate; never used in exactness tests."""
    if n < 2:
        raise ValueError("use sample_lattice_n1 for n = 1")
    if n > 3:
        raise ValueError("samplers provided for n <= 3 only")
    # torus: spacings s_j >= 0 with rate gamma_j = sum_{i<=j} 2(n-i+1)
    gammas = [sum(2 * (n - i + 1) for i in range(1, j + 1)) for j in range(1, n + 1)]
    s = np.empty(n)
    for j, gam in enumerate(gammas):
        u = rng.uniform(0.0, 1.0)
        cap = 1.0 - math.exp(-gam * SIEGEL_HEIGHT_CAP)
        s[j] = -math.log(1.0 - u * cap) / gam
    t = np.array([s[j:].sum() for j in range(n)])
    a_diag = np.concatenate([np.exp(t), np.exp(-t)])
    # unipotent: [[A, A S], [0, A^{-T}]] with A unit upper triangular, S symmetric
    A = np.eye(n)
    iu = np.triu_indices(n, 1)
    A[iu] = rng.uniform(-0.5, 0.5, size=len(iu[0]))
    S = np.zeros((n, n))
    S[iu] = rng.uniform(-0.5, 0.5, size=len(iu[0]))
    S = S + S.T
    S[np.diag_indices(n)] = rng.uniform(-0.5, 0.5, size=n)
    Ait = np.linalg.inv(A).T
    N = np.block([[A, A @ S], [np.zeros((n, n)), Ait]])
    g = N @ np.diag(a_diag) @ _haar_unitary_embedded(n, rng)
    ok, cert = is_symplectic(g)
    if not ok:
        raise ArithmeticError("Siegel sampler produced a bad matrix: " + "; ".join(cert))
    nu = 1.0 - rng.uniform(0.0, 1.0)
    return LatticeSample(n, g, nu, "siegel_approx", seed_key)


def _sample_lattice(n: int, rng, seed_key):
    if n == 1:
        return sample_lattice_n1(rng, seed_key)
    return sample_lattice_siegel(n, rng, seed_key)


# ----------------------------------------------------------------------
# counting
# ----------------------------------------------------------------------


def siegel_count(sample: LatticeSample, B: RegionSpec, primitive: bool = True) -> int:
    """Number of z in Z^{2n} (gcd 1 when primitive) with nu^{1/2} g z in B."""
    basis = sample.basis()
    zs = enumerate_points(basis, B.circumradius())
    if zs.shape[0] == 0:
        return 0
    pts = zs @ basis.T
    keep = B.contains(pts)
    zs = zs[keep]
    if zs.shape[0] == 0:
        return 0
    if primitive:
        return int(np.sum(np.gcd.reduce(np.abs(zs), axis=1) == 1))
    return int(np.sum(np.any(zs != 0, axis=1)))


def h_statistic(sample: LatticeSample, B: RegionSpec) -> float:
    """nu^n times the primitive count of the scaled lattice in B."""
    return sample.nu**sample.n * siegel_count(sample, B, primitive=True)


def _parallel_fill(func, count: int, threads: int) -> np.ndarray:
    """out[i] = func(i), order-independent; reduction order stays sequential."""
    out = np.zeros(count)
    if threads <= 1:
        for i in range(count):
            out[i] = func(i)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, val in zip(range(count), pool.map(func, range(count), chunksize=16)):
            out[i] = val
    return out


# ----------------------------------------------------------------------
# the (k, l) dependent-pairs conventions
# ----------------------------------------------------------------------

KL_CONVENTIONS = ("signed_half_zeta", "four_signs_zeta", "four_signs_raw")


def dependent_term_value(B: RegionSpec, n: int, convention: str = "signed_half_zeta") -> float:
    """Flat-moment value of the dependent-pairs contribution under a convention.

    signed_half_zeta (frozen default): pairs {(1,1), (1,-1)} with 1/zeta(2n),
    i.e. (vol + vol(B cap -B))/zeta(2n); the regions here are 0-symmetric so
    this is 2 vol/zeta(2n).  The cone statistic divides by (n + 1)."""
    vol = B.volume()
    z = zeta_value(2 * n)
    if convention == "signed_half_zeta":
        return 2.0 * vol / z
    if convention == "four_signs_zeta":
        return 4.0 * vol / z
    if convention == "four_signs_raw":
        return 4.0 * vol
    raise ValueError(f"unknown convention {convention!r}; options: {KL_CONVENTIONS}")


# ----------------------------------------------------------------------
# formula side of the second moment (n = 1, fused over s)
# ----------------------------------------------------------------------


def formula_second_moment_n1(
    B: RegionSpec,
    seed: int,
    samples: int = 2_000_000,
    s_cap: int | None = None,
    convention: str = "signed_half_zeta",
    table: ArithmeticTable | None = None,
):
    """Prediction for E[(h - vol/zeta(2))^2]: sum_s a(|s|) Gtilde(s) + D/2 - mean^2.

    The s-sum is evaluated in one pass: for each Monte Carlo sample the
    membership interval in lambda = s nu is exact along the y* line, so the
    weighted sum over s collapses to two lookups in the prefix table of the
    a-rationals.  Terms beyond s_cap are bounded by a(s) <= 1/zeta(2) and
    reported as `tail`.
    """
    if B.n != 1:
        raise ValueError("quantitative formula side is implemented for n = 1")
    Rc = B.circumradius()
    if s_cap is None:
        s_cap = int(math.ceil(4.0 * Rc * Rc))
    cum = a_rational_prefix(1, s_cap, table)
    rng = _sample_rng(seed, 0xF0)
    vol = B.volume()
    z2 = zeta_value(2)
    total = 0.0
    total_sq = 0.0
    tail = 0.0
    m = samples
    chunk = 1 << 18
    done = 0
    while done < m:
        k = min(chunk, m - done)
        xs = B.sample(rng, k)
        ystar, tb = _frame_data_n1(xs)
        T = Rc * tb
        t = rng.uniform(-1.0, 1.0, size=k) * T
        nus = 1.0 - rng.uniform(0.0, 1.0, size=k)
        c = t[:, None] * xs
        lo, hi = line_intervals(B, ystar, c)
        with np.errstate(invalid="ignore"):
            s0 = np.ceil(lo / nus)
            s1 = np.floor(hi / nus)
        valid = s0 <= s1
        s0 = np.where(valid, s0, 1.0)
        s1 = np.where(valid, s1, 0.0)
        p1 = np.clip(s1, 0, s_cap).astype(np.int64)
        p0 = np.clip(np.maximum(s0, 1.0) - 1.0, 0, s_cap).astype(np.int64)
        pos = np.where(s1 >= 1, cum[p1] - cum[p0], 0.0)
        n1b = np.clip(-s0, 0, s_cap).astype(np.int64)
        n0b = np.clip(np.maximum(-s1, 1.0) - 1.0, 0, s_cap).astype(np.int64)
        neg = np.where(s0 <= -1, cum[n1b] - cum[n0b], 0.0)
        beyond = np.maximum(s1 - s_cap, 0.0) + np.maximum(-s0 - s_cap, 0.0)
        w = vol * 2.0 * T * nus
        contrib = w * (pos + neg)
        total += float(np.sum(contrib))
        total_sq += float(np.sum(contrib * contrib))
        tail += float(np.sum(w * beyond * valid))
        done += k
    mean = total / m / z2
    var = max(total_sq / m - (total / m) ** 2, 0.0)
    stderr = math.sqrt(var / m) / z2
    tail_bound = tail / m / z2
    dep = dependent_term_value(B, 1, convention) / 2.0  # cone factor 1/(n+1)
    target = vol / z2
    prediction = mean + dep - target * target
    return {
        "prediction": prediction,
        "s_sum": mean,
        "s_sum_stderr": stderr,
        "dependent_term": dep,
        "tail_bound": tail_bound,
        "s_cap": s_cap,
        "convention": convention,
    }


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------


def _region_params(B: RegionSpec) -> dict:
    p = {"region": B.kind, "n": B.n, "volume": B.volume()}
    if B.kind in ("ball", "ellipsoid"):
        p["radius"] = B.radius
    else:
        p["half_width"] = float(B.half_widths[0])
    return p


def mean_experiment(
    n: int, B: RegionSpec, samples: int, seed: int, threads: int = 1
) -> ExperimentRecord:
    """Mean of h over cone samples against vol(B)/zeta(2n)."""
    t0 = time.perf_counter()
    target = B.volume() / zeta_value(2 * n)

    def one(i: int) -> float:
        rng = _sample_rng(seed, i)
        lat = _sample_lattice(n, rng, (seed, i))
        return h_statistic(lat, B)

    hs = _parallel_fill(one, samples, threads)
    mean = float(np.mean(hs))
    stderr = float(np.std(hs) / math.sqrt(samples))
    agg = {
        "mean": mean,
        "stderr": stderr,
        "target": target,
        "ratio": mean / target if target else float("nan"),
    }
    params = {"samples": samples, "threads": threads, **_region_params(B)}
    rec = ExperimentRecord(
        "mean",
        params,
        ["n", "region", "volume", "samples", "seed", "mean", "stderr", "target", "ratio"],
        [(n, B.kind, B.volume(), samples, seed, mean, stderr, target, agg["ratio"])],
        agg,
        seed,
    )
    rec.wallclock = time.perf_counter() - t0
    return rec


def second_moment_experiment(
    n: int,
    B: RegionSpec,
    samples: int,
    seed: int,
    s_cap: int | None = None,
    convention: str = "signed_half_zeta",
    formula_samples: int = 2_000_000,
    threads: int = 1,
    measure_unit_variance: bool = True,
) -> ExperimentRecord:
    """Monte Carlo E[(h - mean)^2] versus the formula-side prediction (n = 1).

    Also reports the unit-determinant (nu = 1) variance of the plain
    primitive count, which carries no asserted bound."""
    t0 = time.perf_counter()
    target = B.volume() / zeta_value(2 * n)

    def one(i: int) -> float:
        rng = _sample_rng(seed, i)
        lat = _sample_lattice(n, rng, (seed, i))
        return h_statistic(lat, B)

    hs = _parallel_fill(one, samples, threads)
    sq = (hs - target) ** 2
    mc_second = float(np.mean(sq))
    mc_stderr = float(np.std(sq) / math.sqrt(samples))

    unit_var = float("nan")
    if measure_unit_variance:

        def one_unit(i: int) -> float:
            rng = _sample_rng(seed, i)
            lat = _sample_lattice(n, rng, (seed, i))
            flat = LatticeSample(lat.n, lat.g, 1.0, lat.provenance, lat.seed_key)
            return float(siegel_count(flat, B, primitive=True))

        counts = _parallel_fill(one_unit, samples, threads)
        unit_var = float(np.mean((counts - target) ** 2))

    agg = {
        "mc_second_moment": mc_second,
        "mc_stderr": mc_stderr,
        "target_mean": target,
        "unit_determinant_variance": unit_var,
    }
    if n == 1:
        formula = formula_second_moment_n1(
            B, seed, samples=formula_samples, s_cap=s_cap, convention=convention
        )
        agg.update(
            {
                "formula_prediction": formula["prediction"],
                "formula_s_sum": formula["s_sum"],
                "formula_s_sum_stderr": formula["s_sum_stderr"],
                "formula_dependent_term": formula["dependent_term"],
                "formula_tail_bound": formula["tail_bound"],
                "s_cap": formula["s_cap"],
                "ratio_mc_over_formula": mc_second / formula["prediction"],
            }
        )
    params = {
        "samples": samples,
        "formula_samples": formula_samples,
        "convention": convention,
        "threads": threads,
        **_region_params(B),
    }
    cols = ["n", "region", "volume", "samples", "seed"] + sorted(agg)
    rec = ExperimentRecord(
        "second_moment",
        params,
        cols,
        [(n, B.kind, B.volume(), samples, seed) + tuple(agg[k] for k in sorted(agg))],
        agg,
        seed,
    )
    rec.wallclock = time.perf_counter() - t0
    return rec


def discrepancy_series(
    n: int,
    volumes,
    lattice_count: int,
    seed: int,
    threads: int = 1,
    fixed_lattice: LatticeSample | None = None,
) -> ExperimentRecord:
    """Discrepancy D(B, Lambda) along a volume ladder and its decay slope.

    D = |count_prim / vol - 1/(det(Lambda) zeta(2n))| per rung; the per-lattice
    slope is the least-squares fit of log D against log vol, and the aggregate
    is the median slope over lattices."""
    from symplat.geometry import region_from_volume

    t0 = time.perf_counter()
    volumes = sorted(float(v) for v in volumes)
    if len(volumes) < 4:
        raise ValueError("need at least 4 ladder rungs")
    z = zeta_value(2 * n)
    nlat = 1 if fixed_lattice is not None else lattice_count
    rows = []
    slopes = np.zeros(nlat)

    logv = np.log(np.array(volumes))

    def one(i: int):
        if fixed_lattice is not None:
            lat = fixed_lattice
        else:
            rng = _sample_rng(seed, i)
            lat = _sample_lattice(n, rng, (seed, i))
        det = lat.nu**n
        ds = []
        for vol in volumes:
            Bv = region_from_volume("ball", n, vol)
            cnt = siegel_count(lat, Bv, primitive=True)
            ds.append(abs(cnt / vol - 1.0 / (det * z)))
        ds = np.array(ds)
        safe = np.maximum(ds, 1e-300)
        slope = float(np.polyfit(logv, np.log(safe), 1)[0])
        return lat, ds, slope

    for i in range(nlat):
        lat, ds, slope = one(i)
        slopes[i] = slope
        rows.append((i, n, lat.nu, slope) + tuple(float(d) for d in ds))

    agg = {
        "median_slope": float(np.median(slopes)),
        "mean_slope": float(np.mean(slopes)),
        "lattices": nlat,
    }
    params = {
        "lattices": nlat,
        "volumes": ";".join(fmt for fmt in (format(v, ".17g") for v in volumes)),
        "threads": threads,
        "n": n,
    }
    cols = ["lattice", "n", "nu", "slope"] + [f"D_vol{int(v)}" for v in volumes]
    rec = ExperimentRecord("discrepancy", params, cols, rows, agg, seed)
    rec.wallclock = time.perf_counter() - t0
    return rec


def sample_experiment(n: int, samples: int, seed: int) -> ExperimentRecord:
    """Emit raw lattice samples (nu and the flattened unimodular part)."""
    t0 = time.perf_counter()
    rows = []
    for i in range(samples):
        rng = _sample_rng(seed, i)
        lat = _sample_lattice(n, rng, (seed, i))
        rows.append((i, n, lat.provenance, lat.nu) + tuple(float(x) for x in lat.g.ravel()))
    cols = ["sample", "n", "provenance", "nu"] + [
        f"g{i}{j}" for i in range(2 * n) for j in range(2 * n)
    ]
    agg = {"samples": samples}
    rec = ExperimentRecord("sample", {"samples": samples, "n": n}, cols, rows, agg, seed)
    rec.wallclock = time.perf_counter() - t0
    return rec
