"""Monte-Carlo experiments on the circle and the 2-torus.

The cat map phi(x, y) = (x + y, x + 2y) mod 1 contracts the irrational line
{(t, s t)}, s = (1 - sqrt 5)/2, by c = (3 - sqrt 5)/2. Noise carried by a
segment of that line gives a stationary solution rho = lim mu * phi(mu) * ...
which lives on the line and is invariant under no nontrivial finite
subgroup. Laws are represented by sample clouds and probed through their
empirical characteristic functions.

Randomness: sample i of a stream belongs to chunk i // CHUNK, and chunk b is
drawn from ``SeedSequence(seed, spawn_key=(stream, b))``. Outputs therefore
do not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientSamples

CHUNK = 16384
DEFAULT_TRUNCATION = 48
DEFAULT_SAMPLES = 100_000
DEFAULT_CUTOFF = 5
DEFAULT_TOLERANCE = 0.02
MC_SIGMAS = 6.0

# stream ids for SeedSequence spawn keys
STREAM_RHO = 0
STREAM_PARTNER = 1
STREAM_NOISE = 2
STREAM_T1 = 3


@dataclass(frozen=True)
class CatMap:
    matrix: tuple[tuple[int, int], tuple[int, int]] = ((1, 1), (1, 2))
    contraction: float = (3 - math.sqrt(5)) / 2
    slope: float = (1 - math.sqrt(5)) / 2

    def check(self, tol: float = 1e-12) -> bool:
        (a, b), (c, d) = self.matrix
        if a * d - b * c != 1:
            return False
        eig = np.linalg.eigvalsh(np.array(self.matrix, dtype=float))
        if not (0 < self.contraction < 1 and abs(eig.min() - self.contraction) < tol):
            return False
        v = np.array([1.0, self.slope])
        return bool(np.allclose(np.array(self.matrix) @ v, self.contraction * v, atol=tol, rtol=0))


CAT = CatMap()


def _wrap(x: np.ndarray) -> np.ndarray:
    out = np.mod(np.asarray(x, dtype=float), 1.0)
    out = np.where(out >= 1.0, 0.0, out)  # -tiny % 1 rounds to 1.0
    return out


def cat_apply(points) -> np.ndarray:
    """phi(x, y) = (x + y, x + 2y) mod 1 on an (..., 2) array."""
    p = np.asarray(points, dtype=float)
    x, y = p[..., 0], p[..., 1]
    return np.stack([_wrap(x + y), _wrap(x + 2 * y)], axis=-1)


def torus_distance(p, q) -> np.ndarray:
    """Max-coordinate distance on (R/Z)^d."""
    d = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d).max(axis=-1)


def line_point(t) -> np.ndarray:
    """(t mod 1, s t mod 1): the embedding of the line parameter t."""
    t = np.asarray(t, dtype=float)
    return np.stack([_wrap(t), _wrap(CAT.slope * t)], axis=-1)


# ----------------------------------------------------------------- laws on R


@dataclass(frozen=True)
class PointLaw:
    value: float = 0.0

    @property
    def diameter(self) -> float:
        return 0.0

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))


@dataclass(frozen=True)
class UniformLaw:
    low: float
    high: float

    @property
    def diameter(self) -> float:
        return max(abs(self.low), abs(self.high))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)


@dataclass(frozen=True)
class DiscreteLaw:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    @property
    def diameter(self) -> float:
        return max(abs(v) for v in self.values)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.asarray(self.values, dtype=float), size=size, p=self.probs)


def _chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, chunk)))


def _chunked(count: int, seed: int, stream: int, fn, workers: int = 1) -> np.ndarray:
    bounds = [(b, min(CHUNK, count - b * CHUNK)) for b in range((count + CHUNK - 1) // CHUNK)]
    jobs = [(_chunk_rng(seed, stream, b), size) for b, size in bounds]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class LineNoise:
    """The law of line_point(t), t ~ t_law: a measure carried by the contracting line."""

    t_law: object
    seed: int = 1

    def sample_params(self, count: int, stream: int = STREAM_NOISE, workers: int = 1) -> np.ndarray:
        return _chunked(count, self.seed, stream, lambda rng, n: self.t_law.draw(rng, n), workers)

    def sample(self, count: int, stream: int = STREAM_NOISE, workers: int = 1) -> np.ndarray:
        return line_point(self.sample_params(count, stream, workers))


def line_noise_sampler(t_law, seed: int = 1) -> LineNoise:
    return LineNoise(t_law, seed)


# ------------------------------------------------------------ sample clouds


@dataclass(frozen=True, eq=False)
class TorusEmpirical:
    dim: int
    samples: np.ndarray = field(repr=False)
    seed: int | None = None
    params: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        s = self.samples
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if s.ndim != 2 or s.shape[1] != self.dim or s.shape[0] == 0:
            raise ValueError(f"samples must be a non-empty (n, {self.dim}) array, got {s.shape}")
        if not ((s >= 0) & (s < 1)).all():
            raise ValueError("sample coordinates must lie in [0, 1)")

    @property
    def sample_count(self) -> int:
        return self.samples.shape[0]

    def shifted(self, offset: Sequence[float]) -> "TorusEmpirical":
        return TorusEmpirical(self.dim, _wrap(self.samples + np.asarray(offset, dtype=float)), self.seed)


def stationary_sampler(
    noise: LineNoise,
    truncation: int = DEFAULT_TRUNCATION,
    seed: int = 1,
    sample_count: int = DEFAULT_SAMPLES,
    *,
    stream: int = STREAM_RHO,
    workers: int = 1,
) -> TorusEmpirical:
    """Samples of rho ~ sum_{i<N} phi^i(z_i), z_i iid ~ noise.

    On the line phi^i acts as multiplication by c^i, so the sum is formed on
    parameters, sum c^i t_i, and embedded once. The parameter truncation
    error is at most c^N diam / (1 - c).
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    c = CAT.contraction

    def draw(rng, n):
        t = noise.t_law.draw(rng, n * truncation).reshape(n, truncation)
        acc = t[:, truncation - 1].copy()
        for i in range(truncation - 2, -1, -1):  # Horner: fixed evaluation order
            acc = t[:, i] + c * acc
        return acc

    params = _chunked(sample_count, seed, stream, draw, workers)
    return TorusEmpirical(2, line_point(params), seed, params)


def truncation_bound(noise: LineNoise, truncation: int) -> float:
    c = CAT.contraction
    return c**truncation * noise.t_law.diameter / (1 - c)


def uniform_cloud(sample_count: int, seed: int, dim: int = 2, stream: int = STREAM_RHO) -> TorusEmpirical:
    s = _chunked(sample_count, seed, stream, lambda rng, n: rng.random((n, dim)))
    return TorusEmpirical(dim, s, seed)


def grid_cloud(N: int) -> TorusEmpirical:
    """Every point of (1/N) Z^2 exactly once."""
    a, b = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return TorusEmpirical(2, np.stack([a.ravel(), b.ravel()], axis=1) / N)


# ---------------------------------------------------------------- spectra


@dataclass(frozen=True, eq=False)
class CharSpectrum:
    """Empirical characteristic function on the frequency box |n_i| <= cutoff.

    ``values[n1 + M, n2 + M]`` is the average of exp(2 pi i n.x).
    """

    cutoff: int
    values: np.ndarray = field(repr=False)
    sample_count: int

    def __getitem__(self, n) -> complex:
        M = self.cutoff
        if isinstance(n, int):
            n = (n,)
        return complex(self.values[tuple(k + M for k in n)])

    def frequencies(self):
        M = self.cutoff
        dim = self.values.ndim
        return [tuple(int(v) for v in n) for n in np.ndindex(*([2 * M + 1] * dim))], M

    def rows(self) -> list[tuple]:
        idx, M = self.frequencies()
        return [tuple(k - M for k in n) + (float(self.values[n].real), float(self.values[n].imag)) for n in idx]


def char_spectrum(emp: TorusEmpirical, cutoff: int = DEFAULT_CUTOFF) -> CharSpectrum:
    M = cutoff
    ks = np.arange(-M, M + 1)
    n = emp.sample_count
    # phase tables exp(2 pi i k x_d), shape (2M+1, n); rows contiguous so sums are pairwise
    tables = [np.exp(2j * np.pi * np.outer(ks, emp.samples[:, d])) for d in range(emp.dim)]
    if emp.dim == 1:
        values = tables[0].sum(axis=1) / n
    else:
        values = np.empty((2 * M + 1, 2 * M + 1), dtype=complex)
        for i in range(2 * M + 1):
            values[i] = (tables[0][i][None, :] * tables[1]).sum(axis=1) / n
    return CharSpectrum(M, values, n)


# ------------------------------------------------------------ stationarity


@dataclass(frozen=True)
class StationarityReport:
    max_gap: float
    worst_frequency: tuple[int, ...]
    tolerance: float
    cutoff: int
    sample_count: int
    margin: float

    @property
    def margin_ok(self) -> bool:
        return self.margin <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.max_gap < self.tolerance

    def as_dict(self) -> dict:
        return {
            "max_gap": self.max_gap,
            "worst_frequency": list(self.worst_frequency),
            "tolerance": self.tolerance,
            "cutoff": self.cutoff,
            "sample_count": self.sample_count,
            "mc_margin": self.margin,
            "mc_margin_ok": self.margin_ok,
            "passed": self.passed,
        }


def mc_margin(sample_count: int) -> float:
    """MC_SIGMAS standard errors of an empirical characteristic value."""
    return MC_SIGMAS / math.sqrt(sample_count)


def check_stationarity(
    rho: TorusEmpirical,
    noise: LineNoise,
    cutoff: int = DEFAULT_CUTOFF,
    tolerance: float = DEFAULT_TOLERANCE,
    *,
    partner: TorusEmpirical | None = None,
    strict: bool = False,
    workers: int = 1,
) -> StationarityReport:
    """Compare rho-hat with the spectrum of {z + phi(w)}, z ~ noise fresh and
    w from ``partner`` (an independent cloud of the same law as rho; rho
    itself if omitted). Passes iff the largest gap over the box is below
    ``tolerance``. With ``strict`` a Monte-Carlo margin above the tolerance
    raises ``InsufficientSamples``.
    """
    w = rho if partner is None else partner
    margin = mc_margin(min(rho.sample_count, w.sample_count))
    if strict and margin > tolerance:
        raise InsufficientSamples(
            f"{min(rho.sample_count, w.sample_count)} samples give a Monte-Carlo margin "
            f"{margin:.3g} above tolerance {tolerance}"
        )
    z = noise.sample(w.sample_count, STREAM_NOISE, workers)
    cloud = TorusEmpirical(2, _wrap(z + cat_apply(w.samples)))
    a = char_spectrum(rho, cutoff)
    b = char_spectrum(cloud, cutoff)
    gap = np.abs(a.values - b.values)
    worst = np.unravel_index(int(np.argmax(gap)), gap.shape)
    return StationarityReport(
        float(gap.max()),
        tuple(int(k) - cutoff for k in worst),
        tolerance,
        cutoff,
        rho.sample_count,
        margin,
    )


# ------------------------------------------------------------- invariance


def finite_cyclic_subgroups(max_order: int) -> list[tuple[int, int, int]]:
    """Generators (a, b, q) of the distinct cyclic subgroups of order q in
    (R/Z)^2 generated by (a/q, b/q), 2 <= q <= max_order, gcd(a, b, q) = 1.
    Each subgroup is listed once, under its lexicographically least generator."""
    seen = set()
    out = []
    for q in range(2, max_order + 1):
        for a in range(q):
            for b in range(q):
                if math.gcd(math.gcd(a, b), q) != 1:
                    continue
                members = frozenset(
                    (Fraction(k * a % q, q), Fraction(k * b % q, q)) for k in range(q)
                )
                if members in seen:
                    continue
                seen.add(members)
                out.append((a, b, q))
    return out


@dataclass(frozen=True)
class InvarianceEntry:
    generator: tuple[int, int, int]
    witness: tuple[int, int] | None
    modulus: float

    def as_dict(self) -> dict:
        a, b, q = self.generator
        return {
            "generator": f"({a}/{q}, {b}/{q})",
            "order": q,
            "witness": None if self.witness is None else list(self.witness),
            "abs_char": self.modulus,
        }


@dataclass(frozen=True)
class InvarianceReport:
    entries: tuple[InvarianceEntry, ...]
    threshold: float
    max_order: int

    @property
    def unwitnessed(self) -> list[InvarianceEntry]:
        return [e for e in self.entries if e.witness is None]

    @property
    def all_witnessed(self) -> bool:
        return not self.unwitnessed

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "max_order": self.max_order,
            "subgroups": len(self.entries),
            "invariant_compatible": [e.as_dict() for e in self.unwitnessed],
            "all_witnessed": self.all_witnessed,
            "entries": [e.as_dict() for e in self.entries],
        }


def invariance_scan(
    rho: TorusEmpirical,
    max_order: int = 6,
    threshold: float = 0.05,
    cutoff: int = DEFAULT_CUTOFF,
    spectrum: CharSpectrum | None = None,
) -> InvarianceReport:
    """Look for a certificate that rho is not H-invariant, for every finite
    cyclic H = <(a/q, b/q)>. Invariance would force rho-hat(n) = 0 whenever
    n.(a, b) is not 0 mod q; a frequency in the box where |rho-hat| exceeds
    ``threshold`` is a witness."""
    spec = spectrum if spectrum is not None else char_spectrum(rho, cutoff)
    M = spec.cutoff
    mod = np.abs(spec.values)
    ks = np.arange(-M, M + 1)
    n1, n2 = np.meshgrid(ks, ks, indexing="ij")
    entries = []
    for a, b, q in finite_cyclic_subgroups(max_order):
        moving = (n1 * a + n2 * b) % q != 0
        masked = np.where(moving, mod, -1.0)
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        best = float(masked[i, j])
        witness = (int(ks[i]), int(ks[j])) if best > threshold else None
        entries.append(InvarianceEntry((a, b, q), witness, best))
    return InvarianceReport(tuple(entries), threshold, max_order)


# -------------------------------------------------------------- circle case


@dataclass(frozen=True, eq=False)
class T1Result:
    eta: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)
    ks: float
    seed: int

    @property
    def tail_empirical(self) -> TorusEmpirical:
        return TorusEmpirical(1, self.tail[:, None], self.seed)


def simulate_T1(noise, k_count: int, seed: int = 1, burn_in: int = 1000) -> T1Result:
    """eta_k = xi_k + frac(eta_{k-1}) from eta_0 = 0 for burn_in + k_count
    steps. The tail is frac(eta_k) over the last k_count steps; ``ks`` is its
    Kolmogorov-Smirnov distance to the uniform law on [0, 1)."""
    if k_count < 1:
        raise ValueError("k_count must be >= 1")
    total = burn_in + k_count
    xi = _chunked(total, seed, STREAM_T1, lambda rng, n: noise.draw(rng, n))
    eta = np.empty(total + 1)
    eta[0] = 0.0
    prev = 0.0
    for k in range(total):
        prev = float(xi[k]) + (prev - math.floor(prev))
        eta[k + 1] = prev
    tail = _wrap(eta[burn_in + 1:])
    ks = float(stats.kstest(tail, "uniform").statistic)
    return T1Result(eta, tail, ks, seed)


# ------------------------------------------------------------ full pipeline

LINE_T_LAW = UniformLaw(0.0, 0.3)
CONTROL_SHIFT = (0.25, 0.0)


@dataclass(frozen=True, eq=False)
class StationaryRun:
    rho: TorusEmpirical = field(repr=False)
    spectrum: CharSpectrum = field(repr=False)
    stationarity: StationarityReport
    control: StationarityReport
    invariance: InvarianceReport
    truncation: int
    truncation_error: float

    @property
    def passed(self) -> bool:
        return (
            self.stationarity.passed
            and self.stationarity.margin_ok
            and not self.control.passed
            and self.invariance.all_witnessed
        )

    def as_dict(self) -> dict:
        return {
            "seed": self.rho.seed,
            "sample_count": self.rho.sample_count,
            "truncation": self.truncation,
            "truncation_error_bound": self.truncation_error,
            "stationarity": self.stationarity.as_dict(),
            "control": {"shift": list(CONTROL_SHIFT), **self.control.as_dict()},
            "invariance": self.invariance.as_dict(),
            "passed": self.passed,
        }


def stationary_pipeline(
    seed: int = 1,
    sample_count: int = DEFAULT_SAMPLES,
    truncation: int = DEFAULT_TRUNCATION,
    cutoff: int = DEFAULT_CUTOFF,
    tolerance: float = DEFAULT_TOLERANCE,
    *,
    t_law=LINE_T_LAW,
    max_order: int = 6,
    threshold: float = 0.05,
    strict: bool = False,
    workers: int = 1,
) -> StationaryRun:
    """Sample rho, check rho = mu * phi(rho) against an independent copy of rho,
    repeat with rho shifted by CONTROL_SHIFT (which must fail), and scan
    finite cyclic subgroups for non-invariance witnesses."""
    noise = line_noise_sampler(t_law, seed)
    rho = stationary_sampler(noise, truncation, seed, sample_count, workers=workers)
    partner = stationary_sampler(noise, truncation, seed, sample_count, stream=STREAM_PARTNER, workers=workers)
    stat = check_stationarity(rho, noise, cutoff, tolerance, partner=partner, strict=strict, workers=workers)
    control = check_stationarity(
        rho.shifted(CONTROL_SHIFT), noise, cutoff, tolerance, partner=partner, workers=workers
    )
    spectrum = char_spectrum(rho, cutoff)
    inv = invariance_scan(rho, max_order, threshold, cutoff, spectrum)
    return StationaryRun(rho, spectrum, stat, control, inv, truncation, truncation_bound(noise, truncation))
