"""Stochastic simulation of noisy PR-box ensembles and of the N-singlet
pointer protocol, with statistical checks against the analytic results.

Randomness comes from the counter-based Philox generator so that
(seed, stream) pairs give provably non-overlapping, bit-reproducible
streams: the 128-bit Philox key is (stream << 64) | seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .pointer import Magnetization, PointerShape, rho_x_conditional


@dataclass(frozen=True)
class RngSpec:
    """Reproducible random stream: same (seed, stream) always produces the
    same sample sequence."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream < 0:
            raise ValueError("stream must be nonnegative")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.stream << 64) | self.seed))


@dataclass(frozen=True)
class EnsembleRunResult:
    """Summed outcomes of one run over an ensemble of boxes."""

    A: int
    B: int
    n_boxes: int

    def __post_init__(self) -> None:
        for name, val in (("A", self.A), ("B", self.B)):
            if abs(val) > self.n_boxes or (val - self.n_boxes) % 2 != 0:
                raise ValueError(f"{name} = {val} inconsistent with n_boxes = {self.n_boxes}")


def sample_box(v: float, x: int, y: int, rng: np.random.Generator) -> tuple[int, int]:
    """One draw from an isotropic box: a is uniform +/-1 and
    a*b = (-1)^(xy) with probability V = (1+v)/2."""
    if abs(v) > 1.0:
        raise ValueError(f"|v| must be <= 1, got {v}")
    a = 1 - 2 * int(rng.integers(0, 2))
    target = (-1) ** (x * y)
    hit = rng.random() < (1.0 + v) / 2.0
    b = a * target if hit else -a * target
    return a, b


def run_ensemble(
    n_boxes: int, v: float, x: int, y: int, rng: np.random.Generator
) -> EnsembleRunResult:
    """Sum the outcomes of n_boxes independent box draws with fixed inputs."""
    if n_boxes < 1:
        raise ValueError("n_boxes must be >= 1")
    if abs(v) > 1.0:
        raise ValueError(f"|v| must be <= 1, got {v}")
    a = 1 - 2 * rng.integers(0, 2, size=n_boxes)
    hit = rng.random(n_boxes) < (1.0 + v) / 2.0
    target = (-1) ** (x * y)
    b = np.where(hit, a * target, -a * target)
    return EnsembleRunResult(int(a.sum()), int(b.sum()), n_boxes)


def run_ensemble_batch(
    n_boxes: int, v: float, x: int, y: int, rng: np.random.Generator, runs: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stack `runs` repetitions of run_ensemble into (A, B) integer arrays."""
    A = np.empty(runs, dtype=np.int64)
    B = np.empty(runs, dtype=np.int64)
    for i in range(runs):
        res = run_ensemble(n_boxes, v, x, y, rng)
        A[i], B[i] = res.A, res.B
    return A, B


def ks_critical_value(alpha: float, n_samples: int) -> float:
    """Asymptotic one-sample KS critical value c(alpha)/sqrt(n) with
    c(alpha) = sqrt(-ln(alpha/2)/2); c(0.01) = 1.628."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-math.log(alpha / 2.0) / 2.0) / math.sqrt(n_samples)


def gaussianity_check(samples, alpha: float = 0.01) -> tuple[float, bool]:
    """Kolmogorov-Smirnov statistic of the samples against the standard
    normal; passes when below the asymptotic critical value at alpha."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise ValueError(f"need at least 100 samples, got {samples.size}")
    statistic = float(stats.kstest(samples, "norm").statistic)
    return statistic, statistic < ks_critical_value(alpha, samples.size)


def two_sample_check(xs, ys, alpha: float = 0.01) -> tuple[float, bool]:
    """Two-sample KS statistic; passes (same-distribution verdict) when
    below the asymptotic critical value at alpha."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n, m = xs.size, ys.size
    statistic = float(stats.ks_2samp(xs, ys).statistic)
    crit = math.sqrt(-math.log(alpha / 2.0) / 2.0) * math.sqrt((n + m) / (n * m))
    return statistic, statistic < crit


def _mixture_cumweights(mu: Magnetization) -> tuple[np.ndarray, np.ndarray]:
    mix = rho_x_conditional(mu, PointerShape(1.0))
    return mix.shifts, np.cumsum(mix.weight_floats)


def sample_singlet_protocol(
    n_spins: int, basis: str, shape: PointerShape, rng: np.random.Generator
) -> tuple[int, float]:
    """One run of the half-singlet protocol: Alice's magnetization mu is
    binomial; Bob's pointer reading is drawn from the matching conditional
    mixture (a single displaced Gaussian for the z basis, the traced-out
    product-state mixture for the x basis)."""
    if basis not in ("z", "x"):
        raise ValueError(f"basis must be 'z' or 'x', got {basis!r}")
    mu = 2 * int(rng.binomial(n_spins, 0.5)) - n_spins
    if basis == "z":
        shift = float(mu)
    else:
        shifts, cum = _mixture_cumweights(Magnetization(mu, n_spins))
        idx = min(int(np.searchsorted(cum, rng.random())), len(shifts) - 1)
        shift = float(shifts[idx])
    return mu, shift + shape.delta * float(rng.standard_normal())


def sample_singlet_runs(
    n_spins: int, basis: str, shape: PointerShape, rng: np.random.Generator, runs: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized repetition of sample_singlet_protocol.

    x-basis pointer shifts are inverse-transform draws from the per-mu
    conditional mixtures (cached by mu), not from the reduced closed form,
    so downstream two-sample tests exercise the actual traced-out weights.
    """
    if basis not in ("z", "x"):
        raise ValueError(f"basis must be 'z' or 'x', got {basis!r}")
    mus = 2 * rng.binomial(n_spins, 0.5, size=runs).astype(np.int64) - n_spins
    if basis == "z":
        shifts = mus.astype(float)
    else:
        shifts = np.empty(runs)
        cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        u = rng.random(runs)
        for i, mu in enumerate(mus):
            key = int(mu)
            if key not in cache:
                cache[key] = _mixture_cumweights(Magnetization(key, n_spins))
            sh, cum = cache[key]
            shifts[i] = sh[min(int(np.searchsorted(cum, u[i])), len(sh) - 1)]
    x_p = shifts + shape.delta * rng.standard_normal(runs)
    return mus, x_p


def write_ensemble_csv(stream, rows) -> None:
    """Rows of (run_id, x, y, A, B) as CSV."""
    stream.write("run_id,x,y,A,B\n")
    for run_id, x, y, A, B in rows:
        stream.write(f"{run_id},{x},{y},{A},{B}\n")


def write_singlet_csv(stream, rows) -> None:
    """Rows of (run_id, basis, mu, x_p) as CSV."""
    stream.write("run_id,basis,mu,x_p\n")
    for run_id, basis, mu, x_p in rows:
        stream.write(f"{run_id},{basis},{mu},{x_p:.17g}\n")
