"""Pointer-position distributions for collective spin measurements.

The measuring device is modeled by a Gaussian pointer of r.m.s. width
``delta`` that gets displaced by the measured magnetization.  All
distributions over the pointer position are finite mixtures of
equal-width Gaussians sitting at integer-spaced shifts, so they are kept
in analytic form (shift, weight) and only evaluated on a grid on demand.

Weights come in two arithmetic modes: exact ``Fraction`` weights
(feasible up to a few hundred spins) and log-space floating weights for
large ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

_LN2 = math.log(2.0)

Weight = Union[float, Fraction]


class InvalidMagnetizationError(ValueError):
    """Magnetization violates the parity or range constraint."""


@dataclass(frozen=True)
class PointerShape:
    """Gaussian pointer profile with r.m.s. position deviation ``delta``.

    ``delta`` is expressed in units of the single-spin eigenvalue step,
    so ``delta << 1`` is the strong regime and ``delta >> 1`` the weak one.
    """

    delta: float

    def __post_init__(self) -> None:
        if not (self.delta > 0.0):
            raise ValueError(f"pointer width must be positive, got {self.delta}")


def pointer_density(x, shape: PointerShape):
    """Probability density |Phi(x)|^2 of the undisplaced pointer.

    Accepts scalars or numpy arrays.
    """
    d2 = shape.delta * shape.delta
    return np.exp(-np.asarray(x, dtype=float) ** 2 / (2.0 * d2)) / math.sqrt(2.0 * math.pi * d2)


def log_binomial_weight(n: int, k: int) -> float:
    """log of 2^(-n) * C(n, k); -inf outside 0 <= k <= n.

    Uses the log-gamma representation, accurate to ~1e-14 relative in the
    exponentiated value for n up to 1e6.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if k < 0 or k > n:
        return -math.inf
    return (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) - n * _LN2
    )


@dataclass(frozen=True)
class Magnetization:
    """Net spin excess mu along a direction, for an ensemble of n_spins."""

    mu: int
    n_spins: int

    def __post_init__(self) -> None:
        if self.n_spins < 1:
            raise InvalidMagnetizationError(f"n_spins must be >= 1, got {self.n_spins}")
        if abs(self.mu) > self.n_spins:
            raise InvalidMagnetizationError(
                f"|mu| = {abs(self.mu)} exceeds n_spins = {self.n_spins}"
            )
        if (self.mu - self.n_spins) % 2 != 0:
            raise InvalidMagnetizationError(
                f"mu = {self.mu} must have the same parity as n_spins = {self.n_spins}"
            )

    @property
    def n_up(self) -> int:
        return (self.n_spins + self.mu) // 2

    @property
    def n_down(self) -> int:
        return (self.n_spins - self.mu) // 2


@dataclass(frozen=True)
class SpinAmplitudes:
    """State of N spins restricted to the symmetric k-up sectors.

    ``amplitudes[k]`` is the coefficient on the normalized symmetric state
    with k spins up, k = 0..N.  Norm must be 1 to within 1e-12.
    """

    n_spins: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.n_spins + 1,):
            raise ValueError(
                f"expected {self.n_spins + 1} amplitudes, got shape {amps.shape}"
            )
        norm2 = float(np.sum(np.abs(amps) ** 2))
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |psi|^2 = {norm2!r}")

    def weights(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ShiftMixture:
    """Mixture of equal-width Gaussians at integer shifts.

    Shifts live in {-N..N} with the parity of N; weights are floats or
    exact ``Fraction``s summing to one.
    """

    n_spins: int
    components: tuple
    shape: PointerShape

    def __post_init__(self) -> None:
        comps = tuple((int(s), w) for s, w in self.components)
        object.__setattr__(self, "components", comps)
        shifts = [s for s, _ in comps]
        if any(b <= a for a, b in zip(shifts, shifts[1:])):
            raise ValueError("shifts must be strictly increasing")
        if self.is_exact:
            total = sum(w for _, w in comps)
            if total != 1:
                raise ValueError(f"exact weights must sum to 1, got {total}")
        else:
            total = math.fsum(float(w) for _, w in comps)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"weights must sum to 1 within 1e-12, got {total!r}")
        if any((not isinstance(w, Fraction)) and w < 0 for _, w in comps):
            raise ValueError("weights must be nonnegative")

    @property
    def is_exact(self) -> bool:
        return all(isinstance(w, Fraction) for _, w in self.components)

    @property
    def shifts(self) -> np.ndarray:
        return np.array([s for s, _ in self.components], dtype=float)

    @property
    def weight_floats(self) -> np.ndarray:
        return np.array([float(w) for _, w in self.components], dtype=float)

    def mean(self) -> float:
        return float(np.dot(self.weight_floats, self.shifts))

    def variance(self) -> float:
        m = self.mean()
        w = self.weight_floats
        return float(np.dot(w, (self.shifts - m) ** 2)) + self.shape.delta**2

    def default_grid(self) -> np.ndarray:
        half = self.n_spins + 8.0 * self.shape.delta
        step = min(self.shape.delta / 8.0, 0.25)
        n = int(math.ceil(2.0 * half / step))
        return np.linspace(-half, half, n + 1)

    def density(self, x) -> np.ndarray:
        """Evaluate the mixture density at positions x (scalar or array)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mat = gaussian_component_matrix(self.shifts, x, self.shape.delta)
        return mat @ self.weight_floats

    def to_float(self) -> "ShiftMixture":
        if not self.is_exact:
            return self
        return ShiftMixture(
            self.n_spins,
            tuple((s, float(w)) for s, w in self.components),
            self.shape,
        )

    def write_csv(self, stream) -> None:
        """Serialize as `shift,weight` rows, increasing shift, 17 sig digits."""
        stream.write("shift,weight\n")
        for s, w in self.components:
            stream.write(f"{s},{float(w):.17g}\n")

    def write_density_csv(self, stream, grid: Optional[np.ndarray] = None) -> None:
        if grid is None:
            grid = self.default_grid()
        dens = self.density(grid)
        stream.write("x,density\n")
        for x, d in zip(grid, dens):
            stream.write(f"{x:.17g},{d:.17g}\n")


def gaussian_component_matrix(
    shifts: np.ndarray, grid: np.ndarray, delta: float
) -> np.ndarray:
    """Matrix G[i, k] = normal density at grid[i] of a Gaussian centered at shifts[k]."""
    d2 = delta * delta
    z = (np.asarray(grid, float)[:, None] - np.asarray(shifts, float)[None, :]) ** 2
    return np.exp(-z / (2.0 * d2)) / math.sqrt(2.0 * math.pi * d2)


def magnet_amplitudes(n_spins: int, theta: float) -> SpinAmplitudes:
    """Product state of N spins all along a direction at polar angle theta.

    The amplitude on the symmetric k-up sector is
    sqrt(C(N,k)) * cos(theta/2)^k * sin(theta/2)^(N-k).
    """
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    if not (0.0 <= theta <= math.pi):
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    n = n_spins
    # half-angle via cos(theta) so theta = 0 and theta = pi give exact 0/1
    ct = math.cos(theta)
    c = math.sqrt((1.0 + ct) / 2.0)
    s = math.sqrt((1.0 - ct) / 2.0)
    amps = np.zeros(n + 1)
    for k in range(n + 1):
        if (c == 0.0 and k > 0) or (s == 0.0 and k < n):
            continue
        log_amp = 0.5 * (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))
        if k > 0:
            log_amp += k * math.log(c)
        if k < n:
            log_amp += (n - k) * math.log(s)
        amps[k] = math.exp(log_amp)
    amps /= math.sqrt(float(np.dot(amps, amps)))
    return SpinAmplitudes(n, amps)


def pointer_distribution_of_state(
    state: SpinAmplitudes, shape: PointerShape
) -> ShiftMixture:
    """Pointer marginal after coupling: weight |amp_k|^2 at shift 2k - N."""
    n = state.n_spins
    w = state.weights()
    comps = [(2 * k - n, float(w[k])) for k in range(n + 1) if w[k] > 0.0]
    total = math.fsum(wt for _, wt in comps)
    comps = [(s, wt / total) for s, wt in comps]
    return ShiftMixture(n, tuple(comps), shape)


def collapse_posterior(
    state: SpinAmplitudes, shape: PointerShape, x_p: float
) -> tuple[SpinAmplitudes, float]:
    """State update after reading the pointer at x_p.

    Each amplitude is multiplied by the pointer amplitude displaced to its
    eigenvalue; the squared norm of that unnormalized state is the
    probability density of x_p and is returned alongside the normalized
    posterior.
    """
    n = state.n_spins
    shifts = 2.0 * np.arange(n + 1) - n
    d2 = shape.delta * shape.delta
    log_phi = -((x_p - shifts) ** 2) / (4.0 * d2)
    # rescale by the dominant occupied term so far-tail x_p stays stable
    occupied = np.abs(state.amplitudes) > 0.0
    peak = float(np.max(log_phi[occupied]))
    raw = state.amplitudes * np.exp(log_phi - peak)
    scaled2 = float(np.sum(np.abs(raw) ** 2))
    norm2 = scaled2 * math.exp(2.0 * peak) / math.sqrt(2.0 * math.pi * d2)
    return SpinAmplitudes(n, raw / math.sqrt(scaled2)), norm2


def rho_z_conditional(mu: Magnetization, shape: PointerShape) -> ShiftMixture:
    """Pointer distribution given magnetization mu after a z-preparation:
    a single Gaussian displaced by mu."""
    return ShiftMixture(mu.n_spins, ((mu.mu, Fraction(1)),), shape)


def rho_z_marginal(
    n_spins: int, shape: PointerShape, exact: bool = False
) -> ShiftMixture:
    """Pointer distribution with the binomial magnetization law averaged in."""
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    n = n_spins
    if exact:
        denom = 1 << n
        comps = tuple((2 * j - n, Fraction(math.comb(n, j), denom)) for j in range(n + 1))
    elif n <= 200:
        # correctly rounded: one rounding on the binomial, exact power-of-two division
        denom = 1 << n
        comps = tuple(
            (2 * j - n, float(Fraction(math.comb(n, j), denom))) for j in range(n + 1)
        )
    else:
        comps = tuple(
            (2 * j - n, math.exp(log_binomial_weight(n, j))) for j in range(n + 1)
        )
    return ShiftMixture(n, comps, shape)


def cjk_squared(mu: Magnetization, exact: bool = False) -> np.ndarray:
    """Squared expansion coefficients of the x-magnetized product state in
    the z-basis sectors: entry (j, k) = 2^(-N) C(n_up, j) C(n_down, k).

    The sign of the underlying coefficient never matters downstream, so
    only the square is produced.  Shape is (n_up + 1, n_down + 1).
    """
    n = mu.n_spins
    jm, km = mu.n_up, mu.n_down
    if exact:
        denom = 1 << n
        out = np.empty((jm + 1, km + 1), dtype=object)
        for j in range(jm + 1):
            cj = math.comb(jm, j)
            for k in range(km + 1):
                out[j, k] = Fraction(cj * math.comb(km, k), denom)
        return out
    row_j = np.array(
        [math.lgamma(jm + 1) - math.lgamma(j + 1) - math.lgamma(jm - j + 1) for j in range(jm + 1)]
    )
    row_k = np.array(
        [math.lgamma(km + 1) - math.lgamma(k + 1) - math.lgamma(km - k + 1) for k in range(km + 1)]
    )
    return np.exp(row_j[:, None] + row_k[None, :] - n * _LN2)


def _rho_x_weights_float(mu: Magnetization) -> np.ndarray:
    n = mu.n_spins
    c2 = cjk_squared(mu, exact=False)
    jm, km = mu.n_up, mu.n_down
    idx = np.add.outer(np.arange(jm + 1), np.arange(km + 1)).ravel()
    return np.bincount(idx, weights=c2.ravel(), minlength=n + 1)


def rho_x_conditional(
    mu: Magnetization, shape: PointerShape, exact: bool = False
) -> ShiftMixture:
    """Pointer distribution given magnetization mu after an x-preparation,
    obtained by tracing out the spins: the double sum of c_jk^2 grouped by
    total up-count s = j + k, component at shift 2s - N."""
    n = mu.n_spins
    if exact:
        c2 = cjk_squared(mu, exact=True)
        weights = [Fraction(0)] * (n + 1)
        jm, km = mu.n_up, mu.n_down
        for j in range(jm + 1):
            for k in range(km + 1):
                weights[j + k] += c2[j, k]
        comps = tuple((2 * s - n, weights[s]) for s in range(n + 1))
    else:
        w = _rho_x_weights_float(mu)
        comps = tuple((2 * s - n, float(w[s])) for s in range(n + 1))
    return ShiftMixture(n, comps, shape)


def reduce_single_sum(mu: Magnetization) -> list:
    """Collapse the double sum over (j, k) to one over s = j + k by exact
    integer convolution of the two binomial rows; the result is
    2^(-N) C(N, s) by the Vandermonde identity."""
    n = mu.n_spins
    jm, km = mu.n_up, mu.n_down
    row_j = [math.comb(jm, j) for j in range(jm + 1)]
    row_k = [math.comb(km, k) for k in range(km + 1)]
    conv = [0] * (n + 1)
    for j, cj in enumerate(row_j):
        for k, ck in enumerate(row_k):
            conv[j + k] += cj * ck
    denom = 1 << n
    return [Fraction(c, denom) for c in conv]


def total_variation(
    a: ShiftMixture, b: ShiftMixture, grid: Optional[np.ndarray] = None
) -> float:
    """Half the integrated absolute density difference, on a shared grid.

    Both mixtures must use the same pointer shape; since every component
    then has the same width, the difference density is a signed mixture
    over the union of shifts, evaluated with a single Gaussian matrix.
    """
    if a.shape != b.shape:
        raise ValueError("mixtures must share the same pointer shape")
    if grid is None:
        half = max(a.n_spins, b.n_spins) + 8.0 * a.shape.delta
        step = min(a.shape.delta / 8.0, 0.25)
        n = int(math.ceil(2.0 * half / step))
        grid = np.linspace(-half, half, n + 1)
    dw: dict[int, float] = {}
    for s, w in a.components:
        dw[s] = dw.get(s, 0.0) + float(w)
    for s, w in b.components:
        dw[s] = dw.get(s, 0.0) - float(w)
    shifts = np.array(sorted(dw), dtype=float)
    delta_w = np.array([dw[int(s)] for s in shifts])
    mat = gaussian_component_matrix(shifts, grid, a.shape.delta)
    diff = mat @ delta_w
    return 0.5 * float(np.trapezoid(np.abs(diff), grid))


def valid_magnetizations(n_spins: int) -> list[Magnetization]:
    return [
        Magnetization(mu, n_spins) for mu in range(-n_spins, n_spins + 1, 2)
    ]


def no_signaling_deviation(
    n_spins: int, shape: PointerShape, mus: Optional[Sequence[Magnetization]] = None
) -> float:
    """Largest total-variation distance between the x-conditional pointer
    distribution and the z-marginal, over the requested magnetizations.

    Shares one Gaussian component matrix across all mu, which makes the
    exhaustive sweep over mu cheap.
    """
    n = n_spins
    wz = rho_z_marginal(n, shape).weight_floats
    shifts = np.arange(-n, n + 1, 2, dtype=float)
    half = n + 8.0 * shape.delta
    step = min(shape.delta / 8.0, 0.25)
    npts = int(math.ceil(2.0 * half / step))
    grid = np.linspace(-half, half, npts + 1)
    mat = gaussian_component_matrix(shifts, grid, shape.delta)
    if mus is None:
        mus = valid_magnetizations(n)
    worst = 0.0
    for mu in mus:
        wx = _rho_x_weights_float(mu)
        diff = mat @ (wx - wz)
        tv = 0.5 * float(np.trapezoid(np.abs(diff), grid))
        worst = max(worst, tv)
    return worst
