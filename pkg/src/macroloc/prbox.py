"""Macroscopic-limit analysis of noisy PR-boxes.

In the large-ensemble limit the coarse-grained sums (A0, A1, B0, B1)
become jointly Gaussian, so the existence of a nonnegative joint
distribution reduces to positive semidefiniteness of their 4x4
correlation matrix.  For isotropic boxes this has closed-form
eigenvalues and recovers Tsirelson's bound; for general no-signaling
boxes the unknown same-side correlators are completed by search.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

SQRT_HALF = math.sqrt(0.5)

PSD_TOL = 1e-10


class BoxValidationError(ValueError):
    """A bipartite box distribution violates normalization or no-signaling."""


@dataclass(frozen=True)
class IsotropicParams:
    """Visibility V of an isotropic noisy PR-box; v = 2V - 1 is the
    correlator strength."""

    visibility: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.visibility <= 1.0):
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")

    @property
    def v(self) -> float:
        return 2.0 * self.visibility - 1.0

    @classmethod
    def from_v(cls, v: float) -> "IsotropicParams":
        return cls((1.0 + v) / 2.0)


def _check_vs(v: float, s: float) -> None:
    if abs(v) > 1.0:
        raise ValueError(f"|v| must be <= 1, got {v}")
    if abs(s) > 1.0:
        raise ValueError(f"|s| must be <= 1, got {s}")


def build_isotropic_K(v: float, s: float) -> np.ndarray:
    """Correlation matrix of (A0, A1, B0, B1) per box (i.e. K/N) for an
    isotropic box with cross correlator v and same-side correlator s."""
    _check_vs(v, s)
    return np.array(
        [
            [1.0, s, v, v],
            [s, 1.0, v, -v],
            [v, v, 1.0, s],
            [v, -v, s, 1.0],
        ]
    )


def analytic_eigenvalues(v: float, s: float) -> np.ndarray:
    """Closed-form eigenvalues 1 +/- sqrt(2v^2 + s^2 +/- 2vs) of the
    isotropic correlation matrix."""
    _check_vs(v, s)
    rp = math.sqrt(2.0 * v * v + s * s + 2.0 * v * s)
    rm = math.sqrt(2.0 * v * v + s * s - 2.0 * v * s)
    return np.array([1.0 + rp, 1.0 - rp, 1.0 + rm, 1.0 - rm])


def is_macroscopically_local(v: float, s: float, tol: float = PSD_TOL) -> bool:
    """True iff the macroscopic Gaussian of the isotropic box is a genuine
    (nonnegative) probability distribution, i.e. the correlation matrix is
    PSD up to tol."""
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    return float(np.min(analytic_eigenvalues(v, s))) >= -tol


def admissible_s_interval(v: float) -> Optional[tuple[float, float]]:
    """Closed interval of same-side correlators s keeping the correlation
    matrix PSD, or None when no s works (2v^2 > 1).

    The binding constraint is s^2 + 2|v||s| + 2v^2 <= 1, i.e.
    |s| <= sqrt(1 - v^2) - |v|.
    """
    if abs(v) > 1.0:
        raise ValueError(f"|v| must be <= 1, got {v}")
    if 2.0 * v * v > 1.0:
        return None
    half = math.sqrt(1.0 - v * v) - abs(v)
    half = min(half, 1.0)
    return (-half, half)


@dataclass(frozen=True)
class TsirelsonScanResult:
    v_star: float
    V_star: float


def tsirelson_scan(
    v_grid_step: float, s_resolution: Optional[float] = None
) -> TsirelsonScanResult:
    """Largest v on a grid of spacing v_grid_step admitting some same-side
    correlator s; converges to sqrt(1/2) as the step shrinks.

    With s_resolution given, feasibility is established by scanning s on
    that grid instead of using the closed-form interval.
    """
    if v_grid_step <= 0.0:
        raise ValueError("v_grid_step must be positive")
    if s_resolution is not None and s_resolution <= 0.0:
        raise ValueError("s_resolution must be positive")
    n = int(math.floor(1.0 / v_grid_step))
    v_star = 0.0
    for i in range(n + 1):
        v = i * v_grid_step
        if v > 1.0:
            break
        if s_resolution is None:
            feasible = admissible_s_interval(v) is not None
        else:
            m = int(math.floor(1.0 / s_resolution))
            feasible = any(
                is_macroscopically_local(v, j * s_resolution)
                for j in range(-m, m + 1)
                if abs(j * s_resolution) <= 1.0
            )
        if feasible:
            v_star = v
    return TsirelsonScanResult(v_star, (1.0 + v_star) / 2.0)


# Outcome index 0 maps to +1, index 1 to -1.
_OUTCOME = (1, -1)


@dataclass(frozen=True)
class BoxDistribution:
    """Conditional distribution p[x][y][a][b] of a bipartite binary-input
    box; outcome index 0 means +1, index 1 means -1."""

    p: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.p, dtype=float)
        if arr.shape != (2, 2, 2, 2):
            raise BoxValidationError(f"p must have shape (2,2,2,2), got {arr.shape}")
        object.__setattr__(self, "p", arr)
        self.validate()

    def validate(self, atol: float = 1e-12) -> None:
        p = self.p
        if np.any(p < -atol):
            idx = tuple(int(i) for i in np.argwhere(p < -atol)[0])
            raise BoxValidationError(f"negative probability at [x][y][a][b] = {idx}")
        for x in range(2):
            for y in range(2):
                tot = float(p[x, y].sum())
                if abs(tot - 1.0) > atol:
                    raise BoxValidationError(
                        f"normalization violated at (x={x}, y={y}): sum = {tot!r}"
                    )
        for x in range(2):
            for a in range(2):
                m0 = float(p[x, 0, a].sum())
                m1 = float(p[x, 1, a].sum())
                if abs(m0 - m1) > atol:
                    raise BoxValidationError(
                        f"signaling to Alice at (x={x}, a={a}): "
                        f"marginal {m0!r} for y=0 vs {m1!r} for y=1"
                    )
        for y in range(2):
            for b in range(2):
                m0 = float(p[0, y, :, b].sum())
                m1 = float(p[1, y, :, b].sum())
                if abs(m0 - m1) > atol:
                    raise BoxValidationError(
                        f"signaling to Bob at (y={y}, b={b}): "
                        f"marginal {m0!r} for x=0 vs {m1!r} for x=1"
                    )

    @classmethod
    def isotropic(cls, visibility: float) -> "BoxDistribution":
        """Noisy PR-box: P(ab = (-1)^(xy) | x, y) = V, uniform marginals."""
        V = IsotropicParams(visibility).visibility
        p = np.empty((2, 2, 2, 2))
        for x in range(2):
            for y in range(2):
                target = (-1) ** (x * y)
                for a in range(2):
                    for b in range(2):
                        correlated = _OUTCOME[a] * _OUTCOME[b] == target
                        p[x, y, a, b] = V / 2.0 if correlated else (1.0 - V) / 2.0
        return cls(p)

    @classmethod
    def white_noise(cls) -> "BoxDistribution":
        return cls(np.full((2, 2, 2, 2), 0.25))

    @classmethod
    def deterministic(cls, a0: int, a1: int, b0: int, b1: int) -> "BoxDistribution":
        """Local deterministic strategy: Alice outputs a_x, Bob outputs b_y
        (each +/-1)."""
        outs = (a0, a1, b0, b1)
        if any(o not in (-1, 1) for o in outs):
            raise ValueError("outputs must be +/-1")
        p = np.zeros((2, 2, 2, 2))
        a_idx = [0 if a0 == 1 else 1, 0 if a1 == 1 else 1]
        b_idx = [0 if b0 == 1 else 1, 0 if b1 == 1 else 1]
        for x in range(2):
            for y in range(2):
                p[x, y, a_idx[x], b_idx[y]] = 1.0
        return cls(p)

    @classmethod
    def random_local(cls, rng: np.random.Generator) -> "BoxDistribution":
        """Random mixture of the 16 local deterministic strategies."""
        weights = rng.dirichlet(np.ones(16))
        p = np.zeros((2, 2, 2, 2))
        i = 0
        for a0 in (1, -1):
            for a1 in (1, -1):
                for b0 in (1, -1):
                    for b1 in (1, -1):
                        p += weights[i] * cls.deterministic(a0, a1, b0, b1).p
                        i += 1
        return cls(p)

    @classmethod
    def from_json(cls, text: str) -> "BoxDistribution":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BoxValidationError(f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "p" not in obj:
            raise BoxValidationError('expected a JSON object with a "p" entry')
        try:
            arr = np.asarray(obj["p"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise BoxValidationError(f'"p" is not a numeric array: {exc}') from exc
        if arr.shape != (2, 2, 2, 2):
            raise BoxValidationError(
                f'"p" must be a 2x2x2x2 nested array, got shape {arr.shape}'
            )
        return cls(arr)

    def to_json(self) -> str:
        return json.dumps({"p": self.p.tolist()})


@dataclass(frozen=True)
class MacroscopicSummary:
    """Per-box statistics that determine the macroscopic Gaussian: means,
    variances and centered cross-correlators, all in units of N."""

    mean_a: tuple[float, float]
    mean_b: tuple[float, float]
    var_a: tuple[float, float]
    var_b: tuple[float, float]
    raw_corr: np.ndarray  # E[ab | x, y], shape (2, 2)
    cov: np.ndarray  # centered: raw - mean_a[x] * mean_b[y]

    def __post_init__(self) -> None:
        raw = np.asarray(self.raw_corr, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "raw_corr", raw)
        object.__setattr__(self, "cov", cov)
        if np.any(np.abs(raw) > 1.0 + 1e-12):
            raise ValueError("cross-correlators must lie in [-1, 1]")
        if any(v < -1e-12 for v in self.var_a + self.var_b):
            raise ValueError("variances must be nonnegative")


def correlators_from_box(box: BoxDistribution) -> MacroscopicSummary:
    """Single-box means, variances and correlators feeding the macroscopic
    correlation matrix."""
    box.validate()
    a_vals = np.array(_OUTCOME, dtype=float)
    mean_a = tuple(float(np.einsum("ab,a->", box.p[x, 0], a_vals)) for x in range(2))
    mean_b = tuple(float(np.einsum("ab,b->", box.p[0, y], a_vals)) for y in range(2))
    raw = np.array(
        [
            [float(np.einsum("ab,a,b->", box.p[x, y], a_vals, a_vals)) for y in range(2)]
            for x in range(2)
        ]
    )
    var_a = tuple(1.0 - m * m for m in mean_a)
    var_b = tuple(1.0 - m * m for m in mean_b)
    cov = raw - np.outer(mean_a, mean_b)
    return MacroscopicSummary(mean_a, mean_b, var_a, var_b, raw, cov)


def chsh_value(box: BoxDistribution) -> float:
    """E[ab|00] + E[ab|01] + E[ab|10] - E[ab|11]."""
    raw = correlators_from_box(box).raw_corr
    return float(raw[0, 0] + raw[0, 1] + raw[1, 0] - raw[1, 1])


def centered_corr_matrix(
    summary: MacroscopicSummary, s_a: float, s_b: float
) -> np.ndarray:
    """Centered 4x4 correlation matrix of (A0, A1, B0, B1)/sqrt(N) with the
    candidate same-side correlators filled in."""
    c = summary.cov
    return np.array(
        [
            [summary.var_a[0], s_a, c[0, 0], c[0, 1]],
            [s_a, summary.var_a[1], c[1, 0], c[1, 1]],
            [c[0, 0], c[1, 0], summary.var_b[0], s_b],
            [c[0, 1], c[1, 1], s_b, summary.var_b[1]],
        ]
    )


def _min_eigs_on_grid(
    summary: MacroscopicSummary, sa: np.ndarray, sb: np.ndarray
) -> np.ndarray:
    """Minimum eigenvalue of the centered matrix for every (sa[i], sb[j])."""
    na, nb = len(sa), len(sb)
    mats = np.broadcast_to(
        centered_corr_matrix(summary, 0.0, 0.0), (na, nb, 4, 4)
    ).copy()
    mats[:, :, 0, 1] = mats[:, :, 1, 0] = sa[:, None]
    mats[:, :, 2, 3] = mats[:, :, 3, 2] = sb[None, :]
    return np.linalg.eigvalsh(mats.reshape(-1, 4, 4))[:, 0].reshape(na, nb)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: Optional[tuple[float, float]]
    min_eigenvalue: float

    def to_json_dict(self, chsh: Optional[float] = None) -> dict:
        out = {
            "feasible": self.feasible,
            "witness": (
                {"sA": self.witness[0], "sB": self.witness[1]} if self.witness else None
            ),
            "min_eigenvalue": self.min_eigenvalue,
        }
        if chsh is not None:
            out["chsh"] = chsh
        return out


def psd_completion_feasible(
    summary: MacroscopicSummary, tol: float = PSD_TOL
) -> FeasibilityResult:
    """Search for same-side correlators (sA, sB) making the centered matrix
    PSD: coarse grid at step 1/64 over [-1, 1]^2, then local grid
    refinement to 1e-6 around the best point.

    The minimum eigenvalue is concave in (sA, sB) (the matrix is affine in
    them), so the refinement converges to the global maximum.  A quick
    (0, 0) candidate short-circuits the search for clearly feasible
    summaries.
    """
    quick = float(np.linalg.eigvalsh(centered_corr_matrix(summary, 0.0, 0.0))[0])
    if quick >= tol:
        return FeasibilityResult(True, (0.0, 0.0), quick)

    grid = np.linspace(-1.0, 1.0, 129)  # step 1/64
    mins = _min_eigs_on_grid(summary, grid, grid)
    flat = int(np.argmax(mins))  # first max = lexicographically smallest point
    ia, ib = divmod(flat, len(grid))
    best = (float(grid[ia]), float(grid[ib]))
    best_val = float(mins[ia, ib])

    half = 1.0 / 64.0
    while half > 1e-6:
        half /= 4.0
        sa = np.clip(np.linspace(best[0] - 4 * half, best[0] + 4 * half, 9), -1.0, 1.0)
        sb = np.clip(np.linspace(best[1] - 4 * half, best[1] + 4 * half, 9), -1.0, 1.0)
        local = _min_eigs_on_grid(summary, sa, sb)
        flat = int(np.argmax(local))
        ia, ib = divmod(flat, 9)
        if float(local[ia, ib]) > best_val:
            best_val = float(local[ia, ib])
            best = (float(sa[ia]), float(sb[ib]))

    feasible = best_val >= -tol
    return FeasibilityResult(feasible, best if feasible else None, best_val)


def box_check_report(box: BoxDistribution, tol: float = PSD_TOL) -> dict:
    """Full JSON-ready report for a box: CHSH value and PSD-completion
    feasibility of its macroscopic summary."""
    summary = correlators_from_box(box)
    result = psd_completion_feasible(summary, tol)
    return result.to_json_dict(chsh=chsh_value(box))
