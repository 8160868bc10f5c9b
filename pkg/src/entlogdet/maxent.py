"""Maximum-entropy densities on the unit interval from power-moment constraints.

Densities live on a uniform midpoint grid over (0, 1) and have the form

    q(x) = exp(-1 - sum_k alpha_k x^k),   k = 0..M,

where ``alpha_0`` carries the normalization. All integrals are midpoint sums.

The coefficients are fitted by cyclic coordinate updates, one multiplier at a
time in the order 0, 1, ..., M, 0, 1, ...::

    alpha_i <- alpha_i + log(m_i / mu_i),   m_i = sum_j x_j^i q(x_j) dx

so a moment that is too large raises its multiplier and shrinks the density
where x^i is large. For i = 0 the step is exact.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

__all__ = [
    "Grid",
    "GridDensity",
    "MaxEntDensity",
    "MaxEntError",
    "MaxEntReport",
    "density_to_dict",
    "density_to_json",
    "entropy",
    "kl_divergence",
    "solve_maxent",
    "total_variation",
    "total_variation_bound",
    "total_variation_norm_bound",
]

logger = logging.getLogger(__name__)

EXPONENT_CLAMP = 700.0
# exact recomputation of q from the multipliers, bounding multiplicative drift
_REFRESH_EVERY = 256


class MaxEntError(ArithmeticError):
    """The density overflowed or vanished while fitting the multipliers."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid of cell midpoints x_j = (j + 1/2) dx on (0, 1)."""

    dx: float = 1e-3

    def __post_init__(self):
        if not 0 < self.dx <= 0.01:
            raise ValueError(f"grid spacing must be in (0, 0.01], got {self.dx}")
        cells = 1.0 / self.dx
        if abs(cells - round(cells)) > 1e-6 * cells:
            raise ValueError(f"1/dx must be an integer, got dx={self.dx}")

    @property
    def size(self) -> int:
        return int(round(1.0 / self.dx))

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.size) + 0.5) * self.dx

    def powers(self, max_order: int) -> np.ndarray:
        """(max_order + 1, size) table of x_j^k."""
        return self.nodes[None, :] ** np.arange(max_order + 1)[:, None]


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density values at the nodes of ``grid``."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if np.shape(self.values) != (self.grid.size,):
            raise ValueError(f"density has {np.size(self.values)} values, grid has {self.grid.size} nodes")

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dx)

    def moments(self, max_order: int) -> np.ndarray:
        """Grid moments of orders 0..max_order."""
        return self.grid.powers(max_order) @ self.values * self.grid.dx

    def mean_log(self) -> float:
        """Midpoint-rule value of the integral of log(x) q(x)."""
        return float(np.log(self.grid.nodes) @ self.values * self.grid.dx)

    def to_csv(self, stream: IO[str]):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["x", "q"])
        for x, q in zip(self.grid.nodes, self.values):
            writer.writerow([repr(float(x)), repr(float(q))])


@dataclass(frozen=True, eq=False)
class MaxEntDensity(GridDensity):
    alphas: np.ndarray = field(default_factory=lambda: np.zeros(1))
    target: np.ndarray = field(default_factory=lambda: np.ones(1))

    @property
    def num_moments(self) -> int:
        """Number of constraints beyond normalization."""
        return self.alphas.size - 1

    @classmethod
    def from_alphas(cls, alphas, grid: Grid, target=None) -> "MaxEntDensity":
        alphas = np.asarray(alphas, dtype=float)
        q, _ = _density(alphas, grid.powers(alphas.size - 1))
        return cls(q, grid, alphas.copy(), alphas * np.nan if target is None else np.asarray(target, float))


@dataclass(frozen=True)
class MaxEntReport:
    converged: bool
    iterations: int
    residual: float
    entropy: float
    clamped: bool = False


def _density(alphas: np.ndarray, powers: np.ndarray) -> tuple[np.ndarray, bool]:
    exponent = -1.0 - alphas @ powers
    clamped = bool(np.any(exponent > EXPONENT_CLAMP))
    np.clip(exponent, -EXPONENT_CLAMP, EXPONENT_CLAMP, out=exponent)
    return np.exp(exponent), clamped


def solve_maxent(
    moments: Sequence[float],
    grid: Grid | None = None,
    tol: float = 1e-6,
    max_iters: int = 100_000,
    initial: Sequence[float] | None = None,
    seed: int | None = None,
) -> tuple[MaxEntDensity, MaxEntReport]:
    """Fit exp(-1 - sum alpha_k x^k) to the moments mu_0..mu_M.

    Args:
        moments: target moments with ``moments[0] == 1`` (normalization).
        grid: quadrature grid, 0.001 spacing by default.
        tol: stop once max_k |m_k - mu_k| <= tol.
        max_iters: cap on full cycles through all multipliers.
        initial: starting multipliers; shorter vectors are zero-padded, which
            allows warm starts from a fit with fewer moments.
        seed: when given and ``initial`` is None, start from N(0, 1) draws
            instead of the uniform density (all zeros).

    Returns:
        The density at the iterate with the smallest residual, and a report.
        A run that hits ``max_iters`` returns ``converged=False`` rather than
        raising. Exponents above +700 are clamped and also mark the fit as not
        converged.

    Raises:
        MaxEntError: the density overflowed or vanished during a coordinate
            update; the message names the multiplier being updated.
    """
    grid = grid or Grid()
    mu = np.asarray(moments, dtype=float)
    if mu.ndim != 1 or mu.size < 1:
        raise ValueError("need at least the zeroth moment")
    if abs(mu[0] - 1.0) > 1e-12:
        raise ValueError(f"zeroth moment must be 1, got {mu[0]}")
    if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
        raise ValueError(f"moments must be positive and finite, got {mu.tolist()}")
    if np.any(mu[1:] > 1) or np.any(np.diff(mu) > 0):
        logger.warning("moments %s are not a nonincreasing sequence in (0, 1]", mu.tolist())

    num = mu.size
    powers = grid.powers(num - 1)
    dx = grid.dx
    if initial is not None:
        alphas = np.zeros(num)
        initial = np.asarray(initial, dtype=float)[:num]
        alphas[: initial.size] = initial
    elif seed is not None:
        alphas = np.random.default_rng(seed).standard_normal(num)
    else:
        alphas = np.zeros(num)

    q, clamped = _density(alphas, powers)
    step = np.empty_like(q)
    best_alphas, best_residual = alphas.copy(), math.inf
    converged = False
    cycles = 0
    for cycles in range(1, max_iters + 1):
        for i in range(num):
            m = float(powers[i] @ q) * dx
            if not (math.isfinite(m) and m > 0):
                raise MaxEntError(
                    f"density became non-finite while updating alpha[{i}] = {alphas[i]!r} "
                    f"(moment integral {m!r})"
                )
            delta = math.log(m / mu[i])
            alphas[i] += delta
            np.multiply(powers[i], -delta, out=step)
            np.exp(step, out=step)
            # x^i is monotone on the grid, so the step peaks at an end node
            if math.isinf(step[0]) or math.isinf(step[-1]):
                raise MaxEntError(
                    f"density overflowed while updating alpha[{i}] = {alphas[i]!r} (step {delta!r})"
                )
            q *= step
        if cycles % _REFRESH_EVERY == 0:
            q, clamped = _density(alphas, powers)
        residual = float(np.max(np.abs(powers @ q * dx - mu)))
        if not math.isfinite(residual):
            raise MaxEntError(f"density became non-finite; alphas = {alphas.tolist()}")
        if residual < best_residual:
            best_residual = residual
            best_alphas[:] = alphas
        if residual <= tol:
            converged = True
            break

    q, clamped = _density(best_alphas, powers)
    residual = float(np.max(np.abs(powers @ q * dx - mu)))
    density = MaxEntDensity(q, grid, best_alphas, mu.copy())
    converged = converged and residual <= tol and not clamped
    report = MaxEntReport(converged, cycles, residual, entropy(density), clamped)
    if not converged:
        logger.info("MaxEnt fit with %d moments stopped at residual %.3g after %d cycles", num - 1, residual, cycles)
    return density, report


def _xlogx(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    pos = values > 0
    out[pos] = values[pos] * np.log(values[pos])
    return out


def entropy(density: GridDensity) -> float:
    """Differential entropy -sum q log q dx in nats; zero values contribute 0."""
    return float(-_xlogx(np.asarray(density.values)).sum() * density.grid.dx)


def kl_divergence(p: GridDensity, q: GridDensity) -> float:
    """D(p || q) = sum p log(p / q) dx; +inf when q vanishes where p does not."""
    if p.grid != q.grid:
        raise ValueError(f"grid mismatch: dx={p.grid.dx} vs dx={q.grid.dx}")
    pv, qv = np.asarray(p.values), np.asarray(q.values)
    support = pv > 0
    if np.any(qv[support] <= 0):
        return math.inf
    return float(np.sum(pv[support] * np.log(pv[support] / qv[support])) * p.grid.dx)


def total_variation(p: GridDensity, q: GridDensity) -> float:
    """Half the L1 distance between two grid densities."""
    if p.grid != q.grid:
        raise ValueError(f"grid mismatch: dx={p.grid.dx} vs dx={q.grid.dx}")
    return 0.5 * float(np.abs(np.asarray(p.values) - np.asarray(q.values)).sum() * p.grid.dx)


def _check_kl(kl: float) -> float:
    # round-off can leave a KL of an identical pair a hair below zero
    if kl < -1e-12 or math.isnan(kl):
        raise ValueError(f"KL divergence must be nonnegative, got {kl}")
    return max(kl, 0.0)


def total_variation_bound(kl: float) -> float:
    """Pinsker: total variation distance <= sqrt(kl / 2)."""
    return math.sqrt(_check_kl(kl) / 2.0)


def total_variation_norm_bound(kl: float) -> float:
    """L1 form of Pinsker's inequality, |p - q|_1 <= sqrt(2 kl)."""
    return math.sqrt(2.0 * _check_kl(kl))


def density_to_dict(density: MaxEntDensity, report: MaxEntReport) -> dict:
    return {
        "alphas": density.alphas.tolist(),
        "dx": density.grid.dx,
        "entropy": report.entropy,
        "residual": report.residual,
        "converged": report.converged,
    }


def density_to_json(density: MaxEntDensity, report: MaxEntReport, **kwargs) -> str:
    return json.dumps(density_to_dict(density, report), **kwargs)
