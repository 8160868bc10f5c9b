"""Log-determinant estimation from maximum-entropy spectral densities.

Pipeline: scale A by its Gershgorin bound c so the spectrum of B = A / c lies
in (0, 1], estimate the moments of B with Gaussian probes, fit MaxEnt
densities with a growing number of moment constraints, stop once the
entropy no longer drops, and return

    log det A = n * integral(log(x) q(x)) + n * log(c).
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .matio import CsrMatrix, gershgorin_bound
from .maxent import Grid, MaxEntDensity, MaxEntError, solve_maxent
from .probe import MomentSet, ProbeConfig, estimate_moments

__all__ = [
    "EntropySweep",
    "EstimationError",
    "ICEntry",
    "ICReport",
    "LogDetEstimate",
    "SweepEntry",
    "error_bound",
    "feasible_moments",
    "informativeness",
    "logdet",
    "run_sweep",
    "select_moment_count",
]

logger = logging.getLogger(__name__)

MIN_MOMENTS = 2
DEFAULT_EPS_STOP = 0.01
# relative spread of consecutive moment ratios below which the spectrum is a single atom
ATOM_RTOL = 1e-9


class EstimationError(ArithmeticError):
    """No moment count produced a usable density."""


@dataclass
class SweepEntry:
    M: int
    entropy: float = math.nan
    logdet: float = math.nan
    residual: float = math.nan
    converged: bool = False
    iterations: int = 0
    alphas: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class EntropySweep:
    entries: list[SweepEntry]
    stopping_M: int | None = None

    def entry(self, m: int) -> SweepEntry:
        for e in self.entries:
            if e.M == m:
                return e
        raise KeyError(m)

    def usable(self) -> list[SweepEntry]:
        return [e for e in self.entries if not e.failed]


@dataclass
class ICEntry:
    M: int
    delta_entropy: float
    correction: float
    ic: float

    @property
    def flagged(self) -> bool:
        """Adding moment M looks uninformative once noise is accounted for."""
        return self.ic > 0


@dataclass
class ICReport:
    entries: list[ICEntry]

    def flags(self) -> list[int]:
        return [e.M for e in self.entries if e.flagged]

    def get(self, m: int) -> ICEntry | None:
        return next((e for e in self.entries if e.M == m), None)


@dataclass
class LogDetEstimate:
    value: float
    n: int
    c: float
    moments_used: int
    entropy: float
    residual: float
    probe_seconds: float = 0.0
    maxent_seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def mean_log(self) -> float:
        """Estimated spectral mean of log(lambda / c)."""
        return self.value / self.n - math.log(self.c)


def select_moment_count(sweep: EntropySweep, eps_stop: float = DEFAULT_EPS_STOP, cap: int = 8) -> int:
    """Pick the moment count at which the entropy stops decreasing.

    Entries are scanned in increasing M (failed fits skipped). The first M
    whose entropy drop from its predecessor is below ``eps_stop`` wins. An
    entropy increase means the fit has broken down, so the predecessor is
    returned instead. Without either event the largest usable M <= cap wins.
    """
    usable = [e for e in sweep.usable() if e.M <= cap]
    if not usable:
        raise ValueError("sweep has no usable entries")
    prev = None
    for e in usable:
        if prev is not None:
            if e.entropy > prev.entropy:
                return prev.M
            if prev.entropy - e.entropy < eps_stop:
                return e.M
        prev = e
    return usable[-1].M


def informativeness(sweep: EntropySweep, moments: MomentSet | np.ndarray) -> ICReport:
    """Noise-corrected entropy change for each added moment.

    IC_M = (S_M - S_{M-1}) + sum_i |alpha_i^(M) - alpha_i^(M-1)| sigma_i, with
    the newly added multiplier compared against zero and sigma_0 = 0. A
    positive value flags a moment whose entropy gain is within noise.
    """
    sigma = np.asarray(moments.std if isinstance(moments, MomentSet) else moments, dtype=float)
    sigma = np.concatenate([[0.0], sigma])
    usable = sweep.usable()
    if len(usable) < 2:
        return ICReport([])
    out = []
    for prev, cur in zip(usable, usable[1:]):
        a_prev = np.zeros(len(cur.alphas))
        a_prev[: len(prev.alphas)] = prev.alphas
        d_alpha = np.abs(np.asarray(cur.alphas) - a_prev)
        correction = float(d_alpha @ sigma[: d_alpha.size])
        delta = cur.entropy - prev.entropy
        out.append(ICEntry(cur.M, delta, correction, delta + correction))
    return ICReport(out)


def error_bound(x_min: float, x_max: float, kl: float) -> float:
    """max(|log x_max|, |log x_min|) * sqrt(2 kl).

    Bounds |E_p[log x] - E_q[log x]| for densities supported on
    [x_min, x_max]. Needs the true KL divergence, so it is only usable when
    the exact spectrum is known.
    """
    if not 0 < x_min <= x_max:
        raise ValueError(f"need 0 < x_min <= x_max, got {x_min}, {x_max}")
    if kl < 0:
        raise ValueError(f"KL divergence must be nonnegative, got {kl}")
    return max(abs(math.log(x_max)), abs(math.log(x_min))) * math.sqrt(2.0 * kl)


def feasible_moments(means, grid: Grid) -> tuple[np.ndarray, bool]:
    """Pull sampled moments into the range a grid density can reproduce.

    Each moment is kept within [x_lo, x_hi] times its predecessor, where
    x_lo, x_hi are the outermost grid nodes; mu_0 = 1 is prepended. Returns
    the adjusted vector (orders 0..M) and whether anything changed.
    """
    means = np.asarray(means, dtype=float)
    nodes = grid.nodes
    lo, hi = nodes[0], nodes[-1]
    out = np.empty(means.size + 1)
    out[0] = 1.0
    for m, value in enumerate(means, start=1):
        out[m] = min(max(value, lo * out[m - 1]), hi * out[m - 1])
    return out, not np.array_equal(out[1:], means)


def _single_atom(means: np.ndarray) -> float | None:
    """Location of the atom if the moments are those of a point mass."""
    if means.size < 2 or np.any(means <= 0):
        return None
    ratios = means[1:] / means[:-1]
    if np.ptp(ratios) <= ATOM_RTOL * ratios.mean():
        return float(ratios.mean())
    return None


def run_sweep(
    targets: np.ndarray,
    n: int,
    c: float,
    grid: Grid,
    tol: float = 1e-6,
    max_iters: int = 100_000,
    eps_stop: float = DEFAULT_EPS_STOP,
    cap: int | None = None,
    full: bool = False,
    warm_start: bool = True,
) -> tuple[EntropySweep, dict[int, MaxEntDensity]]:
    """Fit MaxEnt densities for M = 2..cap moment constraints.

    ``targets`` holds orders 0..M_max. Unless ``full`` is set, fitting stops
    as soon as the stopping rule has made its choice.
    """
    cap = min(cap or targets.size - 1, targets.size - 1)
    entries: list[SweepEntry] = []
    densities: dict[int, MaxEntDensity] = {}
    start = None
    for m in range(MIN_MOMENTS, cap + 1):
        try:
            density, report = solve_maxent(targets[: m + 1], grid, tol=tol, max_iters=max_iters, initial=start)
        except MaxEntError as exc:
            logger.warning("MaxEnt fit with %d moments failed: %s", m, exc)
            entries.append(SweepEntry(m, error=str(exc)))
            continue
        densities[m] = density
        entries.append(
            SweepEntry(
                m,
                entropy=report.entropy,
                logdet=n * density.mean_log() + n * math.log(c),
                residual=report.residual,
                converged=report.converged,
                iterations=report.iterations,
                alphas=density.alphas.tolist(),
            )
        )
        if warm_start and report.converged:
            start = density.alphas
        if not full:
            if _stopped_at(EntropySweep(entries), eps_stop):
                break
    sweep = EntropySweep(entries)
    if sweep.usable():
        sweep.stopping_M = select_moment_count(sweep, eps_stop, cap)
    return sweep, densities


def _stopped_at(sweep: EntropySweep, eps_stop: float) -> bool:
    # an entropy increase is a negative drop, so one comparison covers both stops
    usable = sweep.usable()
    if len(usable) < 2:
        return False
    prev, cur = usable[-2], usable[-1]
    return prev.entropy - cur.entropy < eps_stop


def logdet(
    a: CsrMatrix,
    cfg: ProbeConfig | None = None,
    grid: Grid | None = None,
    tol: float = 1e-6,
    eps_stop: float = DEFAULT_EPS_STOP,
    max_iters: int = 100_000,
    full_sweep: bool = False,
    moments: MomentSet | None = None,
) -> tuple[LogDetEstimate, EntropySweep, ICReport]:
    """Estimate log det A for a sparse symmetric positive definite A.

    Args:
        a: the matrix; only the positive diagonal has been checked.
        cfg: probe settings (30 samples, 8 moments by default).
        grid: MaxEnt grid, 0.001 spacing by default.
        tol: MaxEnt moment residual tolerance.
        eps_stop: entropy decrease below which adding moments stops.
        max_iters: MaxEnt cycle cap per moment count.
        full_sweep: fit every M up to the cap instead of stopping early.
        moments: precomputed moments of A / c (e.g. exact ones); skips probing.

    Raises:
        EstimationError: no moment count gave a converged density.
    """
    cfg = cfg or ProbeConfig()
    grid = grid or Grid()
    n = a.n
    c = gershgorin_bound(a).c
    warnings: list[str] = []

    t0 = time.perf_counter()
    if moments is None:
        moments = estimate_moments(a.scaled(1.0 / c), cfg)
    probe_seconds = time.perf_counter() - t0
    if moments.out_of_range:
        warnings.append("moment estimates outside (0, 1]")

    means = np.asarray(moments.means[: cfg.max_moment], dtype=float)
    atom = _single_atom(means)
    if atom is not None:
        # B has a single eigenvalue; its density is a point mass no grid
        # exponential family represents, but the answer is exact
        value = n * math.log(atom) + n * math.log(c)
        warnings.append("spectrum is a single point mass; MaxEnt skipped")
        est = LogDetEstimate(value, n, c, means.size, 0.0, 0.0, probe_seconds, 0.0, warnings)
        return est, EntropySweep([]), ICReport([])

    targets, adjusted = feasible_moments(means, grid)
    if adjusted:
        warnings.append("moments adjusted into the grid-feasible range")

    t0 = time.perf_counter()
    sweep, _ = run_sweep(targets, n, c, grid, tol, max_iters, eps_stop, cfg.max_moment, full_sweep)
    maxent_seconds = time.perf_counter() - t0
    if sweep.stopping_M is None:
        raise EstimationError("every MaxEnt fit failed: " + "; ".join(e.error or "" for e in sweep.entries))

    chosen = sweep.entry(sweep.stopping_M)
    if not chosen.converged:
        fallback = [e for e in sweep.usable() if e.converged and e.M <= chosen.M]
        if not fallback:
            raise EstimationError(
                f"no MaxEnt fit reached tolerance {tol} (best residual {min(e.residual for e in sweep.usable()):.3g})"
            )
        warnings.append(f"fit with {chosen.M} moments did not converge; using {fallback[-1].M}")
        chosen = fallback[-1]

    ic = informativeness(sweep, moments)
    est = LogDetEstimate(
        chosen.logdet, n, c, chosen.M, chosen.entropy, chosen.residual, probe_seconds, maxent_seconds, warnings
    )
    return est, sweep, ic


def result_document(est: LogDetEstimate, sweep: EntropySweep, ic: ICReport, config: dict | None = None) -> dict:
    """JSON-ready result; timing lives under the ``timing`` key only."""
    rows = []
    for e in sweep.usable():
        ice = ic.get(e.M)
        rows.append(
            {
                "M": e.M,
                "entropy": e.entropy,
                "logdet": e.logdet,
                "residual": e.residual,
                "converged": e.converged,
                "ic": None if ice is None else ice.ic,
            }
        )
    doc = {
        "logdet": est.value,
        "n": est.n,
        "c": est.c,
        "M_selected": est.moments_used,
        "entropy": est.entropy,
        "residual": est.residual,
        "warnings": list(est.warnings),
        "sweep": rows,
        "timing": {"probe_s": est.probe_seconds, "maxent_s": est.maxent_seconds},
    }
    if config is not None:
        doc["config"] = config
    return doc


def result_json(est: LogDetEstimate, sweep: EntropySweep, ic: ICReport, config: dict | None = None) -> str:
    return json.dumps(result_document(est, sweep, ic, config), indent=2)
