"""Stochastic estimates of normalized spectral moments mu_m = Tr(B^m) / n.

Each probe is a vector of independent standard normal entries (unit variance
per entry, no length normalization), so E[z^T B^m z] = Tr(B^m). One Krylov
chain w_k = B w_{k-1} per probe serves every moment order.

Random streams come from numpy's PCG64 bit generator. Probe ``s`` draws from
the ``s``-th child of ``SeedSequence(seed)``, so results do not depend on how
probes are batched.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .matio import CsrMatrix, matvec

__all__ = ["MomentSet", "ProbeConfig", "estimate_moments", "probe_vectors", "sample_adequacy_ratio"]

logger = logging.getLogger(__name__)

MAX_MOMENT_LIMIT = 20


@dataclass(frozen=True)
class ProbeConfig:
    num_samples: int = 30
    max_moment: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if not 1 <= self.max_moment <= MAX_MOMENT_LIMIT:
            raise ValueError(f"max_moment must be in [1, {MAX_MOMENT_LIMIT}], got {self.max_moment}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Per-order moment estimates.

    ``means[m-1]`` and ``std[m-1]`` refer to moment order ``m``;
    ``per_sample`` has shape (d, M). ``std`` is the sample standard deviation
    of a single probe (ddof=1), stored as 0 when d = 1.
    """

    n: int
    means: np.ndarray
    std: np.ndarray
    per_sample: np.ndarray
    seed: int = 0
    out_of_range: bool = False

    @property
    def num_samples(self) -> int:
        return self.per_sample.shape[0]

    @property
    def max_moment(self) -> int:
        return self.per_sample.shape[1]

    @classmethod
    def from_exact(cls, n: int, moments) -> "MomentSet":
        """Wrap noise-free moments (order 1..M) with zero spread."""
        mu = np.asarray(moments, dtype=float)
        return cls(n, mu.copy(), np.zeros_like(mu), mu[None, :].copy())

    def with_std(self, std) -> "MomentSet":
        """Copy with the per-order spread replaced (scalar or per-order array)."""
        std = np.broadcast_to(np.asarray(std, dtype=float), self.means.shape).copy()
        return MomentSet(self.n, self.means, std, self.per_sample, self.seed, self.out_of_range)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.num_samples,
            "M": self.max_moment,
            "seed": self.seed,
            "means": self.means.tolist(),
            "std": self.std.tolist(),
            "per_sample": self.per_sample.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "MomentSet":
        per_sample = np.asarray(doc["per_sample"], dtype=float).reshape(doc["d"], doc["M"])
        means = np.asarray(doc["means"], dtype=float)
        return cls(doc["n"], means, np.asarray(doc["std"], dtype=float), per_sample, doc.get("seed", 0),
                   bool(np.any((means <= 0) | (means > 1))))

    @classmethod
    def from_json(cls, text: str) -> "MomentSet":
        return cls.from_dict(json.loads(text))


def probe_vectors(n: int, num_samples: int, seed: int) -> np.ndarray:
    """(n, d) block whose column s is the standard normal probe of sample s."""
    children = np.random.SeedSequence(seed).spawn(num_samples)
    z = np.empty((n, num_samples))
    for s, child in enumerate(children):
        z[:, s] = np.random.Generator(np.random.PCG64(child)).standard_normal(n)
    return z


def estimate_moments(b: CsrMatrix, cfg: ProbeConfig) -> MomentSet:
    """Hutchinson estimates of (1/n) Tr(B^m) for m = 1..M.

    ``b`` should already be normalized so its spectrum lies in (0, 1]. Means
    outside that range are logged and flagged on the result, never raised.
    """
    n = b.n
    z = probe_vectors(n, cfg.num_samples, cfg.seed)
    raw = np.empty((cfg.num_samples, cfg.max_moment))
    w = z
    for m in range(cfg.max_moment):
        w = matvec(b, w)
        raw[:, m] = np.einsum("ij,ij->j", z, w) / n
    means = raw.mean(axis=0)
    std = raw.std(axis=0, ddof=1) if cfg.num_samples > 1 else np.zeros(cfg.max_moment)
    bad = (means <= 0) | (means > 1)
    if np.any(bad):
        logger.warning(
            "moment estimates outside (0, 1] at orders %s; check the normalization",
            (np.flatnonzero(bad) + 1).tolist(),
        )
    return MomentSet(n, means, std, raw, cfg.seed, bool(np.any(bad)))


def sample_adequacy_ratio(a: CsrMatrix) -> float:
    """sqrt(2 Tr(A^2)) / Tr(A): relative spread of a single Gaussian probe.

    Small values mean one probe already pins the trace down well.
    """
    tr = a.trace()
    if tr == 0:
        raise ZeroDivisionError("matrix has zero trace")
    return math.sqrt(2.0 * a.trace_of_square()) / tr
