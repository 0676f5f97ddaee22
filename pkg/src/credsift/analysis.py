"""Embedding-space statistics: distances, class separation, Welch's t-test, PCA.

The two-sided p-value comes from the regularized incomplete beta function,
evaluated with the modified Lentz continued fraction, so the package carries
no statistics dependency at runtime.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import SplitMix64

P_UNDERFLOW_FLOOR = 1e-300
DEFAULT_PAIR_BUDGET = 2_000_000


def euclidean(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def _betacf(a: float, b: float, x: float, *, max_iter: int = 300,
            eps: float = 3e-16) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h  # converged to float precision in practice well before max_iter


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued fraction, switching branches for stability."""
    if a <= 0 or b <= 0:
        raise DomainError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t, clamped to [0, 1]."""
    if df <= 0:
        raise DomainError("degrees of freedom must be positive")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    p = regularized_incomplete_beta(df / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p: float


def welch_t_test(sample_a: list[float], sample_b: list[float]) -> WelchResult:
    """Welch's unequal-variance t-test with Welch-Satterthwaite df."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise DomainError("each sample needs at least 2 values")
    var_a = float(np.var(a, ddof=1))
    var_b = float(np.var(b, ddof=1))
    if var_a == 0.0 and var_b == 0.0:
        raise DomainError("degenerate samples: both variances are zero")
    sa = var_a / a.size
    sb = var_b / b.size
    se = math.sqrt(sa + sb)
    t = (float(np.mean(a)) - float(np.mean(b))) / se
    df = (sa + sb) ** 2 / (
        (sa * sa) / (a.size - 1) + (sb * sb) / (b.size - 1))
    return WelchResult(t=t, df=df, p=student_t_sf(t, df))


@dataclass(frozen=True)
class SeparationReport:
    """Intra- vs inter-class distance statistics over embedding pairs."""

    mean_intra: float
    mean_inter: float
    t_statistic: float
    degrees_freedom: float
    p_value: float
    n_intra: int
    n_inter: int
    pairs_sampled: bool = False

    def to_json_dict(self) -> dict:
        return {
            "mean_intra": self.mean_intra,
            "mean_inter": self.mean_inter,
            "t_statistic": self.t_statistic,
            "degrees_freedom": self.degrees_freedom,
            "p_value": self.p_value,
            "p_underflow": self.p_value < P_UNDERFLOW_FLOOR,
            "n_intra": self.n_intra,
            "n_inter": self.n_inter,
            "pairs_sampled": self.pairs_sampled,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _sample_pairs(n: int, budget: int, seed: int) -> list[tuple[int, int]]:
    rng = SplitMix64(seed)
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < budget:
        i = rng.below(n)
        j = rng.below(n)
        if i == j:
            continue
        chosen.add((i, j) if i < j else (j, i))
    return sorted(chosen)


def separation(embeddings: list[tuple[np.ndarray, object]], *,
               pair_budget: int = DEFAULT_PAIR_BUDGET,
               seed: int = 0) -> SeparationReport:
    """Means and Welch's t-test of same-class vs cross-class pair distances.

    All unordered pairs are enumerated up to `pair_budget`; beyond that a
    seeded uniform subsample of pairs is used and flagged in the report.
    """
    n = len(embeddings)
    if n < 2:
        raise DomainError("separation needs at least 2 embeddings")
    X = np.stack([np.asarray(vec, dtype=np.float64) for vec, _ in embeddings])
    cats = [cat for _, cat in embeddings]

    total_pairs = n * (n - 1) // 2
    sampled = total_pairs > pair_budget
    if sampled:
        pairs = _sample_pairs(n, pair_budget, seed)
        left = np.fromiter((i for i, _ in pairs), dtype=np.int64)
        right = np.fromiter((j for _, j in pairs), dtype=np.int64)
        dists = np.sqrt(np.sum((X[left] - X[right]) ** 2, axis=1))
        same = np.fromiter((cats[i] == cats[j] for i, j in pairs),
                           dtype=bool, count=len(pairs))
    else:
        sq = np.sum(X * X, axis=1)
        gram = X @ X.T
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
        iu = np.triu_indices(n, k=1)
        dists = np.sqrt(d2[iu])
        uniq: dict = {}
        cat_ids = np.asarray([uniq.setdefault(c, len(uniq)) for c in cats])
        same = cat_ids[iu[0]] == cat_ids[iu[1]]

    intra = dists[same]
    inter = dists[~same]
    if intra.size == 0 or inter.size == 0:
        raise DomainError("separation needs at least one intra and one inter pair")
    result = welch_t_test(intra.tolist(), inter.tolist())
    return SeparationReport(
        mean_intra=float(np.mean(intra)),
        mean_inter=float(np.mean(inter)),
        t_statistic=result.t,
        degrees_freedom=result.df,
        p_value=result.p,
        n_intra=int(intra.size),
        n_inter=int(inter.size),
        pairs_sampled=sampled,
    )


def _power_component(cov: np.ndarray, rng: np.random.Generator, *,
                     iterations: int, tol: float) -> tuple[np.ndarray, float]:
    dim = cov.shape[0]
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            return np.zeros(dim), 0.0
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    # Fix the sign so the projection is reproducible: largest-|component| > 0.
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return v, float(v @ cov @ v)


def project_2d(embeddings: list[np.ndarray], *, iterations: int = 1000,
               tol: float = 1e-12, seed: int = 0) -> list[tuple[float, float]]:
    """Top-2 principal components via seeded power iteration with deflation.

    Input order is preserved. If the data carries variance in fewer than two
    directions, the missing coordinates are zero.
    """
    if len(embeddings) < 2:
        raise DomainError("projection needs at least 2 vectors")
    X = np.stack([np.asarray(v, dtype=np.float64) for v in embeddings])
    centered = X - np.mean(X, axis=0)
    cov = centered.T @ centered / (X.shape[0] - 1)
    if float(np.trace(cov)) <= 0.0:
        raise DomainError("projection undefined for zero-variance data")
    rng = np.random.default_rng(seed)
    v1, lambda1 = _power_component(cov, rng, iterations=iterations, tol=tol)
    deflated = cov - lambda1 * np.outer(v1, v1)
    v2, _ = _power_component(deflated, rng, iterations=iterations, tol=tol)
    coords = np.column_stack((centered @ v1, centered @ v2))
    return [(float(x), float(y)) for x, y in coords]
