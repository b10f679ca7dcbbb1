"""Self-contained statistical kernels used by the cohort analyses.

Only the standard library is used.  The Mann-Whitney exact distribution is
built by dynamic programming over rank configurations; the Student-t tail
needed for correlation p-values comes from a continued-fraction evaluation
of the regularized incomplete beta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence


class DegenerateSampleError(ValueError):
    """A sample without variation where variation is required."""


class MwuMethod(Enum):
    EXACT = "EXACT"
    NORMAL_APPROX = "NORMAL_APPROX"


@dataclass(frozen=True)
class TestResult:
    u_statistic: float
    p_two_sided: float
    n1: int
    n2: int
    method: MwuMethod
    mean_diff: float
    cohens_d: float
    degenerate_d: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.u_statistic <= self.n1 * self.n2:
            raise ValueError("u_statistic out of [0, n1*n2]")
        if not 0.0 <= self.p_two_sided <= 1.0:
            raise ValueError("p_two_sided out of [0, 1]")

    def to_record(self) -> dict:
        return {
            "u_statistic": self.u_statistic,
            "p_two_sided": self.p_two_sided,
            "n1": self.n1,
            "n2": self.n2,
            "method": self.method.value,
            "mean_diff": self.mean_diff,
            "cohens_d": self.cohens_d,
            "degenerate_d": self.degenerate_d,
        }


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_two_sided: float
    n: int

    def to_record(self) -> dict:
        return {"r": self.r, "p_two_sided": self.p_two_sided, "n": self.n}


def _midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties sharing their average rank."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _tie_sizes(values: Sequence[float]) -> list[int]:
    sizes: dict[float, int] = {}
    for v in values:
        sizes[v] = sizes.get(v, 0) + 1
    return [c for c in sizes.values() if c > 1]


@lru_cache(maxsize=None)
def _u_count(m: int, n: int, u: int) -> int:
    """Number of rank configurations of m-vs-n samples with statistic u."""
    if u < 0:
        return 0
    if m == 0 or n == 0:
        return 1 if u == 0 else 0
    return _u_count(m - 1, n, u - n) + _u_count(m, n - 1, u)


def exact_u_distribution(n1: int, n2: int) -> list[int]:
    """Counts of arrangements for each U in 0..n1*n2 (tie-free samples)."""
    return [_u_count(n1, n2, u) for u in range(n1 * n2 + 1)]


def _two_sided_from_tails(tail_le: float, tail_ge: float) -> float:
    return 2.0 * min(tail_le, tail_ge, 0.5)


def _exact_p(n1: int, n2: int, u: float) -> float:
    counts = exact_u_distribution(n1, n2)
    total = math.comb(n1 + n2, n1)
    le = sum(c for v, c in enumerate(counts) if v <= u)
    ge = sum(c for v, c in enumerate(counts) if v >= u)
    return _two_sided_from_tails(le / total, ge / total)


def _enumerated_p(pooled_ranks: Sequence[float], n1: int, u_obs: float) -> float:
    """Exact p by enumerating label assignments; handles ties via midranks."""
    n = len(pooled_ranks)
    total = math.comb(n, n1)
    if total > 500_000:
        raise ValueError(
            f"exact enumeration over {total} arrangements is infeasible; "
            "use mode='approx'"
        )
    base = n1 * (n1 + 1) / 2
    le = ge = 0
    for chosen in combinations(range(n), n1):
        u = sum(pooled_ranks[i] for i in chosen) - base
        if u <= u_obs + 1e-12:
            le += 1
        if u >= u_obs - 1e-12:
            ge += 1
    return _two_sided_from_tails(le / total, ge / total)


def normal_sf(z: float) -> float:
    return math.erfc(z / math.sqrt(2.0)) / 2.0


def _approx_p(u: float, n1: int, n2: int, tie_groups: Iterable[int]) -> float:
    """Tie-corrected normal approximation with continuity correction 0.5."""
    total = n1 + n2
    mu = n1 * n2 / 2.0
    correction = sum(t**3 - t for t in tie_groups)
    variance = n1 * n2 / 12.0 * (total + 1 - correction / (total * (total - 1)))
    if variance <= 0.0:
        return 1.0
    z = (abs(u - mu) - 0.5) / math.sqrt(variance)
    return _two_sided_from_tails(normal_sf(z), 1.0)


def _sample_sd(values: Sequence[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))


EXACT_PRODUCT_LIMIT = 400


def mann_whitney_u(
    a: Sequence[float], b: Sequence[float], mode: str = "auto"
) -> TestResult:
    """Two-sided Mann-Whitney U test; u_statistic counts pairs a > b.

    mode 'auto' uses the exact distribution when the pooled sample is
    tie-free and n1*n2 <= 400, otherwise the tie-corrected normal
    approximation.  'exact' forces exact (enumeration when ties are present),
    'approx' forces the approximation.
    """
    if mode not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown mode: {mode!r}")
    n1, n2 = len(a), len(b)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be non-empty")
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    tie_groups = _tie_sizes(pooled)
    r1 = sum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2.0

    tie_free = not tie_groups
    if mode == "auto":
        use_exact = tie_free and n1 * n2 <= EXACT_PRODUCT_LIMIT
    else:
        use_exact = mode == "exact"

    if use_exact:
        method = MwuMethod.EXACT
        if tie_free:
            p = _exact_p(n1, n2, u)
        else:
            p = _enumerated_p(ranks, n1, u)
    else:
        method = MwuMethod.NORMAL_APPROX
        p = _approx_p(u, n1, n2, tie_groups)

    mean_a = sum(a) / n1
    mean_b = sum(b) / n2
    mean_diff = mean_a - mean_b
    sd_a, sd_b = _sample_sd(list(a)), _sample_sd(list(b))
    df = n1 + n2 - 2
    pooled_var = ((n1 - 1) * sd_a**2 + (n2 - 1) * sd_b**2) / df if df > 0 else 0.0
    degenerate = pooled_var <= 0.0
    cohens_d = 0.0 if degenerate else mean_diff / math.sqrt(pooled_var)

    return TestResult(
        u_statistic=u,
        p_two_sided=min(p, 1.0),
        n1=n1,
        n2=n2,
        method=method,
        mean_diff=mean_diff,
        cohens_d=cohens_d,
        degenerate_d=degenerate,
    )


# --- Student-t tail via the regularized incomplete beta function ---------

_BETA_EPS = 1e-15
_BETA_TINY = 1e-300
_BETA_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz scheme)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: int) -> float:
    """P(T >= t) for Student's t with df degrees of freedom, t >= 0."""
    if t < 0:
        raise ValueError("t_sf expects t >= 0")
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x) / 2.0


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Pearson correlation with a two-sided p from the exact t transform."""
    n = len(x)
    if n != len(y):
        raise ValueError("samples must have equal length")
    if n < 3:
        raise ValueError("need at least 3 paired observations")
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    ss_x = sum(v * v for v in dx)
    ss_y = sum(v * v for v in dy)
    if ss_x <= 0.0 or ss_y <= 0.0:
        raise DegenerateSampleError("zero variance in at least one sample")
    r = sum(a * b for a, b in zip(dx, dy)) / math.sqrt(ss_x * ss_y)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return CorrelationResult(r=r, p_two_sided=0.0, n=n)
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * t_sf(t, n - 2)
    return CorrelationResult(r=r, p_two_sided=min(p, 1.0), n=n)


# --- Grouping helpers ------------------------------------------------------

QUARTILE_LABELS = ("Q1", "Q2", "Q3", "Q4")


def quartile_split(metric: dict[str, float]) -> dict[str, str]:
    """Assign Q1..Q4 by nearest-rank thresholds; threshold ties go low.

    Thresholds are the values at ranks ceil(n/4), ceil(n/2), ceil(3n/4) of
    the sorted metric (1-indexed).
    """
    n = len(metric)
    if n < 4:
        raise ValueError(f"need at least 4 keyed values, got {n}")
    ordered = sorted(metric.values())
    q1 = ordered[math.ceil(0.25 * n) - 1]
    q2 = ordered[math.ceil(0.50 * n) - 1]
    q3 = ordered[math.ceil(0.75 * n) - 1]
    out: dict[str, str] = {}
    for key, value in metric.items():
        if value <= q1:
            out[key] = "Q1"
        elif value <= q2:
            out[key] = "Q2"
        elif value <= q3:
            out[key] = "Q3"
        else:
            out[key] = "Q4"
    return out


def hour_histogram(moments: Iterable, normalize: bool = False) -> list[float]:
    """24 bins keyed by local hour; normalized bins sum to 1 (empty: zeros)."""
    bins = [0.0] * 24
    total = 0
    for moment in moments:
        bins[moment.hour] += 1
        total += 1
    if normalize and total:
        bins = [b / total for b in bins]
    return bins


LOG2_BIN_LABELS = (
    "1", "2-3", "4-7", "8-15", "16-31", "32-63", "64-127", "128-255", "256+",
)


def log2_bin(count: int) -> str:
    """Label of the power-of-two bucket holding count (>= 256 saturates)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count >= 256:
        return LOG2_BIN_LABELS[-1]
    return LOG2_BIN_LABELS[count.bit_length() - 1]
