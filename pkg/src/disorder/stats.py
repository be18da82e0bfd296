"""Statistical kernel: Mann-Whitney U, CLES, t-tests, and edit distance.

Everything here is a pure function over plain sequences.  The U test uses
midrank ties and the tie-corrected normal approximation with continuity
correction; an exact permutation variant is provided for small samples and
doubles as the oracle in the test suite.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import stdtr

ALTERNATIVES = ("two-sided", "greater", "less")


def _ranks(pooled):
    """Midrank assignment: ties share the mean of the ranks they span."""
    order = sorted(range(len(pooled)), key=pooled.__getitem__)
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _tie_term(pooled):
    counts = [len(list(g)) for _, g in itertools.groupby(sorted(pooled))]
    return sum(t ** 3 - t for t in counts)


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a, b, alternative: str = "two-sided") -> tuple[float, float]:
    """Rank-sum U of ``a`` over ``b`` and its normal-approximation p-value.

    U counts pairs (a_i, b_j) with a_i > b_j, ties weighing 0.5.
    ``alternative='greater'`` tests whether values in ``a`` tend to be
    larger than values in ``b``.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("mann_whitney_u needs non-empty samples")
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    n, m = len(a), len(b)
    pooled = list(a) + list(b)
    ranks = _ranks(pooled)
    r_a = sum(ranks[:n])
    u_a = r_a - n * (n + 1) / 2.0
    nm = n * m

    total = n + m
    tie_adjust = _tie_term(pooled) / (total * (total - 1)) if total > 1 else 0.0
    var = nm / 12.0 * (total + 1 - tie_adjust)
    if var <= 0:
        return u_a, 1.0
    sd = math.sqrt(var)

    if alternative == "two-sided":
        big_u = max(u_a, nm - u_a)
        z = (big_u - nm / 2.0 - 0.5) / sd
        p = min(1.0, 2.0 * _norm_sf(z))
    elif alternative == "greater":
        z = (u_a - nm / 2.0 - 0.5) / sd
        p = _norm_sf(z)
    else:
        z = (u_a - nm / 2.0 + 0.5) / sd
        p = 1.0 - _norm_sf(z)
    return u_a, min(1.0, max(0.0, p))


def mann_whitney_u_exact(a, b, alternative: str = "two-sided") -> tuple[float, float]:
    """Exact permutation version, feasible for small pooled sizes (n+m <= 16).

    Enumerates every assignment of the pooled values to the two groups and
    reports the tail probability of the observed U.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("mann_whitney_u_exact needs non-empty samples")
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    n, m = len(a), len(b)
    if n + m > 16:
        raise ValueError("exact mode is limited to n + m <= 16")
    u_obs = _pair_count_u(a, b)
    pooled = list(a) + list(b)
    nm = n * m
    greater = less = count = 0
    for picks in itertools.combinations(range(n + m), n):
        group_a = [pooled[i] for i in picks]
        group_b = [pooled[i] for i in range(n + m) if i not in set(picks)]
        u = _pair_count_u(group_a, group_b)
        count += 1
        if u >= u_obs:
            greater += 1
        if u <= u_obs:
            less += 1
    if alternative == "greater":
        p = greater / count
    elif alternative == "less":
        p = less / count
    else:
        p = min(1.0, 2.0 * min(greater, less) / count)
    return u_obs, p


def _pair_count_u(a, b) -> float:
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def cles(s, b) -> float:
    """Probability that a random element of ``s`` exceeds one of ``b``.

    Ties count one half.  1.0 means complete separation with every value
    in ``s`` strictly above every value in ``b``.
    """
    if len(s) == 0 or len(b) == 0:
        raise ValueError("cles needs non-empty samples")
    return _pair_count_u(s, b) / (len(s) * len(b))


def t_score_single(x: float, profile_mean: float, profile_std: float) -> float:
    """Two-sided tail probability of one observation under a fixed profile.

    With a single observation against a known mean and standard deviation
    this degenerates to the normal two-tailed p of the z-score; the value
    is used for ranking, where the distinction from a t-distribution with
    unknown df is immaterial.
    """
    if profile_std <= 0:
        raise ValueError("profile_std must be positive")
    z = abs(x - profile_mean) / profile_std
    return min(1.0, 2.0 * _norm_sf(z))


def t_test_independent(a, b) -> float:
    """Welch's unequal-variance two-sided p for two independent samples."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("t_test_independent needs at least two values per sample")
    n1, n2 = a.size, b.size
    m1, m2 = a.mean(), b.mean()
    v1 = a.var(ddof=1)
    v2 = b.var(ddof=1)
    se2 = v1 / n1 + v2 / n2
    if se2 == 0:
        return 1.0 if m1 == m2 else 0.0
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 ** 2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    # stdtr is the Student-t CDF; two-sided tail via the negative |t|.
    return min(1.0, 2.0 * float(stdtr(df, -abs(t))))


def levenshtein(a: str, b: str) -> int:
    """Edit distance: single-symbol insertions, deletions, substitutions."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def edit_accuracy(reference: str, decoded: str) -> float:
    """Percent accuracy: 100 * (1 - distance / |reference|), floored at 0."""
    if not reference:
        raise ValueError("reference must be non-empty")
    dist = levenshtein(reference, decoded)
    return max(0.0, 100.0 * (1.0 - dist / len(reference)))
