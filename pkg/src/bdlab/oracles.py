"""Closed-form laws and brute-force references for the simulators."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ENUMERATION_BUDGET = 10 ** 6


def max_mean_gap(xs: Sequence) -> tuple:
    """Both sides of ``max(x) - mean(x) >= sum_{i<j} |x_i - x_j| / (2n(n-1))``.

    Integer or Fraction input gives exact Fraction results; floats give
    floats.
    """
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two numbers")
    exact = all(isinstance(v, (int, Fraction)) for v in xs)
    total = sum(xs)
    pair = sum(abs(a - b) for a, b in itertools.combinations(xs, 2))
    if exact:
        return max(xs) - Fraction(total, n), Fraction(pair, 2 * n * (n - 1))
    return max(xs) - total / n, pair / (2 * n * (n - 1))


def gamma_tail_bound(n: int, a: float) -> float:
    """``exp((1 - a + log a) n)``, an upper bound on ``P(Gamma(n, 1) <= a n)``."""
    if not 0 < a < 1:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.exp((1 - a + math.log(a)) * n)


def gamma_cdf_integer_shape(n: int, x: float) -> float:
    """``P(Gamma(n, 1) <= x) = P(Poisson(x) >= n)`` for integer ``n >= 1``."""
    if x <= 0:
        return 0.0
    if x < n:
        # upper Poisson tail, terms decrease from k = n on; no cancellation
        log_term = -x + n * math.log(x) - math.lgamma(n + 1)
        acc, k = 0.0, n
        while True:
            t = math.exp(log_term)
            acc += t
            if t < 1e-18 * acc or t == 0.0:
                return min(acc, 1.0)
            k += 1
            log_term += math.log(x) - math.log(k)
    term = -x
    lower = math.exp(term)
    for k in range(1, n):
        term += math.log(x) - math.log(k)
        lower += math.exp(term)
    return max(0.0, 1.0 - lower)


def geometric_count_pmf(B: int, a: float, j: int) -> float:
    """``P(K = j) = (Ba)^j / (Ba+1)^(j+1)``: Poisson(B t) events at t ~ Exp(mean a)."""
    if B < 1 or a <= 0 or j < 0:
        raise ValueError("need B >= 1, a > 0, j >= 0")
    q = B * a / (B * a + 1)
    return (1 - q) * q ** j


def geometric_count_pmf_exact(B: int, a: Fraction | int, j: int) -> Fraction:
    ba = Fraction(B) * Fraction(a)
    return ba ** j / (ba + 1) ** (j + 1)


@dataclass(frozen=True)
class ExactLaw:
    """Outcome -> exact probability, outcomes are height tuples in canonical order."""

    probs: dict

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def __getitem__(self, outcome) -> Fraction:
        return self.probs.get(tuple(outcome), Fraction(0))

    def support(self) -> list:
        return sorted(self.probs)


class BudgetExceededError(ValueError):
    pass


def _box(d: int, N: int):
    sites = list(itertools.product(range(-N, N + 1), repeat=d))
    index = {x: i for i, x in enumerate(sites)}
    nbrs = []
    for x in sites:
        row = []
        for i in range(d):
            for s in (1, -1):
                y = x[:i] + (x[i] + s,) + x[i + 1:]
                row.append(index.get(y))
        nbrs.append(row)
    return sites, nbrs


def brute_force_chain_law(d: int, N: int, steps: int,
                          budget: int = ENUMERATION_BUDGET) -> ExactLaw:
    """Exact law of the discrete chain after ``steps`` updates from zero.

    Every site sequence is enumerated; each has probability
    ``|B_N|^-steps``.  Sites outside the box read as height 0.
    """
    sites, nbrs = _box(d, N)
    B = len(sites)
    if B ** steps > budget:
        raise BudgetExceededError(f"{B}^{steps} sequences exceed the budget of {budget}")
    counts: Counter = Counter()
    for seq in itertools.product(range(B), repeat=steps):
        h = [0] * B
        for s in seq:
            m = h[s] + 1
            for j in nbrs[s]:
                if j is not None and h[j] > m:
                    m = h[j]
            h[s] = m
        counts[tuple(h)] += 1
    denom = B ** steps
    return ExactLaw({k: Fraction(v, denom) for k, v in counts.items()})
