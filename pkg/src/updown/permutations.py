"""Permutations as chain states: patterns, inflation/deletion, separability.

A permutation of size n is kept in one-line notation as a tuple of the
integers 1..n.  The chain dynamics are built from two primitives:

* ``inflate``: replace the point (i, sigma(i)) by two points that are
  consecutive in both position and value.  The new points occupy positions
  i, i+1 and values sigma(i), sigma(i)+1 after every larger position and
  value is shifted up by one; the direction decides which of the two new
  points gets the lower value.
* ``delete_point``: remove one point and relabel the rest.

An up-step inflates a uniform point, increasing with probability p; a
down-step deletes a uniform point.  Pattern counting is deliberately brute
force over index subsets (exact, O(C(n, k)) per query), which is the point
at the sizes treated exactly here; keep patterns at size <= 6.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

from .rng import SplitMix64

Permutation = tuple[int, ...]

#: Every permutation of each size, in lexicographic (enumeration) order.
_IDENTITY: Permutation = (1,)


def parse_permutation(text: str) -> Permutation:
    """Parse one-line notation: digits for n <= 9, comma-separated beyond."""
    text = text.strip()
    if "," in text:
        values = tuple(int(part) for part in text.split(","))
    else:
        if not text.isdigit():
            raise ValueError(f"not a permutation: {text!r}")
        values = tuple(int(ch) for ch in text)
    if sorted(values) != list(range(1, len(values) + 1)):
        raise ValueError(f"not a permutation of 1..{len(values)}: {text!r}")
    return values


def format_permutation(sigma: Sequence[int]) -> str:
    """One-line digit string for n <= 9, comma-separated otherwise."""
    if len(sigma) <= 9:
        return "".join(str(v) for v in sigma)
    return ",".join(str(v) for v in sigma)


def all_permutations(n: int) -> list[Permutation]:
    return [tuple(p) for p in itertools.permutations(range(1, n + 1))]


def pattern_of(sigma: Sequence[int], indices: Iterable[int]) -> Permutation:
    """Pattern induced by the (0-based, increasing) ``indices`` of sigma."""
    chosen = [sigma[i] for i in indices]
    ranks = sorted(range(len(chosen)), key=chosen.__getitem__)
    out = [0] * len(chosen)
    for rank, pos in enumerate(ranks, start=1):
        out[pos] = rank
    return tuple(out)


def occ(pi: Sequence[int], sigma: Sequence[int]) -> int:
    """Number of index subsets of sigma inducing the pattern pi.

    Returns 0 when pi is larger than sigma.  Brute force over all
    C(|sigma|, |pi|) subsets.
    """
    k, n = len(pi), len(sigma)
    if k > n:
        return 0
    target = tuple(pi)
    return sum(
        1
        for subset in itertools.combinations(range(n), k)
        if pattern_of(sigma, subset) == target
    )


def pattern_density(pi: Sequence[int], sigma: Sequence[int]) -> Fraction:
    """occ(pi, sigma) / C(|sigma|, |pi|)."""
    return Fraction(occ(pi, sigma), comb(len(sigma), len(pi)))


def inflate(sigma: Sequence[int], i: int, increasing: bool) -> Permutation:
    """Replace point i (1-based) by two value/position-consecutive points."""
    n = len(sigma)
    if not 1 <= i <= n:
        raise ValueError(f"position {i} out of range 1..{n}")
    vi = sigma[i - 1]
    out = [v + 1 if v > vi else v for v in sigma]
    out[i - 1 : i] = (vi, vi + 1) if increasing else (vi + 1, vi)
    return tuple(out)


def delete_point(sigma: Sequence[int], j: int) -> Permutation:
    """Remove point j (1-based) and relabel the remaining values."""
    n = len(sigma)
    if n < 2:
        raise ValueError("cannot delete from a permutation of size 1")
    if not 1 <= j <= n:
        raise ValueError(f"position {j} out of range 1..{n}")
    vj = sigma[j - 1]
    return tuple(v - 1 if v > vj else v for k, v in enumerate(sigma, 1) if k != j)


def up_step_sample(sigma: Sequence[int], p, rng: SplitMix64) -> Permutation:
    """One draw from the up kernel: uniform position, direction coin."""
    i = rng.below(len(sigma)) + 1
    return inflate(sigma, i, rng.coin(p))


def down_step_sample(sigma: Sequence[int], rng: SplitMix64) -> Permutation:
    """One draw from the down kernel: delete a uniform point."""
    return delete_point(sigma, rng.below(len(sigma)) + 1)


def _adjacencies(sigma: Sequence[int]) -> list[int]:
    # positions j (0-based) with |sigma[j+1] - sigma[j]| == 1
    return [
        j for j in range(len(sigma) - 1) if abs(sigma[j + 1] - sigma[j]) == 1
    ]


def nonseparable_core(
    sigma: Sequence[int], pick: Callable[[list[int]], int] | None = None
) -> Permutation:
    """Fixed point of repeatedly shrinking adjacencies to single points.

    An adjacency is a pair of points consecutive in both position and value;
    shrinking replaces the pair by one point.  The default shrinks the
    leftmost adjacency first; ``pick`` may select any index from the offered
    list instead (the result is order-independent, which the test suite
    certifies rather than assumes).  A permutation is separable exactly when
    its core is the singleton.
    """
    current = tuple(sigma)
    while len(current) > 1:
        adj = _adjacencies(current)
        if not adj:
            break
        j = adj[0] if pick is None else adj[pick(adj)]
        current = delete_point(current, j + 2)
    return current


def is_separable(sigma: Sequence[int]) -> bool:
    return nonseparable_core(sigma) == _IDENTITY


def recursive_separable_sample(n: int, p, rng: SplitMix64) -> Permutation:
    """Random recursive separable permutation: n-1 up-steps from size 1."""
    sigma: Permutation = _IDENTITY
    for _ in range(n - 1):
        sigma = up_step_sample(sigma, p, rng)
    return sigma


def replace_point_with_run(
    tau: Sequence[int], i: int, m: int, increasing: bool
) -> Permutation:
    """Replace point i (1-based) of tau by a monotone run of length m.

    The run occupies positions i..i+m-1 and values tau(i)..tau(i)+m-1 after
    shifting; orientation follows ``increasing``.  m = 1 returns tau itself.
    """
    vi = tau[i - 1]
    out = [v + m - 1 if v > vi else v for v in tau]
    run = range(vi, vi + m) if increasing else range(vi + m - 1, vi - 1, -1)
    out[i - 1 : i] = run
    return tuple(out)


def _runs(pi: Sequence[int], m: int, increasing: bool) -> list[int]:
    # 0-based start positions of monotone runs of length m (consecutive
    # positions with consecutive values in the given orientation)
    step = 1 if increasing else -1
    return [
        j
        for j in range(len(pi) - m + 1)
        if all(pi[j + t + 1] - pi[j + t] == step for t in range(m - 1))
    ]


def _shrink_run(pi: Sequence[int], j: int, m: int, increasing: bool) -> Permutation:
    # collapse the run starting at 0-based j to a single point
    low = pi[j] if increasing else pi[j + m - 1]
    kept = [v for t, v in enumerate(pi) if not j <= t < j + m]
    return tuple(v - m + 1 if v > low else v for v in kept[:j] + [low] + kept[j:])


def run_insertion_sets(
    pi: Sequence[int], m: int
) -> tuple[tuple[tuple[Permutation, int], ...], tuple[tuple[Permutation, int], ...]]:
    """Pairs (tau, i) whose point i, replaced by a length-m run, gives pi.

    Returns the increasing-run list and the decreasing-run list.  Each run of
    length m in pi corresponds to exactly one pair, found by collapsing that
    run; ``replace_point_with_run`` inverts the collapse, which the tests use
    as an independent reconstruction check.
    """
    if not 1 <= m <= len(pi):
        raise ValueError(f"run length {m} out of range 1..{len(pi)}")
    increasing = tuple(
        (_shrink_run(pi, j, m, True), j + 1) for j in _runs(pi, m, True)
    )
    decreasing = tuple(
        (_shrink_run(pi, j, m, False), j + 1) for j in _runs(pi, m, False)
    )
    return increasing, decreasing


def inversion_graph(sigma: Sequence[int]):
    """Unlabeled graph with an edge {i, j} for each inversion of sigma."""
    from . import graphs

    n = len(sigma)
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if sigma[i] > sigma[j]
    ]
    return graphs.from_edges(n, edges)


def chain(p, max_level: int = 6):
    """ChainSpec for the point-duplication chain on permutations."""
    from . import kernels

    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    def states(n: int) -> tuple[str, ...]:
        return tuple(sorted(format_permutation(s) for s in all_permutations(n)))

    def up_row(state: str) -> dict[str, Fraction]:
        sigma = parse_permutation(state)
        n = len(sigma)
        row: dict[str, Fraction] = {}
        for i in range(1, n + 1):
            for increasing, weight in ((True, p), (False, 1 - p)):
                target = format_permutation(inflate(sigma, i, increasing))
                row[target] = row.get(target, Fraction(0)) + weight / n
        return {s: w for s, w in row.items() if w}

    def down_row(state: str) -> dict[str, Fraction]:
        sigma = parse_permutation(state)
        n = len(sigma)
        row: dict[str, Fraction] = {}
        for j in range(1, n + 1):
            target = format_permutation(delete_point(sigma, j))
            row[target] = row.get(target, Fraction(0)) + Fraction(1, n)
        return row

    def sample_up(state: str, rng: SplitMix64) -> str:
        return format_permutation(up_step_sample(parse_permutation(state), p, rng))

    def sample_down(state: str, rng: SplitMix64) -> str:
        return format_permutation(down_step_sample(parse_permutation(state), rng))

    return kernels.ChainSpec(
        name="perm",
        p=p,
        max_exact_level=max_level,
        states=states,
        up_row=up_row,
        down_row=down_row,
        sample_up=sample_up,
        sample_down=sample_down,
    )
