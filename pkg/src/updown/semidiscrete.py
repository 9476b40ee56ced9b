"""Epsilon-inflation of permutation-limit measures and its generator.

The inflation of a measure mu at (x0, y0) pushes mu through the pair of
gap maps phi(x) = (1-eps)x + eps*1[x > x0] (and likewise in y), keeps
weight 1-eps on the image, and inserts the mass-eps diagonal of the
vacated eps-square, rising or falling with the chosen direction.  The
family {point masses + slope +-1 segments} is closed under this
transform, so repeated inflations stay exactly representable with
rational data.

For a pattern pi of size k, the expected pattern density after one
inflation is a degree-k polynomial in eps whose m-th order term is driven
by the patterns obtained from pi by collapsing a monotone run of length m
(the run-insertion sets).  The constant and linear terms of
E[d_pi(inflated)] - d_pi cancel identically, and twice the quadratic
coefficient reproduces the jump-process generator

    A d_pi = -k(k-1) (d_pi - sum_{|tau| = k-1} U(tau, pi) d_tau),

which is checked here against the exact up-kernel route.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Mapping, Sequence

from . import permutations
from .kernels import fraction_str, parse_fraction
from .rng import SplitMix64

INCREASING = "increasing"
DECREASING = "decreasing"


def _check_unit(name: str, value: Fraction) -> Fraction:
    if not 0 <= value <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def phi_map(s, eps, x):
    """The gap map (1-eps)x + eps*1[x > s]; increasing, piecewise affine."""
    s, eps, x = Fraction(s), Fraction(eps), Fraction(x)
    _check_unit("s", s)
    _check_unit("x", x)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return (1 - eps) * x + (eps if x > s else 0)


@dataclass(frozen=True)
class PointMass:
    x: Fraction
    y: Fraction
    weight: Fraction


@dataclass(frozen=True)
class DiagonalSegment:
    """Uniform measure on a slope +-1 segment.

    (x, y) is the left endpoint; the segment runs to
    (x + length, y + orientation * length).
    """

    x: Fraction
    y: Fraction
    length: Fraction
    orientation: int
    weight: Fraction


@dataclass(frozen=True)
class PermutonMeasure:
    """Finite mixture of point masses and diagonal segments on [0,1]^2.

    The permuton flag records that both coordinate marginals are uniform;
    inflation preserves it (the gap map spreads a uniform marginal onto
    [0, 1-eps] plus a uniform filling of the vacated gap).
    """

    pieces: tuple
    permuton: bool = False

    def total_weight(self) -> Fraction:
        return sum((piece.weight for piece in self.pieces), start=Fraction(0))

    def sample(self, rng: SplitMix64) -> tuple[float, float]:
        """One point of the measure; weights are folded to floats."""
        u = rng.random() * float(self.total_weight())
        acc = 0.0
        piece = self.pieces[-1]
        for candidate in self.pieces:
            acc += float(candidate.weight)
            if u < acc:
                piece = candidate
                break
        if isinstance(piece, PointMass):
            return float(piece.x), float(piece.y)
        tau = rng.random() * float(piece.length)
        return float(piece.x) + tau, float(piece.y) + piece.orientation * tau

    def marginal_moments(self) -> dict[str, Fraction]:
        """Exact first and second moments of both coordinate marginals."""
        out = {k: Fraction(0) for k in ("mean_x", "second_x", "mean_y", "second_y")}

        def interval(a: Fraction, length: Fraction) -> tuple[Fraction, Fraction]:
            return a + length / 2, a * a + a * length + length * length / 3

        for piece in self.pieces:
            w = piece.weight
            if isinstance(piece, PointMass):
                mx, sx = piece.x, piece.x * piece.x
                my, sy = piece.y, piece.y * piece.y
            else:
                mx, sx = interval(piece.x, piece.length)
                y_low = piece.y if piece.orientation == 1 else piece.y - piece.length
                my, sy = interval(y_low, piece.length)
            out["mean_x"] += w * mx
            out["second_x"] += w * sx
            out["mean_y"] += w * my
            out["second_y"] += w * sy
        return out

    def to_json(self) -> str:
        items = []
        for piece in self.pieces:
            if isinstance(piece, PointMass):
                items.append(
                    {
                        "type": "point",
                        "weight": fraction_str(piece.weight),
                        "coords": [fraction_str(piece.x), fraction_str(piece.y)],
                    }
                )
            else:
                items.append(
                    {
                        "type": "segment",
                        "weight": fraction_str(piece.weight),
                        "coords": [fraction_str(piece.x), fraction_str(piece.y)],
                        "length": fraction_str(piece.length),
                        "orientation": piece.orientation,
                    }
                )
        return json.dumps(items)

    @classmethod
    def from_json(cls, text: str, permuton: bool = False) -> "PermutonMeasure":
        pieces = []
        for item in json.loads(text):
            w = parse_fraction(item["weight"])
            x, y = (parse_fraction(c) for c in item["coords"])
            if item["type"] == "point":
                pieces.append(PointMass(x, y, w))
            elif item["type"] == "segment":
                pieces.append(
                    DiagonalSegment(
                        x, y, parse_fraction(item["length"]),
                        int(item["orientation"]), w,
                    )
                )
            else:
                raise ValueError(f"unknown piece type {item['type']!r}")
        return cls(tuple(pieces), permuton)


def uniform_diagonal() -> PermutonMeasure:
    """Lebesgue measure on the main diagonal; the identity permuton."""
    return PermutonMeasure(
        (DiagonalSegment(Fraction(0), Fraction(0), Fraction(1), 1, Fraction(1)),),
        permuton=True,
    )


def _split_segment(
    seg: DiagonalSegment, x0: Fraction, y0: Fraction, eps: Fraction
) -> list[DiagonalSegment]:
    cuts = {Fraction(0), seg.length}
    tx = x0 - seg.x
    if 0 < tx < seg.length:
        cuts.add(tx)
    ty = seg.orientation * (y0 - seg.y)
    if 0 < ty < seg.length:
        cuts.add(ty)
    grid = sorted(cuts)
    shrink = 1 - eps
    out = []
    for a, b in zip(grid, grid[1:]):
        mid = (a + b) / 2
        x_mid = seg.x + mid
        y_mid = seg.y + seg.orientation * mid
        corner_x = shrink * (seg.x + a) + (eps if x_mid > x0 else 0)
        corner_y = shrink * (seg.y + seg.orientation * a) + (
            eps if y_mid > y0 else 0
        )
        out.append(
            DiagonalSegment(
                corner_x,
                corner_y,
                shrink * (b - a),
                seg.orientation,
                seg.weight * shrink * (b - a) / seg.length,
            )
        )
    return out


def inflate_measure(
    mu: PermutonMeasure, x0, y0, eps, direction: str
) -> PermutonMeasure:
    """(1-eps) (phi x phi)-pushforward of mu plus the eps diagonal at (x0, y0)."""
    x0, y0, eps = Fraction(x0), Fraction(y0), Fraction(eps)
    _check_unit("x0", x0)
    _check_unit("y0", y0)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if direction not in (INCREASING, DECREASING):
        raise ValueError(f"direction must be increasing/decreasing: {direction!r}")
    shrink = 1 - eps
    pieces: list = []
    for piece in mu.pieces:
        if isinstance(piece, PointMass):
            pieces.append(
                PointMass(
                    shrink * piece.x + (eps if piece.x > x0 else 0),
                    shrink * piece.y + (eps if piece.y > y0 else 0),
                    piece.weight * shrink,
                )
            )
        else:
            pieces.extend(_split_segment(piece, x0, y0, eps))
    if direction == INCREASING:
        pieces.append(
            DiagonalSegment(shrink * x0, shrink * y0, eps, 1, eps)
        )
    else:
        pieces.append(
            DiagonalSegment(shrink * x0, shrink * y0 + eps, eps, -1, eps)
        )
    return PermutonMeasure(tuple(pieces), mu.permuton)


@dataclass(frozen=True)
class PermutationSquares:
    """The measure of a permutation: mass 1/n on each diagram block square.

    Not expressible with diagonal segments, so it lives as its own type;
    it supports exact pattern densities and point sampling, which is all
    the inflation expansion needs.
    """

    sigma: tuple[int, ...]

    def density(self, pi: Sequence[int]) -> Fraction:
        return permuton_density_exact(self.sigma, tuple(pi))

    def sample(self, rng: SplitMix64) -> tuple[float, float]:
        n = len(self.sigma)
        g = rng.below(n)
        return (g + rng.random()) / n, (self.sigma[g] - 1 + rng.random()) / n


@dataclass(frozen=True)
class DensityTable:
    """Exact pattern densities supplied directly (e.g. measured elsewhere)."""

    values: Mapping[tuple[int, ...], Fraction]

    def density(self, pi: Sequence[int]) -> Fraction:
        return self.values[tuple(pi)]


def permuton_density_exact(
    sigma: Sequence[int], pi: Sequence[int]
) -> Fraction:
    """d_pi of the permutation measure of sigma, by block combinatorics.

    k i.i.d. points fall into the n blocks as a multiset; co-block points
    are uniformly ordered in each coordinate independently, so a multiset
    with counts (m_g) contributes k!/(n^k prod m_g!^2) whenever the
    cross-block pairs of pi agree with sigma.
    """
    return _permuton_density_cached(tuple(sigma), tuple(pi))


@lru_cache(maxsize=None)
def _permuton_density_cached(
    sigma: tuple[int, ...], pi: tuple[int, ...]
) -> Fraction:
    n, k = len(sigma), len(pi)
    if k > 6 or n > 12:
        raise ValueError("exact block densities are capped at |pi|<=6, |sigma|<=12")
    total = Fraction(0)
    for blocks in itertools.combinations_with_replacement(range(n), k):
        consistent = True
        for a in range(k):
            for b in range(a + 1, k):
                if blocks[a] != blocks[b]:
                    # positions sorted by x: block order = position order
                    if (pi[b] > pi[a]) != (sigma[blocks[b]] > sigma[blocks[a]]):
                        consistent = False
                        break
            if not consistent:
                break
        if not consistent:
            continue
        weight = Fraction(factorial(k))
        for _, group in itertools.groupby(blocks):
            weight /= factorial(sum(1 for _ in group)) ** 2
        total += weight
    return total / n**k


@dataclass(frozen=True)
class EpsPolynomial:
    """Exact polynomial in eps, lowest degree first."""

    coefficients: tuple[Fraction, ...]

    def evaluate(self, eps) -> Fraction:
        eps = Fraction(eps)
        return sum(
            (c * eps**i for i, c in enumerate(self.coefficients)),
            start=Fraction(0),
        )

    def degree(self) -> int:
        return len(self.coefficients) - 1


def needed_patterns(pi: Sequence[int]) -> set[tuple[int, ...]]:
    """pi together with every run-collapse pattern entering its expansion."""
    pi = tuple(pi)
    out = {pi}
    for m in range(1, len(pi) + 1):
        inc, dec = permutations.run_insertion_sets(pi, m)
        out.update(tau for tau, _ in inc)
        out.update(tau for tau, _ in dec)
    return out


def inf_eps_polynomial(pi: Sequence[int], p, mu) -> EpsPolynomial:
    """E[d_pi(inflated mu)] as an exact polynomial in eps.

    mu provides exact pattern densities through .density (measures of
    permutations, or a DensityTable).
    """
    pi = tuple(pi)
    k = len(pi)
    p = Fraction(p)
    coeffs = [Fraction(0)] * (k + 1)

    def accumulate(m: int, factor: Fraction) -> None:
        # factor * (1-eps)^(k-m) eps^m
        for r in range(k - m + 1):
            sign = -1 if r % 2 else 1
            coeffs[m + r] += factor * sign * comb(k - m, r)

    accumulate(0, mu.density(pi))
    for m in range(1, k + 1):
        inc, dec = permutations.run_insertion_sets(pi, m)
        bracket = p * sum(
            (mu.density(tau) for tau, _ in inc), start=Fraction(0)
        ) + (1 - p) * sum(
            (mu.density(tau) for tau, _ in dec), start=Fraction(0)
        )
        if bracket:
            accumulate(m, Fraction(comb(k, m), k - m + 1) * bracket)
    return EpsPolynomial(tuple(coeffs))


def inf_eps_expected_density(mu, pi: Sequence[int], p, eps) -> Fraction:
    """Exact E[d_pi(Inf^eps(mu))] for a measure with exact densities."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return inf_eps_polynomial(pi, p, mu).evaluate(eps)


def generator_eps(mu, pi: Sequence[int], p, eps) -> Fraction:
    """A_eps d_pi(mu) = 2 eps^-2 (E[d_pi(inflated)] - d_pi(mu))."""
    eps = Fraction(eps)
    diff = inf_eps_expected_density(mu, pi, p, eps) - mu.density(pi)
    return 2 * diff / eps**2


def _up_kernel_sum(pi: tuple[int, ...], p: Fraction, mu) -> Fraction:
    """sum over |tau| = |pi|-1 of U(tau, pi) d_tau(mu), via the up-kernel."""
    k = len(pi)
    target = permutations.format_permutation(pi)
    total = Fraction(0)
    spec = permutations.chain(p, max_level=max(k, 2))
    for tau in permutations.all_permutations(k - 1):
        weight = spec.up_row(permutations.format_permutation(tau)).get(target)
        if weight:
            total += weight * mu.density(tau)
    return total


def generator_limit_check(mu, pi: Sequence[int], p) -> dict:
    """Certify the small-eps behavior of the inflation generator on d_pi.

    The eps^0 and eps^1 coefficients of E[d_pi(inflated)] - d_pi must
    vanish, and twice the eps^2 coefficient must equal
    k(k-1)(-d_pi + sum_tau U(tau, pi) d_tau) with U the exact up-kernel.
    """
    pi = tuple(pi)
    k = len(pi)
    p = Fraction(p)
    poly = inf_eps_polynomial(pi, p, mu)
    delta = list(poly.coefficients)
    d_pi = mu.density(pi)
    delta[0] -= d_pi
    quadratic = delta[2] if len(delta) > 2 else Fraction(0)
    limit = 2 * quadratic
    claimed = (
        k * (k - 1) * (-d_pi + _up_kernel_sum(pi, p, mu)) if k >= 2 else Fraction(0)
    )
    return {
        "pattern": permutations.format_permutation(pi),
        "constant_coefficient_zero": delta[0] == 0,
        "linear_coefficient_zero": (delta[1] == 0) if len(delta) > 1 else True,
        "quadratic_identity": limit == claimed,
        "limit_value": limit,
        "claimed_value": claimed,
    }


def estimate_density_mc(
    sampler, pi: Sequence[int], count: int, rng: SplitMix64
) -> tuple[float, float]:
    """MC estimate of d_pi under a point-sampleable measure, with stderr."""
    pi = tuple(pi)
    k = len(pi)
    hits = 0
    for _ in range(count):
        cloud = [sampler.sample(rng) for _ in range(k)]
        if _cloud_pattern(cloud) == pi:
            hits += 1
    est = hits / count
    return est, (est * (1 - est) / count) ** 0.5


def estimate_inflated_density_mc(
    mu, pi: Sequence[int], p, eps, count: int, rng: SplitMix64
) -> tuple[float, float]:
    """Direct MC of E[d_pi(Inf^eps(mu))]: sample the inflation, then points.

    Draw order per repetition: inflation center (x0, y0), direction coin,
    then per sample point one branch uniform followed by either a segment
    parameter (inserted diagonal) or a fresh mu point.
    """
    pi = tuple(pi)
    k = len(pi)
    p_f = float(Fraction(p))
    eps_f = float(Fraction(eps))
    shrink = 1 - eps_f
    hits = 0
    for _ in range(count):
        x0, y0 = mu.sample(rng)
        increasing = rng.random() < p_f
        cloud = []
        for _ in range(k):
            if rng.random() < eps_f:
                tau = rng.random() * eps_f
                if increasing:
                    cloud.append((shrink * x0 + tau, shrink * y0 + tau))
                else:
                    cloud.append((shrink * x0 + tau, shrink * y0 + eps_f - tau))
            else:
                x, y = mu.sample(rng)
                cloud.append(
                    (
                        shrink * x + (eps_f if x > x0 else 0),
                        shrink * y + (eps_f if y > y0 else 0),
                    )
                )
        if _cloud_pattern(cloud) == pi:
            hits += 1
    est = hits / count
    return est, (est * (1 - est) / count) ** 0.5


def _cloud_pattern(cloud: list[tuple[float, float]]) -> tuple[int, ...]:
    ordered = sorted(cloud)
    ys = [y for _, y in ordered]
    ranks = sorted(range(len(ys)), key=ys.__getitem__)
    out = [0] * len(ys)
    for rank, pos in enumerate(ranks, start=1):
        out[pos] = rank
    return tuple(out)
