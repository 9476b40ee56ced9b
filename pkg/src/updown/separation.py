"""Separation distances: brute force, closed forms, and the scaling limit.

The chain at size n has worst-start separation distance

    Delta_n(m) = max_{r,s} (1 - T_n^m(r,s)/M_n(s)),    M_n(s) > 0,

with the closed form (rates c_i = i(i+1), products over sizes 1..n-1)

    Delta_n(m)  = sum_i (1 - c_i/c_n)^m prod_{j != i} c_j/(c_j - c_i)
    Delta_n*(t) = sum_i e^{-c_i t}      prod_{j != i} c_j/(c_j - c_i)

and the n -> infinity limit

    Delta_F(t) = sum_{j >= 1} (-1)^{j-1} (2j+1) e^{-t j(j+1)}
               = 1 - prod_{j >= 1} (1 - e^{-2jt})^3.

Both closed forms are p-free; p only enters the brute-force route through
the kernels.  Exact rational evaluation is used for n <= 30; beyond that,
terms are accumulated with exactly rounded summation and a rounding-error
bound is reported (PrecisionError if it exceeds 1e-9 of the result).
"""
from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import kernels

_EPS = 2.0 ** -52
_EXACT_LIMIT = 30
_SERIES_TAIL = 1e-18


class PrecisionError(RuntimeError):
    """Rounding-error bound exceeded the acceptable share of the result."""


@dataclass(frozen=True)
class SepValue:
    """One separation-distance evaluation.

    value is a Fraction on the exact route (err_bound 0) or a float.
    complement holds 1 - value evaluated without cancellation whenever
    that difference drops below 1e-12, where the direct value saturates.
    """

    value: Fraction | float
    err_bound: float
    method: str
    complement: float | None = None

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class SepCurve:
    """Separation values along a step or time grid."""

    mode: str
    n: int | None
    p: Fraction | None
    abscissae: tuple
    values: tuple[SepValue, ...]

    def validate(self) -> None:
        """Range and monotonicity of the curve, up to reported error bounds."""
        previous = None
        for v in self.values:
            x = float(v.value)
            if not -v.err_bound <= x <= 1 + v.err_bound:
                raise ValueError(f"separation value {x} outside [0,1]")
            if previous is not None and x > previous + 2 * v.err_bound:
                raise ValueError("separation curve is not nonincreasing")
            previous = x


def sep(p_dist: Sequence, q_dist: Sequence):
    """max over the support of q of 1 - p(z)/q(z); zero-q entries skipped."""
    if len(p_dist) != len(q_dist):
        raise ValueError("distributions must share one index set")
    best = None
    for pz, qz in zip(p_dist, q_dist):
        if qz == 0:
            continue
        if qz < 0 or pz < 0:
            raise ValueError("distributions must be nonnegative")
        value = 1 - pz / qz
        if best is None or value > best:
            best = value
    if best is None:
        raise ValueError("q has empty support")
    return best


def _int_matmul(a: list[list[int]], b_cols: list[tuple[int, ...]]) -> list[list[int]]:
    return [
        [sum(map(operator.mul, row, col)) for col in b_cols] for row in a
    ]


def sepdist_bruteforce_curve(
    spec: kernels.ChainSpec, n: int, m_max: int
) -> list[Fraction]:
    """Exact Delta_n(m) for m = 0..m_max straight from the definition.

    Independent of the closed form: repeated integer-scaled powers of the
    one-step kernel against the stationary law.
    """
    if not 0 < spec.p < 1:
        raise ValueError("separation distances need p strictly inside (0, 1)")
    t_n = kernels.updown_operator(spec, n)
    m_n = kernels.stationary(spec, n)
    scale = math.lcm(*(v.denominator for row in t_n.entries for v in row))
    t_int = [[int(v * scale) for v in row] for row in t_n.entries]
    t_cols = [tuple(col) for col in zip(*t_int)]
    m_scale = math.lcm(*(v.denominator for v in m_n))
    m_int = [int(v * m_scale) for v in m_n]
    size = len(m_int)
    power = [[int(i == j) for j in range(size)] for i in range(size)]
    out = []
    for m in range(m_max + 1):
        if m:
            power = _int_matmul(power, t_cols)
        # Delta = 1 - (m_scale/scale^m) * min_{r,s} power[r][s]/m_int[s]
        best_num, best_den = None, None
        for row in power:
            for entry, mass in zip(row, m_int):
                if mass and (
                    best_num is None or entry * best_den < best_num * mass
                ):
                    best_num, best_den = entry, mass
        out.append(1 - Fraction(best_num * m_scale, best_den * scale**m))
    return out


def sepdist_bruteforce(spec: kernels.ChainSpec, n: int, m: int) -> Fraction:
    return sepdist_bruteforce_curve(spec, n, m)[m]


def standard_rates(n: int) -> list[int]:
    """[c_1, ..., c_n] with c_i = i(i+1)."""
    return [kernels.rate(i) for i in range(1, n + 1)]


def lagrange_coefficients(rates: Sequence) -> list[Fraction]:
    """prod_{j != i} c_j/(c_j - c_i) over the given rates, exact."""
    cs = [Fraction(c) for c in rates]
    if any(b <= a for a, b in zip(cs, cs[1:])) or (cs and cs[0] <= 0):
        raise ValueError("rates must be strictly increasing and positive")
    out = []
    for i, ci in enumerate(cs):
        coeff = Fraction(1)
        for j, cj in enumerate(cs):
            if j != i:
                coeff *= cj / (cj - ci)
        out.append(coeff)
    return out


def perm_coefficients(n: int) -> list[Fraction]:
    """Closed form of the Lagrange products for the standard rates.

    Coefficient of (1 - c_j/c_n)^m in Delta_n is
    (-1)^(j-1) (2j+1) (n-1)! n! / ((n-1-j)! (n+j)!), j = 1..n-1; the same
    numbers arise for both chain instances since the rates agree.
    """
    out = []
    for j in range(1, n):
        coeff = Fraction(2 * j + 1)
        for m in range(1, j + 1):
            coeff *= Fraction(n - m, n + m)
        out.append(coeff if j % 2 else -coeff)
    return out


def sepdist_formula_generic(rates: Sequence, m: int):
    """Delta_n(m) for rates [c_1..c_n]: exact when the inputs are rational."""
    if m < 0:
        raise ValueError("step count must be >= 0")
    cs = [Fraction(c) for c in rates]
    cn = cs[-1]
    coeffs = lagrange_coefficients(cs[:-1])
    return sum(
        coeff * (1 - ci / cn) ** m for ci, coeff in zip(cs[:-1], coeffs)
    ) if coeffs else Fraction(0)


def _float_sum_with_bound(terms: list[float], per_term_rel: list[float]):
    value = math.fsum(terms)
    bound = math.fsum(
        abs(t) * (rel + 2) * _EPS for t, rel in zip(terms, per_term_rel)
    )
    return value, bound


def _check_precision(value: float, bound: float, context: str) -> None:
    if bound > 1e-9 * max(abs(value), 1e-300):
        raise PrecisionError(
            f"{context}: rounding bound {bound:.3e} exceeds 1e-9 of {value:.3e}"
        )


def sepdist_discrete(n: int, m: int, exact: bool | None = None) -> SepValue:
    """Delta_n(m) for the standard rates; exact rationals for n <= 30."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if exact is None:
        exact = n <= _EXACT_LIMIT
    if exact:
        value = sepdist_formula_generic(standard_rates(n), m)
        return SepValue(value, 0.0, "formula-exact")
    cn = float(kernels.rate(n))
    terms, rels = [], []
    coeff = 1.0
    for j in range(1, n):
        coeff *= (n - j) / (n + j)
        y = m * math.log1p(-kernels.rate(j) / cn)
        term = (2 * j + 1) * coeff * math.exp(y) * (1 if j % 2 else -1)
        terms.append(term)
        rels.append(abs(y) + 2 * j + 2)
    value, bound = _float_sum_with_bound(terms, rels)
    _check_precision(value, bound, f"sepdist_discrete(n={n}, m={m})")
    return SepValue(value, bound, "formula-float")


def sepdist_continuous(n: int, t) -> SepValue:
    """Delta_n*(t) for the standard rates, compensated float evaluation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 0:
        raise ValueError("time must be >= 0")
    t = float(t)
    terms, rels = [], []
    coeff = 1.0
    for j in range(1, n):
        coeff *= (n - j) / (n + j)
        y = -kernels.rate(j) * t
        term = (2 * j + 1) * coeff * math.exp(y) * (1 if j % 2 else -1)
        terms.append(term)
        rels.append(abs(y) + 2 * j + 2)
    value, bound = _float_sum_with_bound(terms, rels)
    _check_precision(value, bound, f"sepdist_continuous(n={n}, t={t})")
    return SepValue(value, bound, "formula-float")


def sepdist_formula_continuous(rates: Sequence, t) -> SepValue:
    """Delta_n*(t) for arbitrary strictly increasing positive rates.

    Float evaluation; the coefficient products are formed termwise, so the
    reported bound grows with the rate count.  The standard-rates entry
    point sepdist_continuous uses the cancellation-free closed form of the
    coefficients instead.
    """
    cs = [float(c) for c in rates]
    if any(b <= a for a, b in zip(cs, cs[1:])) or (cs and cs[0] <= 0):
        raise ValueError("rates must be strictly increasing and positive")
    t = float(t)
    if t < 0:
        raise ValueError("time must be >= 0")
    body = cs[:-1]
    terms, rels = [], []
    for i, ci in enumerate(body):
        coeff = 1.0
        for j, cj in enumerate(body):
            if j != i:
                coeff *= cj / (cj - ci)
        y = -ci * t
        terms.append(coeff * math.exp(y))
        rels.append(abs(y) + 2 * len(body) + 2)
    value, bound = _float_sum_with_bound(terms, rels)
    _check_precision(value, bound, f"sepdist_formula_continuous(t={t})")
    return SepValue(value, bound, "generic-float")


def sepdist_limit(t) -> SepValue:
    """Delta_F(t): alternating series, tail truncated below 1e-18."""
    t = float(t)
    if t <= 0:
        raise ValueError("the limit curve is defined for t > 0")
    terms, rels = [], []
    j = 1
    while True:
        y = -t * j * (j + 1)
        term = (2 * j + 1) * math.exp(y) * (-1 if j % 2 == 0 else 1)
        terms.append(term)
        rels.append(abs(y) + 2)
        j += 1
        next_mag = (2 * j + 1) * math.exp(-t * j * (j + 1))
        # once term ratios drop below 1/2 they stay there, so the omitted
        # tail is at most twice the first omitted term
        if next_mag < _SERIES_TAIL and next_mag < 0.5 * abs(term):
            tail = 2 * next_mag
            break
        if next_mag == 0.0:
            tail = 0.0
            break
    value, bound = _float_sum_with_bound(terms, rels)
    bound += tail
    _check_precision(value, bound, f"sepdist_limit(t={t})")
    complement = None
    if 1 - value < 1e-12:
        complement = eta(t)
    return SepValue(value, bound, "limit-series", complement)


def eta(t) -> float:
    """prod_{j >= 1} (1 - e^{-2jt})^3 = e^{t/4} eta^3(it/pi) = 1 - Delta_F(t)."""
    t = float(t)
    if t <= 0:
        raise ValueError("the eta product needs t > 0")
    out = 1.0
    j = 1
    while True:
        q = math.exp(-2 * j * t)
        if q < _SERIES_TAIL:
            return out
        out *= (1 - q) ** 3
        j += 1


def eta_product_residual(t) -> float:
    """|series Delta_F(t) - (1 - eta(t))|; identity check."""
    return abs(float(sepdist_limit(t).value) - (1 - eta(t)))


def eta_symmetry_residual(t) -> float:
    """Residual of 1 - Delta_F(t) = e^{-pi^2/4t + t/4} (pi/t)^{3/2} (1 - Delta_F(pi^2/t))."""
    t = float(t)
    lhs = 1 - float(sepdist_limit(t).value)
    factor = math.exp(-math.pi**2 / (4 * t) + t / 4) * (math.pi / t) ** 1.5
    rhs = factor * (1 - float(sepdist_limit(math.pi**2 / t).value))
    return abs(lhs - rhs)


def small_t_approx(t) -> float:
    """e^{-pi^2/4t} (pi/t)^{3/2}, the small-t law for 1 - Delta_F(t)."""
    t = float(t)
    return math.exp(-math.pi**2 / (4 * t)) * (math.pi / t) ** 1.5


def discrete_curve(n: int, steps: Sequence[int], p=None) -> SepCurve:
    values = tuple(sepdist_discrete(n, m) for m in steps)
    return SepCurve("discrete", n, p, tuple(steps), values)


def continuous_curve(n: int, times: Sequence, p=None) -> SepCurve:
    values = tuple(sepdist_continuous(n, t) for t in times)
    return SepCurve("continuous", n, p, tuple(times), values)


def limit_curve(times: Sequence) -> SepCurve:
    values = tuple(sepdist_limit(t) for t in times)
    return SepCurve("limit", None, None, tuple(times), values)
