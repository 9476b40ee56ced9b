"""Exact kernel algebra for up-down chains with the commutation property.

A chain instance is described by a ChainSpec: enumerable state levels
indexed by object size (the single root object has size 1), an up-kernel
row builder (size n to n+1), a down-kernel row builder (size n to n-1),
and samplers for both.  Everything here is exact rational arithmetic; the
structural identities (commutation, eigen-relations, stationarity) are
meant to be checked entrywise with zero tolerance, so no floats appear in
this module.

Both shipped instances share the rates c_n = n(n+1) with c_0 = 0, giving
the commutation constants beta_n = c_{n-1}/c_n = (n-1)/(n+1).  The up-down
step at size n is T_n = U_n D_{n+1}, and the identities below hold level by
level:

    U_n D_{n+1}  =  beta_n D_n U_{n-1} + (1 - beta_n) I            (n >= 2)
    U_n D_{n+1,k} = omega_{k,n} D_{n,k-1} U_{k-1}
                    + (1 - omega_{k,n}) D_{n,k}                    (2 <= k <= n)

with omega_{k,n} = c_{k-1}/c_n and extended kernels D_{n,k}, U_{k,n}.
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .rng import SplitMix64

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


class LevelCapError(ValueError):
    """Raised when an operation needs levels beyond the configured cap."""


def rate(n: int) -> int:
    """Mixing rate c_n = n(n+1); c_0 = 0 by convention."""
    if n < 0:
        raise ValueError(f"rate index must be >= 0, got {n}")
    return n * (n + 1)


def beta(n: int) -> Fraction:
    """Commutation constant beta_n = c_{n-1}/c_n = (n-1)/(n+1) for n >= 1."""
    if n < 1:
        raise ValueError(f"beta index must be >= 1, got {n}")
    return Fraction(rate(n - 1), rate(n))


def omega(k: int, n: int) -> Fraction:
    """Extended-commutation weight omega_{k,n} = c_{k-1}/c_n, 1 <= k <= n."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return Fraction(rate(k - 1), rate(n))


def fraction_str(x: Fraction) -> str:
    """Always-slashed rational text, e.g. Fraction(1) -> "1/1"."""
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(text: str) -> Fraction:
    """Parse "a/b" or a plain integer string; floats are rejected."""
    text = text.strip()
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return Fraction(int(num), int(den))
        # int() rejects "0.5" and friends, which is the contract
        return Fraction(int(text))
    except ZeroDivisionError:
        raise ValueError(f"zero denominator in {text!r}") from None


@dataclass(frozen=True)
class ChainSpec:
    """Pluggable description of one up-down chain instance.

    states(n) must return the level-n state encodings in a fixed total
    order; up_row/down_row return sparse kernel rows keyed by encoding.
    The _cache dict memoizes built kernels per instance and is excluded
    from comparison.
    """

    name: str
    p: Fraction
    max_exact_level: int
    states: Callable[[int], tuple[str, ...]]
    up_row: Callable[[str], dict[str, Fraction]]
    down_row: Callable[[str], dict[str, Fraction]]
    sample_up: Callable[[str, SplitMix64], str]
    sample_down: Callable[[str, SplitMix64], str]
    rate: Callable[[int], int] = rate
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def beta(self, n: int) -> Fraction:
        return Fraction(self.rate(n - 1), self.rate(n))

    def omega(self, k: int, n: int) -> Fraction:
        return Fraction(self.rate(k - 1), self.rate(n))


def level_states(spec: ChainSpec, n: int) -> tuple[str, ...]:
    """Memoized spec.states(n); enforces the level cap."""
    if n < 1:
        raise ValueError(f"levels start at 1, got {n}")
    if n > spec.max_exact_level:
        raise LevelCapError(
            f"level {n} exceeds the exact-computation cap "
            f"{spec.max_exact_level} for instance {spec.name!r}"
        )
    key = ("states", n)
    if key not in spec._cache:
        spec._cache[key] = tuple(spec.states(n))
    return spec._cache[key]


@dataclass(frozen=True)
class StochKernel:
    """Dense exact transition matrix between two state levels."""

    from_level: int
    to_level: int
    states_from: tuple[str, ...]
    states_to: tuple[str, ...]
    entries: tuple[tuple[Fraction, ...], ...]

    def entry(self, r: str, s: str) -> Fraction:
        return self.entries[self.states_from.index(r)][self.states_to.index(s)]

    def row(self, r: str) -> dict[str, Fraction]:
        values = self.entries[self.states_from.index(r)]
        return {s: v for s, v in zip(self.states_to, values) if v}

    def column(self, s: str) -> tuple[Fraction, ...]:
        j = self.states_to.index(s)
        return tuple(row[j] for row in self.entries)

    def is_row_stochastic(self) -> bool:
        return all(
            all(v >= 0 for v in row) and sum(row) == 1 for row in self.entries
        )

    def compose(self, other: "StochKernel") -> "StochKernel":
        """Matrix product self @ other (apply self's step first)."""
        if self.states_to != other.states_from:
            raise ValueError("kernel shapes do not chain")
        width = len(other.states_to)
        rows = []
        for row in self.entries:
            acc = [ZERO] * width
            for j, w in enumerate(row):
                if w:
                    other_row = other.entries[j]
                    for k, v in enumerate(other_row):
                        if v:
                            acc[k] += w * v
            rows.append(tuple(acc))
        return StochKernel(
            self.from_level,
            other.to_level,
            self.states_from,
            other.states_to,
            tuple(rows),
        )

    def scaled(self, c: Fraction) -> "StochKernel":
        c = Fraction(c)
        return StochKernel(
            self.from_level,
            self.to_level,
            self.states_from,
            self.states_to,
            tuple(tuple(c * v for v in row) for row in self.entries),
        )

    def plus(self, other: "StochKernel") -> "StochKernel":
        if (
            self.states_from != other.states_from
            or self.states_to != other.states_to
        ):
            raise ValueError("kernel shapes do not match")
        return StochKernel(
            self.from_level,
            self.to_level,
            self.states_from,
            self.states_to,
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            ),
        )

    def apply(self, vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Kernel acting on a function of the target level: (Kf)(r)."""
        if len(vec) != len(self.states_to):
            raise ValueError("vector length does not match target level")
        return tuple(
            sum((w * v for w, v in zip(row, vec) if w), start=ZERO)
            for row in self.entries
        )

    def left_apply(self, vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Measure pushforward: (vK)(s)."""
        if len(vec) != len(self.states_from):
            raise ValueError("vector length does not match source level")
        width = len(self.states_to)
        acc = [ZERO] * width
        for w, row in zip(vec, self.entries):
            if w:
                for k, v in enumerate(row):
                    if v:
                        acc[k] += w * v
        return tuple(acc)

    @classmethod
    def identity(cls, level: int, states: tuple[str, ...]) -> "StochKernel":
        size = len(states)
        return cls(
            level,
            level,
            states,
            states,
            tuple(
                tuple(ONE if i == j else ZERO for j in range(size))
                for i in range(size)
            ),
        )

    def to_json_dict(self) -> dict:
        return {
            "from_level": self.from_level,
            "to_level": self.to_level,
            "states_from": list(self.states_from),
            "states_to": list(self.states_to),
            "entries": [[fraction_str(v) for v in row] for row in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "StochKernel":
        data = json.loads(text)
        return cls(
            data["from_level"],
            data["to_level"],
            tuple(data["states_from"]),
            tuple(data["states_to"]),
            tuple(
                tuple(parse_fraction(v) for v in row) for row in data["entries"]
            ),
        )


def _dense_rows(
    sources: tuple[str, ...],
    targets: tuple[str, ...],
    row_builder: Callable[[str], dict[str, Fraction]],
) -> tuple[tuple[Fraction, ...], ...]:
    index = {s: j for j, s in enumerate(targets)}
    rows = []
    for r in sources:
        sparse = row_builder(r)
        dense = [ZERO] * len(targets)
        for s, w in sparse.items():
            dense[index[s]] += w
        rows.append(tuple(dense))
    return tuple(rows)


def build_up_kernel(spec: ChainSpec, n: int) -> StochKernel:
    """U_n: exact row-stochastic kernel from level n to n+1."""
    key = ("U", n)
    if key not in spec._cache:
        sources = level_states(spec, n)
        targets = level_states(spec, n + 1)
        logger.info(
            "%s: building U_%d (%d x %d entries)",
            spec.name, n, len(sources), len(targets),
        )
        spec._cache[key] = StochKernel(
            n, n + 1, sources, targets, _dense_rows(sources, targets, spec.up_row)
        )
    return spec._cache[key]


def build_down_kernel(spec: ChainSpec, n: int) -> StochKernel:
    """D_n: exact row-stochastic kernel from level n to n-1."""
    if n < 2:
        raise ValueError("down-kernel needs level >= 2")
    key = ("D", n)
    if key not in spec._cache:
        sources = level_states(spec, n)
        targets = level_states(spec, n - 1)
        logger.info(
            "%s: building D_%d (%d x %d entries)",
            spec.name, n, len(sources), len(targets),
        )
        spec._cache[key] = StochKernel(
            n, n - 1, sources, targets, _dense_rows(sources, targets, spec.down_row)
        )
    return spec._cache[key]


def updown_operator(spec: ChainSpec, n: int) -> StochKernel:
    """T_n = U_n D_{n+1}, the one-step kernel at level n."""
    key = ("T", n)
    if key not in spec._cache:
        spec._cache[key] = build_up_kernel(spec, n).compose(
            build_down_kernel(spec, n + 1)
        )
    return spec._cache[key]


@dataclass(frozen=True)
class CommutationReport:
    level: int
    holds: bool
    beta_checked: Fraction
    first_violation: tuple[str, str, Fraction, Fraction] | None


def verify_commutation(spec: ChainSpec, n: int) -> CommutationReport:
    """Entrywise check of U_n D_{n+1} = beta_n D_n U_{n-1} + (1-beta_n) I."""
    if n < 2:
        raise ValueError("commutation check needs level >= 2")
    b = spec.beta(n)
    lhs = updown_operator(spec, n)
    states = level_states(spec, n)
    rhs = (
        build_down_kernel(spec, n)
        .compose(build_up_kernel(spec, n - 1))
        .scaled(b)
        .plus(StochKernel.identity(n, states).scaled(1 - b))
    )
    violation = None
    for i, r in enumerate(states):
        for j, s in enumerate(states):
            if lhs.entries[i][j] != rhs.entries[i][j]:
                violation = (r, s, lhs.entries[i][j], rhs.entries[i][j])
                break
        if violation:
            break
    return CommutationReport(n, violation is None, b, violation)


def extended_down(spec: ChainSpec, n: int, k: int) -> StochKernel:
    """D_{n,k} = D_n D_{n-1} ... D_{k+1}; D_{n,n} is the identity."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k == n:
        return StochKernel.identity(n, level_states(spec, n))
    key = ("Dext", n, k)
    if key not in spec._cache:
        spec._cache[key] = extended_down(spec, n, k + 1).compose(
            build_down_kernel(spec, k + 1)
        )
    return spec._cache[key]


def extended_up(spec: ChainSpec, k: int, n: int) -> StochKernel:
    """U_{k,n} = U_k U_{k+1} ... U_{n-1}; U_{k,k} is the identity."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k == n:
        return StochKernel.identity(n, level_states(spec, n))
    key = ("Uext", k, n)
    if key not in spec._cache:
        spec._cache[key] = extended_up(spec, k, n - 1).compose(
            build_up_kernel(spec, n - 1)
        )
    return spec._cache[key]


def density_vector(spec: ChainSpec, s: str, n: int) -> tuple[Fraction, ...]:
    """(d_s)_n(u) = D_{n,|s|}(u, s) for every level-n state u."""
    k = _state_size(spec, s)
    if k > n:
        raise ValueError(f"pattern level {k} exceeds evaluation level {n}")
    return extended_down(spec, n, k).column(s)


def _state_size(spec: ChainSpec, s: str) -> int:
    for k in range(1, spec.max_exact_level + 1):
        if s in level_states(spec, k):
            return k
    raise ValueError(f"unknown pattern encoding {s!r} for instance {spec.name!r}")


def eta_coeff(spec: ChainSpec, i: int, j: int) -> Fraction:
    """eta_{i,j} = prod_{m=i}^{j-1} c_m / (c_{m-1} - c_{j-1}); eta_{i,i} = 1."""
    if not 1 <= i <= j:
        raise ValueError(f"need 1 <= i <= j, got i={i}, j={j}")
    out = ONE
    cj = spec.rate(j - 1)
    for m in range(i, j):
        den = spec.rate(m - 1) - cj
        assert den != 0, "rates must be strictly increasing"
        out *= Fraction(spec.rate(m), den)
    return out


def theta_coeff(spec: ChainSpec, i: int, j: int) -> Fraction:
    """theta_{i,j} = prod_{m=i}^{j-1} c_m / (c_m - c_{i-1}); theta_{1,j} = 1."""
    if not 1 <= i <= j:
        raise ValueError(f"need 1 <= i <= j, got i={i}, j={j}")
    out = ONE
    ci = spec.rate(i - 1)
    for m in range(i, j):
        den = spec.rate(m) - ci
        assert den != 0, "rates must be strictly increasing"
        out *= Fraction(spec.rate(m), den)
    return out


def _vec_add(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(x + y for x, y in zip(a, b))


def _vec_scale(c: Fraction, a: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(c * x for x in a)


def eigenfunction(spec: ChainSpec, s: str, n: int) -> tuple[Fraction, ...]:
    """(h_s)_n = sum_{k <= |s|} eta_{k,|s|} D_{n,k} U_{k,|s|}(., s).

    Satisfies T_n h_s = (1 - c_{|s|-1}/c_n) h_s exactly; h_s = d_s plus a
    combination of lower-level densities.
    """
    ks = _state_size(spec, s)
    if ks > n:
        raise ValueError(f"pattern level {ks} exceeds evaluation level {n}")
    total = tuple(ZERO for _ in level_states(spec, n))
    for k in range(1, ks + 1):
        col = extended_up(spec, k, ks).column(s)
        contrib = extended_down(spec, n, k).apply(col)
        total = _vec_add(total, _vec_scale(eta_coeff(spec, k, ks), contrib))
    return total


def density_from_eigen(spec: ChainSpec, s: str, n: int) -> tuple[Fraction, ...]:
    """Inverse expansion d_s = sum_r U_{|r|,|s|}(r,s) theta_{|r|,|s|} h_r."""
    ks = _state_size(spec, s)
    total = tuple(ZERO for _ in level_states(spec, n))
    for k in range(1, ks + 1):
        col = extended_up(spec, k, ks).column(s)
        theta = theta_coeff(spec, k, ks)
        for r, weight in zip(level_states(spec, k), col):
            if weight:
                total = _vec_add(
                    total, _vec_scale(theta * weight, eigenfunction(spec, r, n))
                )
    return total


def eigenvalue(spec: ChainSpec, k: int, n: int) -> Fraction:
    """Eigenvalue of T_n on the level-k eigenspace: 1 - c_{k-1}/c_n."""
    return 1 - Fraction(spec.rate(k - 1), spec.rate(n))


def rank_exact(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over the rationals, by Gaussian elimination without rounding."""
    matrix = [list(row) for row in rows]
    if not matrix:
        return 0
    n_cols = len(matrix[0])
    rank = 0
    col = 0
    while rank < len(matrix) and col < n_cols:
        pivot = next(
            (i for i in range(rank, len(matrix)) if matrix[i][col]), None
        )
        if pivot is None:
            col += 1
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        inv = 1 / matrix[rank][col]
        matrix[rank] = [v * inv for v in matrix[rank]]
        for i in range(len(matrix)):
            if i != rank and matrix[i][col]:
                factor = matrix[i][col]
                matrix[i] = [
                    a - factor * b for a, b in zip(matrix[i], matrix[rank])
                ]
        rank += 1
        col += 1
    return rank


@dataclass(frozen=True)
class SpectrumLine:
    level: int
    eigenvalue: Fraction
    multiplicity: int
    eigen_identity_checked: bool
    rank_checked: bool


def spectrum_report(spec: ChainSpec, n: int) -> tuple[SpectrumLine, ...]:
    """Eigenvalues 1 - c_{k-1}/c_n with multiplicities |E_k| - |E_{k-1}|.

    Each line is certified two ways: every h_s with |s| = k satisfies the
    exact eigen-relation, and the span of those vectors has exact rational
    rank |E_k| - |E_{k-1}|.
    """
    lines = []
    t_n = updown_operator(spec, n)
    prev_count = 0
    for k in range(1, n + 1):
        lam = eigenvalue(spec, k, n)
        vectors = [eigenfunction(spec, s, n) for s in level_states(spec, k)]
        identity_ok = all(
            t_n.apply(h) == _vec_scale(lam, h) for h in vectors
        )
        count = len(vectors)
        multiplicity = count - prev_count
        rank_ok = rank_exact(vectors) == multiplicity if k > 1 else count == 1
        lines.append(
            SpectrumLine(k, lam, multiplicity, identity_ok, rank_ok)
        )
        prev_count = count
    return tuple(lines)


def stationary(spec: ChainSpec, n: int) -> tuple[Fraction, ...]:
    """M_n = U_{1,n}(root, .), the unique stationary law of T_n."""
    key = ("M", n)
    if key not in spec._cache:
        spec._cache[key] = tuple(extended_up(spec, 1, n).entries[0])
    return spec._cache[key]


def triangular_action_check(spec: ChainSpec, s: str, n: int) -> bool:
    """T_n d_s = (1 - omega)d_s + omega sum_{|r|=|s|-1} U_{|s|-1}(r,s) d_r."""
    k = _state_size(spec, s)
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= |s| <= n, got |s|={k}, n={n}")
    w = spec.omega(k, n)
    d_s = density_vector(spec, s, n)
    lhs = updown_operator(spec, n).apply(d_s)
    rhs = _vec_scale(1 - w, d_s)
    up_col = build_up_kernel(spec, k - 1).column(s)
    for r, weight in zip(level_states(spec, k - 1), up_col):
        if weight:
            rhs = _vec_add(
                rhs, _vec_scale(w * weight, density_vector(spec, r, n))
            )
    return lhs == rhs


def extended_commutation_check(spec: ChainSpec, n: int, k: int) -> bool:
    """U_n D_{n+1,k} = omega_{k,n} D_{n,k-1} U_{k-1} + (1-omega_{k,n}) D_{n,k}."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    w = spec.omega(k, n)
    lhs = build_up_kernel(spec, n).compose(extended_down(spec, n + 1, k))
    rhs = (
        extended_down(spec, n, k - 1)
        .compose(build_up_kernel(spec, k - 1))
        .scaled(w)
        .plus(extended_down(spec, n, k).scaled(1 - w))
    )
    return lhs.entries == rhs.entries


def _first_failure(pairs) -> str | None:
    for label, ok in pairs:
        if not ok:
            return label
    return None


def verification_report(spec: ChainSpec, n_max: int) -> dict:
    """Exact structural audit used by the command-line verify surface.

    Runs stochasticity, commutation, density (partition of unity and
    down-consistency), eta/theta inversion, eigen-relation, triangular
    action, and stationarity checks up to level n_max.  Returns a plain
    dict; every check lists pass/fail and the first counterexample.
    """
    if n_max + 1 > spec.max_exact_level:
        raise LevelCapError(
            f"verification to level {n_max} needs level {n_max + 1} kernels; "
            f"cap is {spec.max_exact_level}"
        )
    checks: list[dict] = []

    def add(name: str, passed: bool, detail: str | None = None) -> None:
        checks.append(
            {"name": name, "passed": bool(passed), "counterexample": detail}
        )

    stochastic_bad = _first_failure(
        (f"U_{n}", build_up_kernel(spec, n).is_row_stochastic())
        for n in range(1, n_max + 1)
    ) or _first_failure(
        (f"D_{n}", build_down_kernel(spec, n).is_row_stochastic())
        for n in range(2, n_max + 2)
    )
    add("row_stochastic", stochastic_bad is None, stochastic_bad)

    commutation_bad = None
    for n in range(2, n_max + 1):
        report = verify_commutation(spec, n)
        if not report.holds:
            commutation_bad = f"n={n}: {report.first_violation}"
            break
    add("commutation", commutation_bad is None, commutation_bad)

    extended_bad = _first_failure(
        (f"n={n},k={k}", extended_commutation_check(spec, n, k))
        for n in range(2, n_max + 1)
        for k in range(2, n + 1)
    )
    add("extended_commutation", extended_bad is None, extended_bad)

    partition_bad = None
    for n in range(1, n_max + 1):
        for k in range(1, n + 1):
            dnk = extended_down(spec, n, k)
            if any(sum(row) != 1 for row in dnk.entries):
                partition_bad = f"n={n},k={k}"
                break
        if partition_bad:
            break
    add("density_partition_of_unity", partition_bad is None, partition_bad)

    down_bad = None
    for n in range(1, n_max):
        down = build_down_kernel(spec, n + 1)
        for s in level_states(spec, min(n, 4)):
            d_n = density_vector(spec, s, n)
            if down.apply(d_n) != density_vector(spec, s, n + 1):
                down_bad = f"n={n},s={s}"
                break
        if down_bad:
            break
    add("density_down_consistency", down_bad is None, down_bad)

    eta_bad = None
    for i in range(1, n_max + 3):
        for j in range(i, n_max + 3):
            total = sum(
                eta_coeff(spec, i, k) * theta_coeff(spec, k, j)
                for k in range(i, j + 1)
            )
            if total != (1 if i == j else 0):
                eta_bad = f"i={i},j={j}"
                break
        if eta_bad:
            break
    add("eta_theta_inversion", eta_bad is None, eta_bad)

    eigen_bad = None
    t_top = updown_operator(spec, n_max)
    for k in range(1, n_max + 1):
        lam = eigenvalue(spec, k, n_max)
        for s in level_states(spec, k):
            h = eigenfunction(spec, s, n_max)
            if t_top.apply(h) != _vec_scale(lam, h):
                eigen_bad = f"n={n_max},s={s}"
                break
        if eigen_bad:
            break
    add("eigen_relations", eigen_bad is None, eigen_bad)

    triangular_bad = _first_failure(
        (f"s={s}", triangular_action_check(spec, s, n_max))
        for k in range(2, n_max + 1)
        for s in level_states(spec, k)
    )
    add("triangular_action", triangular_bad is None, triangular_bad)

    stationary_bad = None
    for n in range(1, n_max + 1):
        m_n = stationary(spec, n)
        if updown_operator(spec, n).left_apply(m_n) != m_n:
            stationary_bad = f"M_{n} T_{n} != M_{n}"
            break
        if build_up_kernel(spec, n).left_apply(m_n) != stationary(spec, n + 1):
            stationary_bad = f"M_{n} U_{n} != M_{n + 1}"
            break
        if build_down_kernel(spec, n + 1).left_apply(
            stationary(spec, n + 1)
        ) != m_n:
            stationary_bad = f"M_{n + 1} D_{n + 1} != M_{n}"
            break
    add("stationarity", stationary_bad is None, stationary_bad)

    return {
        "instance": spec.name,
        "p": fraction_str(spec.p),
        "n_max": n_max,
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks),
    }
