"""Trajectory simulation of both chains at sizes beyond the exact caps.

States are carried in mutable native form (a value list for permutations,
a preallocated adjacency buffer for graphs) so one up-down step costs
O(n).  Reproducibility contract: trajectory i consumes only the substream
derived from (master_seed, i); within a trajectory the draw order is
fixed (one u64 reserved for the auxiliary subsampling generator, then the
initial state, then per step: position, direction coin, deletion
position).  Results are therefore identical for any worker count.

Step budgets follow the c_n = n(n+1) clock: the state reported at scaled
time t has received floor(n(n+1) t) up-down steps since the start, with
no per-interval rounding.

Density estimation is exact over all k-subsets for patterns of size
k <= 4 (vectorized), and switches to a fixed 200000-subset subsample per
evaluation for k >= 5; the subsample noise is carried into the reported
standard errors because each trajectory contributes one subsampled
estimate.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from math import comb
from multiprocessing import Pool
from typing import Iterator, Sequence

import numpy as np

from . import graphs, kernels, permutations
from .rng import SplitMix64, substream

SUBSAMPLE_COUNT = 200_000

_comb_cache: dict[tuple[int, int], np.ndarray] = {}
_graph_lut_cache: dict[tuple[int, int], np.ndarray] = {}


@dataclass(frozen=True)
class SimConfig:
    """One simulation request; picklable, so workers can share it."""

    instance: str
    n: int
    p: Fraction
    t_grid: tuple[float, ...]
    trajectories: int
    master_seed: int
    initial: str = "stationary"

    def __post_init__(self):
        if self.instance not in ("perm", "graph"):
            raise ValueError(f"unknown instance {self.instance!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        grid = self.t_grid
        if any(t < 0 for t in grid) or any(
            b <= a for a, b in zip(grid, grid[1:])
        ):
            raise ValueError("t_grid must be nonnegative and increasing")


def step_budget(n: int, t) -> int:
    """Total steps after scaled time t: floor(n(n+1) t), drift-free."""
    return int(kernels.rate(n) * Fraction(t))


def _trajectory_rng(config: SimConfig, index: int) -> tuple[SplitMix64, int]:
    rng = substream(config.master_seed, index)
    aux_seed = rng.u64()
    return rng, aux_seed


def _initial_perm(config: SimConfig, rng: SplitMix64) -> list[int]:
    n, token = config.n, config.initial
    if token == "identity":
        return list(range(1, n + 1))
    if token == "reverse":
        return list(range(n, 0, -1))
    if token == "uniform":
        values = list(range(1, n + 1))
        rng.shuffle(values)
        return values
    if token == "stationary":
        return list(permutations.recursive_separable_sample(n, config.p, rng))
    sigma = permutations.parse_permutation(token)
    if len(sigma) != n:
        raise ValueError(f"initial state has size {len(sigma)}, expected {n}")
    return list(sigma)


def _initial_graph(config: SimConfig, rng: SplitMix64) -> np.ndarray:
    n, token = config.n, config.initial
    buf = np.zeros((n + 1, n + 1), dtype=np.uint8)
    if token == "empty":
        return buf
    if token == "complete":
        buf[:n, :n] = 1
        np.fill_diagonal(buf, 0)
        return buf
    if token == "uniform":
        for i in range(n):
            for j in range(i + 1, n):
                buf[i, j] = buf[j, i] = 1 if rng.coin(Fraction(1, 2)) else 0
        return buf
    if token == "stationary":
        # labeled recursive cograph built in place; same law as
        # graphs.cograph_sample but free of the canonicalization cap
        join_prob = 1 - config.p
        for m in range(1, n):
            v = rng.below(m)
            buf[m, :m] = buf[v, :m]
            buf[:m, m] = buf[:m, v]
            joined = 1 if rng.coin(join_prob) else 0
            buf[m, v] = buf[v, m] = joined
        return buf
    g = graphs.parse_graph(token)
    if g.n != n:
        raise ValueError(f"initial state has {g.n} vertices, expected {n}")
    buf[:n, :n] = g.adjacency()
    return buf


def _perm_step(state: list[int], n: int, p: Fraction, rng: SplitMix64) -> None:
    i = rng.below(n) + 1
    increasing = rng.coin(p)
    vi = state[i - 1]
    for idx in range(n):
        if state[idx] > vi:
            state[idx] += 1
    state[i - 1 : i] = (vi, vi + 1) if increasing else (vi + 1, vi)
    j = rng.below(n + 1) + 1
    vj = state[j - 1]
    del state[j - 1]
    for idx in range(n):
        if state[idx] > vj:
            state[idx] -= 1


def _graph_step(buf: np.ndarray, n: int, p: Fraction, rng: SplitMix64) -> None:
    v = rng.below(n)
    connect = rng.coin(1 - p)
    buf[n, :n] = buf[v, :n]
    buf[:n, n] = buf[:n, v]
    buf[v, n] = buf[n, v] = 1 if connect else 0
    j = rng.below(n + 1)
    if j != n:
        row = buf[n, : n + 1].copy()
        row[j] = 0
        buf[j, : n + 1] = row
        buf[: n + 1, j] = row
    buf[n, :] = 0
    buf[:, n] = 0


def simulate_states(config: SimConfig) -> Iterator[tuple[int, list]]:
    """Stream (trajectory index, snapshots at each grid time).

    Snapshots are value tuples for permutations and dense n x n adjacency
    arrays for graphs.
    """
    budgets = [step_budget(config.n, t) for t in config.t_grid]
    for index in range(config.trajectories):
        rng, _ = _trajectory_rng(config, index)
        snapshots = []
        if config.instance == "perm":
            state = _initial_perm(config, rng)
            done = 0
            for budget in budgets:
                for _ in range(budget - done):
                    _perm_step(state, config.n, config.p, rng)
                done = budget
                snapshots.append(tuple(state))
        else:
            buf = _initial_graph(config, rng)
            done = 0
            for budget in budgets:
                for _ in range(budget - done):
                    _graph_step(buf, config.n, config.p, rng)
                done = budget
                snapshots.append(buf[: config.n, : config.n].copy())
        yield index, snapshots


def _subsets(n: int, k: int) -> np.ndarray:
    key = (n, k)
    if key not in _comb_cache:
        _comb_cache[key] = np.array(
            list(itertools.combinations(range(n), k)), dtype=np.int32
        )
    return _comb_cache[key]


def perm_occurrence_count(state: Sequence[int], pi: tuple[int, ...]) -> int:
    """Exact occ(pi, state) vectorized over all |pi|-subsets."""
    k = len(pi)
    arr = np.asarray(state, dtype=np.int32)
    positions = [pi.index(r) for r in range(1, k + 1)]
    vals = arr[_subsets(len(state), k)]
    mask = np.ones(len(vals), dtype=bool)
    for lo, hi in zip(positions, positions[1:]):
        mask &= vals[:, lo] < vals[:, hi]
    return int(np.count_nonzero(mask))


def _pair_bits(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def _graph_pattern_lut(pattern: graphs.UGraph) -> np.ndarray:
    key = (pattern.n, pattern.bits)
    if key not in _graph_lut_cache:
        npairs = pattern.n * (pattern.n - 1) // 2
        lut = np.zeros(1 << npairs, dtype=np.uint8)
        for code in range(1 << npairs):
            if graphs._canonical_bits(pattern.n, code) == pattern.bits:
                lut[code] = 1
        _graph_lut_cache[key] = lut
    return _graph_lut_cache[key]


def graph_occurrence_count(adjacency: np.ndarray, pattern: graphs.UGraph) -> int:
    """Exact induced-subgraph count of the pattern, vectorized."""
    k = pattern.n
    n = adjacency.shape[0]
    subs = _subsets(n, k)
    pairs = _pair_bits(k)
    npairs = len(pairs)
    codes = np.zeros(len(subs), dtype=np.int32)
    for t, (x, y) in enumerate(pairs):
        bits = adjacency[subs[:, x], subs[:, y]].astype(np.int32)
        codes |= bits << (npairs - 1 - t)
    return int(_graph_pattern_lut(pattern)[codes].sum())


def _density_of_snapshot(
    snapshot, pattern, instance: str, n: int, aux: np.random.Generator | None
) -> float:
    if instance == "perm":
        k = len(pattern)
        if k <= 4:
            return perm_occurrence_count(snapshot, pattern) / comb(n, k)
        arr = np.asarray(snapshot, dtype=np.int32)
        idx = aux.integers(0, n, size=(SUBSAMPLE_COUNT, k))
        distinct = (np.diff(np.sort(idx, axis=1), axis=1) > 0).all(axis=1)
        idx = np.sort(idx[distinct], axis=1)
        vals = arr[idx]
        positions = [pattern.index(r) for r in range(1, k + 1)]
        mask = np.ones(len(vals), dtype=bool)
        for lo, hi in zip(positions, positions[1:]):
            mask &= vals[:, lo] < vals[:, hi]
        return float(np.count_nonzero(mask)) / max(len(vals), 1)
    k = pattern.n
    if k <= 4:
        return graph_occurrence_count(snapshot, pattern) / comb(n, k)
    idx = aux.integers(0, n, size=(SUBSAMPLE_COUNT, k))
    distinct = (np.diff(np.sort(idx, axis=1), axis=1) > 0).all(axis=1)
    idx = np.sort(idx[distinct], axis=1)
    pairs = _pair_bits(k)
    npairs = len(pairs)
    codes = np.zeros(len(idx), dtype=np.int32)
    for t, (x, y) in enumerate(pairs):
        codes |= snapshot[idx[:, x], idx[:, y]].astype(np.int32) << (
            npairs - 1 - t
        )
    lut = _graph_pattern_lut(pattern)
    return float(lut[codes].sum()) / max(len(idx), 1)


def _pattern_size(pattern, instance: str) -> int:
    return len(pattern) if instance == "perm" else pattern.n


def _trajectory_densities(index: int, config: SimConfig, pattern) -> np.ndarray:
    budgets = [step_budget(config.n, t) for t in config.t_grid]
    rng, aux_seed = _trajectory_rng(config, index)
    k = _pattern_size(pattern, config.instance)
    aux = np.random.Generator(np.random.PCG64(aux_seed)) if k >= 5 else None
    out = np.empty(len(budgets))
    if config.instance == "perm":
        state = _initial_perm(config, rng)
        done = 0
        for slot, budget in enumerate(budgets):
            for _ in range(budget - done):
                _perm_step(state, config.n, config.p, rng)
            done = budget
            out[slot] = _density_of_snapshot(state, pattern, "perm", config.n, aux)
    else:
        buf = _initial_graph(config, rng)
        done = 0
        view = buf[: config.n, : config.n]
        for slot, budget in enumerate(budgets):
            for _ in range(budget - done):
                _graph_step(buf, config.n, config.p, rng)
            done = budget
            out[slot] = _density_of_snapshot(view, pattern, "graph", config.n, aux)
    return out


@dataclass(frozen=True)
class DensityCurve:
    instance: str
    n: int
    p: Fraction
    pattern: str
    t: tuple[float, ...]
    estimates: tuple[float, ...]
    stderrs: tuple[float, ...]
    predictions: tuple[float, ...]
    trajectories: int
    master_seed: int


def _initial_density_expectation(config: SimConfig, pattern) -> float:
    """Exact or known E[d_pattern(X_0)] for the prediction column."""
    k = _pattern_size(pattern, config.instance)
    if config.initial == "uniform":
        if config.instance == "perm":
            return 1 / math.factorial(k)
        labeled = sum(
            1
            for code in range(1 << (k * (k - 1) // 2))
            if graphs._canonical_bits(k, code) == pattern.bits
        )
        return labeled / 2 ** (k * (k - 1) // 2)
    if config.initial == "stationary":
        return float(_stationary_mass(config, pattern))
    rng = SplitMix64(0)
    if config.instance == "perm":
        state = _initial_perm(config, rng)
        return perm_occurrence_count(state, pattern) / comb(config.n, k)
    buf = _initial_graph(config, rng)
    return graph_occurrence_count(buf[: config.n, : config.n], pattern) / comb(
        config.n, k
    )


def _stationary_mass(config: SimConfig, pattern) -> Fraction:
    k = _pattern_size(pattern, config.instance)
    if config.instance == "perm":
        spec = permutations.chain(config.p, max_level=max(k, 2))
        encoding = permutations.format_permutation(pattern)
    else:
        spec = graphs.chain(config.p, max_level=max(k, 2))
        encoding = pattern.encode()
    states = kernels.level_states(spec, k)
    return kernels.stationary(spec, k)[states.index(encoding)]


def _core_size(pattern, instance: str) -> int:
    if instance == "perm":
        return len(permutations.nonseparable_core(pattern))
    return graphs.twin_free_core(pattern).n


def _predictions(
    config: SimConfig, pattern, t_grid: Sequence[float], first_estimate: float
) -> tuple[float, ...]:
    k = _pattern_size(pattern, config.instance)
    mass = float(_stationary_mass(config, pattern))
    if k == 2:
        d0 = _initial_density_expectation(config, pattern)
        return tuple(
            mass + math.exp(-2 * t) * (d0 - mass) for t in t_grid
        )
    j = _core_size(pattern, config.instance)
    rate = j * (j - 1)
    t0 = t_grid[0]
    amplitude = first_estimate - mass
    return tuple(
        mass + amplitude * math.exp(-rate * (t - t0)) for t in t_grid
    )


def estimate_density_curve(
    config: SimConfig, pattern, workers: int = 1
) -> DensityCurve:
    """Mean and standard error of the pattern density along the time grid.

    The prediction column carries the exact exponential relaxation
    M + e^{-2t}(d(X_0) - M) for size-2 patterns, and for larger patterns a
    decay envelope M + A e^{-j(j-1)(t - t_0)} with j the core size,
    anchored at the first grid point.
    """
    if config.instance == "perm" and isinstance(pattern, str):
        pattern = permutations.parse_permutation(pattern)
    if config.instance == "graph" and isinstance(pattern, str):
        pattern = graphs.parse_graph(pattern)
    if _pattern_size(pattern, config.instance) > config.n:
        raise ValueError("pattern is larger than the simulated objects")
    worker = partial(_trajectory_densities, config=config, pattern=pattern)
    indices = range(config.trajectories)
    if workers > 1:
        with Pool(workers) as pool:
            rows = pool.map(worker, indices)
    else:
        rows = [worker(i) for i in indices]
    stacked = np.vstack(rows)
    estimates = stacked.mean(axis=0)
    if config.trajectories > 1:
        stderrs = stacked.std(axis=0, ddof=1) / math.sqrt(config.trajectories)
    else:
        stderrs = np.zeros_like(estimates)
    predictions = _predictions(config, pattern, config.t_grid, estimates[0])
    pattern_text = (
        permutations.format_permutation(pattern)
        if config.instance == "perm"
        else pattern.encode()
    )
    return DensityCurve(
        config.instance,
        config.n,
        config.p,
        pattern_text,
        config.t_grid,
        tuple(float(v) for v in estimates),
        tuple(float(v) for v in stderrs),
        predictions,
        config.trajectories,
        config.master_seed,
    )


def write_pgm(path: str, image: np.ndarray) -> None:
    """Binary 8-bit PGM; image entries are gray levels 0..255."""
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(image.astype(np.uint8).tobytes())


def _frame_image(snapshot, instance: str, n: int) -> np.ndarray:
    if instance == "perm":
        img = np.full((n, n), 255, dtype=np.uint8)
        for i, v in enumerate(snapshot):
            img[i, v - 1] = 0
        return img
    return (255 * (1 - snapshot)).astype(np.uint8)


def emit_frames(config: SimConfig, steps: Sequence[int], out_dir: str) -> list[str]:
    """One square PGM per requested step count, from trajectory 0.

    Permutations are drawn with position i on row i-1 (top row first) and
    a dark pixel in column sigma(i)-1, so the identity is the main
    diagonal; graphs are drawn as the adjacency matrix of the trajectory's
    current labeling, dark pixels marking edges.
    """
    steps = list(steps)
    if any(s < 0 for s in steps) or any(
        b <= a for a, b in zip(steps, steps[1:])
    ):
        raise ValueError("steps must be nonnegative and increasing")
    os.makedirs(out_dir, exist_ok=True)
    rng, _ = _trajectory_rng(config, 0)
    filenames = []
    if config.instance == "perm":
        state = _initial_perm(config, rng)
    else:
        buf = _initial_graph(config, rng)
        state = buf[: config.n, : config.n]
    done = 0
    for idx, target in enumerate(steps):
        for _ in range(target - done):
            if config.instance == "perm":
                _perm_step(state, config.n, config.p, rng)
            else:
                _graph_step(buf, config.n, config.p, rng)
        done = target
        name = f"frame_{idx:06d}.pgm"
        write_pgm(
            os.path.join(out_dir, name),
            _frame_image(state, config.instance, config.n),
        )
        filenames.append(name)
    return filenames


def chi_square_statistic(
    observed: dict[str, int], expected: dict[str, Fraction], total: int
) -> tuple[float, int]:
    """Pearson statistic against exact cell probabilities.

    Returns (statistic, degrees of freedom); observations in zero-mass
    cells yield an infinite statistic.
    """
    support = {s for s, q in expected.items() if q > 0}
    if any(count and s not in support for s, count in observed.items()):
        return math.inf, max(len(support) - 1, 0)
    stat = 0.0
    for s in support:
        expect = float(expected[s]) * total
        diff = observed.get(s, 0) - expect
        stat += diff * diff / expect
    return stat, len(support) - 1
