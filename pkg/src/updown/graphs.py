"""Unlabeled simple graphs as chain states.

A UGraph stores the lexicographically minimal upper-triangle adjacency
bitstring over all vertex relabelings (row-major; bit order (1,2), (1,3),
..., (2,3), ...), so isomorphic inputs compare equal.  Canonicalization is
an exhaustive minimum over all n! relabelings, evaluated as one vectorized
pass; it is capped at n <= 9 vertices, which covers every exact
computation here.  Set UPDOWN_CACHE_DIR to persist the memo table between
runs.

Chain dynamics: the up-step duplicates a uniformly chosen vertex (the copy
receives the same neighborhood) and joins the pair with probability 1 - p;
the down-step deletes a uniformly chosen vertex.
"""
from __future__ import annotations

import atexit
import itertools
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable

import numpy as np

from .rng import SplitMix64

_CANON_CAP = 9
_CACHE_ENV = "UPDOWN_CACHE_DIR"
_CACHE_FILENAME = "canonical_forms.json"

_canon_cache: dict[tuple[int, int], int] = {}
_perm_arrays: dict[int, np.ndarray] = {}
_disk_state = {"loaded": False, "dirty": False, "registered": False}


@dataclass(frozen=True, order=True)
class UGraph:
    """Canonical unlabeled simple graph on n vertices."""

    n: int
    bits: int

    @property
    def bitstring(self) -> str:
        k = self.n * (self.n - 1) // 2
        return format(self.bits, f"0{k}b") if k else ""

    def encode(self) -> str:
        return f"{self.n}:{self.bitstring}"

    def adjacency(self) -> np.ndarray:
        return _adjacency(self.n, self.bits)

    def edges(self) -> list[tuple[int, int]]:
        """Edge list of the canonical labeling, 1-based vertices."""
        a = self.adjacency()
        return [
            (i + 1, j + 1)
            for i in range(self.n)
            for j in range(i + 1, self.n)
            if a[i, j]
        ]


def _adjacency(n: int, bits: int) -> np.ndarray:
    k = n * (n - 1) // 2
    a = np.zeros((n, n), dtype=np.uint8)
    if k:
        flat = np.array(
            [(bits >> (k - 1 - t)) & 1 for t in range(k)], dtype=np.uint8
        )
        iu = np.triu_indices(n, 1)
        a[iu] = flat
        a |= a.T
    return a


def _bits_of(a: np.ndarray) -> int:
    n = a.shape[0]
    out = 0
    for i in range(n):
        for j in range(i + 1, n):
            out = (out << 1) | int(a[i, j])
    return out


def _relabelings(n: int) -> np.ndarray:
    if n not in _perm_arrays:
        _perm_arrays[n] = np.array(
            list(itertools.permutations(range(n))), dtype=np.intp
        )
    return _perm_arrays[n]


def _cache_path() -> str | None:
    root = os.environ.get(_CACHE_ENV)
    return os.path.join(root, _CACHE_FILENAME) if root else None


def _load_disk_cache() -> None:
    _disk_state["loaded"] = True
    path = _cache_path()
    if not path or not os.path.exists(path):
        return
    try:
        with open(path, encoding="utf-8") as fh:
            stored = json.load(fh)
    except (OSError, ValueError):
        return
    for key, value in stored.items():
        n_text, _, bits_text = key.partition(":")
        _canon_cache[(int(n_text), int(bits_text))] = int(value)


def _flush_disk_cache() -> None:
    path = _cache_path()
    if not path or not _disk_state["dirty"]:
        return
    os.makedirs(os.path.dirname(path), exist_ok=True)
    payload = {f"{n}:{bits}": canon for (n, bits), canon in _canon_cache.items()}
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)
    _disk_state["dirty"] = False


def _canonical_bits(n: int, bits: int) -> int:
    if n > _CANON_CAP:
        raise ValueError(f"canonicalization is capped at {_CANON_CAP} vertices")
    if n <= 2:
        return bits
    if not _disk_state["loaded"]:
        _load_disk_cache()
    key = (n, bits)
    cached = _canon_cache.get(key)
    if cached is not None:
        return cached
    a = _adjacency(n, bits)
    perms = _relabelings(n)
    relabeled = a[perms[:, :, None], perms[:, None, :]]
    iu = np.triu_indices(n, 1)
    rows = relabeled[:, iu[0], iu[1]].astype(np.uint64)
    k = n * (n - 1) // 2
    weights = (np.uint64(1) << np.arange(k - 1, -1, -1, dtype=np.uint64))
    best = int((rows @ weights).min())
    _canon_cache[key] = best
    _disk_state["dirty"] = True
    if _cache_path() and not _disk_state["registered"]:
        _disk_state["registered"] = True
        atexit.register(_flush_disk_cache)
    return best


def canonical_form(adjacency) -> UGraph:
    """Canonicalize a labeled adjacency matrix (list of lists or array)."""
    a = np.asarray(adjacency, dtype=np.uint8)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if np.any(a != a.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(a)):
        raise ValueError("self-loops are not allowed")
    n = a.shape[0]
    return UGraph(n, _canonical_bits(n, _bits_of(a)))


def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> UGraph:
    """Graph from 0-based vertex pairs."""
    a = np.zeros((n, n), dtype=np.uint8)
    for i, j in edges:
        if i == j:
            raise ValueError("self-loops are not allowed")
        a[i, j] = a[j, i] = 1
    return canonical_form(a)


def parse_graph(text: str) -> UGraph:
    """Parse "n:bitstring", edge-list JSON {"n": ..., "edges": [[i,j],...]},
    or a conventional name (Kn, Pn, Cn, En for empty).

    JSON edge lists use 1-based vertices, matching the operation interfaces.
    """
    text = text.strip()
    named = _named_graph(text)
    if named is not None:
        return named
    if text.startswith("{"):
        data = json.loads(text)
        return from_edges(
            int(data["n"]), [(i - 1, j - 1) for i, j in data["edges"]]
        )
    n_text, sep, bits_text = text.partition(":")
    if not sep:
        raise ValueError(f"not a graph encoding: {text!r}")
    n = int(n_text)
    k = n * (n - 1) // 2
    if len(bits_text) != k or (bits_text and set(bits_text) - {"0", "1"}):
        raise ValueError(f"bitstring must have {k} binary digits: {text!r}")
    bits = int(bits_text, 2) if bits_text else 0
    return UGraph(n, _canonical_bits(n, bits))


def _named_graph(text: str) -> UGraph | None:
    if len(text) < 2 or text[0] not in "KPCE" or not text[1:].isdigit():
        return None
    n = int(text[1:])
    if not 1 <= n <= 9:
        return None
    kind = text[0]
    if kind == "K":
        return complete_graph(n)
    if kind == "E":
        return empty_graph(n)
    if kind == "P":
        return path_graph(n)
    if n < 3:
        return None
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def empty_graph(n: int) -> UGraph:
    return UGraph(n, 0)


def complete_graph(n: int) -> UGraph:
    k = n * (n - 1) // 2
    return UGraph(n, (1 << k) - 1)


def path_graph(n: int) -> UGraph:
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def all_graphs(n: int) -> list[UGraph]:
    """Every unlabeled graph on n vertices, sorted by canonical bitstring.

    Grown level by level: each size-(n+1) graph arises from some size-n
    graph by adding one vertex with an arbitrary neighborhood.
    """
    if n < 1:
        raise ValueError("graphs have at least one vertex")
    if n == 1:
        return [UGraph(1, 0)]
    seen: set[UGraph] = set()
    for g in all_graphs(n - 1):
        a = np.zeros((n, n), dtype=np.uint8)
        a[: n - 1, : n - 1] = g.adjacency()
        for mask in range(1 << (n - 1)):
            row = [(mask >> t) & 1 for t in range(n - 1)]
            a[n - 1, : n - 1] = row
            a[: n - 1, n - 1] = row
            seen.add(UGraph(n, _canonical_bits(n, _bits_of(a))))
    return sorted(seen)


def induced_occ(h: UGraph, g: UGraph) -> int:
    """Number of vertex subsets of g whose induced subgraph is isomorphic to h."""
    if h.n > g.n:
        return 0
    a = g.adjacency()
    count = 0
    for subset in itertools.combinations(range(g.n), h.n):
        sub = a[np.ix_(subset, subset)]
        if _canonical_bits(h.n, _bits_of(sub)) == h.bits:
            count += 1
    return count


def graph_density(h: UGraph, g: UGraph) -> Fraction:
    """induced_occ(h, g) / C(|g|, |h|)."""
    return Fraction(induced_occ(h, g), comb(g.n, h.n))


def duplicate_vertex(g: UGraph, v: int, connect: bool) -> UGraph:
    """Add a copy of vertex v (1-based) with the same neighborhood.

    The copy is adjacent to v itself exactly when ``connect``.
    """
    if not 1 <= v <= g.n:
        raise ValueError(f"vertex {v} out of range 1..{g.n}")
    n = g.n + 1
    a = np.zeros((n, n), dtype=np.uint8)
    a[: g.n, : g.n] = g.adjacency()
    a[n - 1, : g.n] = a[v - 1, : g.n]
    a[: g.n, n - 1] = a[: g.n, v - 1]
    a[n - 1, v - 1] = a[v - 1, n - 1] = 1 if connect else 0
    return UGraph(n, _canonical_bits(n, _bits_of(a)))


def delete_vertex(g: UGraph, v: int) -> UGraph:
    """Remove vertex v (1-based) and all incident edges."""
    if g.n < 2:
        raise ValueError("cannot delete from a single-vertex graph")
    if not 1 <= v <= g.n:
        raise ValueError(f"vertex {v} out of range 1..{g.n}")
    keep = [i for i in range(g.n) if i != v - 1]
    sub = g.adjacency()[np.ix_(keep, keep)]
    return UGraph(g.n - 1, _canonical_bits(g.n - 1, _bits_of(sub)))


def up_step_sample(g: UGraph, p, rng: SplitMix64) -> UGraph:
    """Duplicate a uniform vertex; join the pair with probability 1 - p."""
    v = rng.below(g.n) + 1
    return duplicate_vertex(g, v, rng.coin(1 - Fraction(p)))


def down_step_sample(g: UGraph, rng: SplitMix64) -> UGraph:
    """Delete a uniform vertex."""
    return delete_vertex(g, rng.below(g.n) + 1)


def cograph_sample(n: int, p, rng: SplitMix64) -> UGraph:
    """Random recursive cograph: n - 1 duplication steps from one vertex."""
    g = UGraph(1, 0)
    for _ in range(n - 1):
        g = up_step_sample(g, p, rng)
    return g


def is_p4_free(g: UGraph) -> bool:
    """No induced 4-vertex path; characterizes the duplication-built graphs."""
    return induced_occ(path_graph(4), g) == 0


def twin_free_core(g: UGraph) -> UGraph:
    """Fixed point of repeatedly merging twin pairs.

    Vertices u, v are twins when N(u) - {v} = N(v) - {u} (joined or not);
    merging removes one of them.  This is the graph analog of shrinking a
    permutation adjacency: a duplication step always creates a twin pair,
    so the core size is invariant under the chain's up-steps and sets the
    decay rate of the pattern's expected density.
    """
    a = g.adjacency().astype(bool)
    while a.shape[0] > 1:
        n = a.shape[0]
        twins = None
        for i in range(n):
            for j in range(i + 1, n):
                ni = a[i].copy()
                nj = a[j].copy()
                ni[j] = nj[i] = False
                ni[i] = nj[j] = False
                if np.array_equal(ni, nj):
                    twins = j
                    break
            if twins is not None:
                break
        if twins is None:
            break
        keep = [t for t in range(n) if t != twins]
        a = a[np.ix_(keep, keep)]
    return canonical_form(a.astype(np.uint8))


def chain(p, max_level: int = 6):
    """ChainSpec for the vertex-duplication chain on unlabeled graphs."""
    from . import kernels

    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    def states(n: int) -> tuple[str, ...]:
        return tuple(g.encode() for g in all_graphs(n))

    def up_row(state: str) -> dict[str, Fraction]:
        g = parse_graph(state)
        row: dict[str, Fraction] = {}
        for v in range(1, g.n + 1):
            for connect, weight in ((True, 1 - p), (False, p)):
                target = duplicate_vertex(g, v, connect).encode()
                row[target] = row.get(target, Fraction(0)) + weight / g.n
        return {s: w for s, w in row.items() if w}

    def down_row(state: str) -> dict[str, Fraction]:
        g = parse_graph(state)
        row: dict[str, Fraction] = {}
        for v in range(1, g.n + 1):
            target = delete_vertex(g, v).encode()
            row[target] = row.get(target, Fraction(0)) + Fraction(1, g.n)
        return row

    def sample_up(state: str, rng: SplitMix64) -> str:
        return up_step_sample(parse_graph(state), p, rng).encode()

    def sample_down(state: str, rng: SplitMix64) -> str:
        return down_step_sample(parse_graph(state), rng).encode()

    return kernels.ChainSpec(
        name="graph",
        p=p,
        max_exact_level=max_level,
        states=states,
        up_row=up_row,
        down_row=down_row,
        sample_up=sample_up,
        sample_down=sample_down,
    )
