"""Undirected simple graphs: construction, edge-list ingestion, generators, degrees.

Graphs are stored as a canonical edge array (``u < v``, lexicographically
sorted) together with CSR neighbour lists. Node ids are always dense
``0..node_count-1``; loaders keep the original ids in ``original_ids``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

if TYPE_CHECKING:
    from .profiles import ProfileMap

logger = logging.getLogger(__name__)


class GraphError(ValueError):
    """Invalid graph input or infeasible generator request."""


class EdgeListError(GraphError):
    """Malformed edge-list file."""

    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph on dense node ids."""

    node_count: int
    edges: np.ndarray  # (m, 2) int64, u < v, sorted
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    original_ids: Optional[np.ndarray] = field(default=None, repr=False)
    name: str = ""

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable, original_ids=None, name: str = "") -> "Graph":
        """Build a graph, dropping self-loops and collapsing duplicate/reversed pairs."""
        node_count = int(node_count)
        if node_count < 1:
            raise GraphError("node_count must be positive")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= node_count):
            raise GraphError(f"edge endpoint outside 0..{node_count - 1}")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0) if arr.size else np.empty((0, 2), dtype=np.int64)

        heads = np.concatenate([arr[:, 0], arr[:, 1]])
        tails = np.concatenate([arr[:, 1], arr[:, 0]])
        order = np.lexsort((tails, heads))
        heads, tails = heads[order], tails[order]
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(heads, minlength=node_count), out=indptr[1:])

        if original_ids is not None:
            original_ids = np.asarray(original_ids)
            if len(original_ids) != node_count:
                raise GraphError("original_ids length must equal node_count")
        return cls(node_count, arr, indptr, tails.astype(np.int64), original_ids, name)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def is_complete(self) -> bool:
        n = self.node_count
        return self.edge_count == n * (n - 1) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @cached_property
    def A(self) -> sp.csr_matrix:
        """Sparse symmetric 0/1 adjacency matrix (float64, built once)."""
        return self.adjacency()

    def adjacency(self, dtype=np.float64) -> sp.csr_matrix:
        n = self.node_count
        data = np.ones(len(self.indices), dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def components(self) -> tuple[int, np.ndarray]:
        """Number of connected components and per-node component label."""
        return connected_components(self.A, directed=False)

    def is_connected(self) -> bool:
        return self.components()[0] == 1

    def largest_component(self) -> np.ndarray:
        """Sorted node ids of the largest connected component (ties: lowest label)."""
        _, labels = self.components()
        sizes = np.bincount(labels)
        return np.flatnonzero(labels == np.argmax(sizes))

    def subgraph(self, nodes) -> "Graph":
        """Induced subgraph on ``nodes``, relabelled densely in sorted order."""
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        if nodes.size == 0:
            raise GraphError("empty node set")
        remap = np.full(self.node_count, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        e = remap[self.edges]
        e = e[(e >= 0).all(axis=1)]
        orig = self.original_ids[nodes] if self.original_ids is not None else nodes
        return Graph.from_edges(len(nodes), e, original_ids=orig, name=self.name)

    def remap_table(self) -> np.ndarray:
        """``(original_id, dense_id)`` rows."""
        orig = self.original_ids if self.original_ids is not None else np.arange(self.node_count)
        return np.column_stack([orig, np.arange(self.node_count)])

    def write_remap_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["original_id", "dense_id"])
            w.writerows(self.remap_table().tolist())

    def write_snap(self, path, header: Iterable[str] = ()) -> None:
        """Write a SNAP-style edge list (one ``u v`` pair per undirected edge)."""
        with open(path, "w") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            fh.write(f"# Nodes: {self.node_count} Edges: {self.edge_count}\n")
            np.savetxt(fh, self.edges, fmt="%d", delimiter=" ")


@dataclass(frozen=True, eq=False)
class DegreeProfile:
    """Total and per-profile degree of every node.

    ``d_by_profile[i, k]`` counts neighbours of ``i`` that belong to profile ``k``.
    """

    d: np.ndarray
    d_by_profile: np.ndarray
    profile: np.ndarray


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def _parse_pairs(path: Path, fmt: str) -> list[tuple[int, int]]:
    pairs = []
    seen_data = False
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = [t.strip() for t in line.split(",")] if fmt == "csv" else line.split()
            if len(tokens) != 2:
                raise EdgeListError(path, lineno, f"expected two tokens, got {len(tokens)}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                if fmt == "csv" and not seen_data:
                    seen_data = True  # optional src,dst header
                    continue
                raise EdgeListError(path, lineno, f"non-integer token in {line!r}") from None
            seen_data = True
            pairs.append((u, v))
    return pairs


def load_edge_list(path, format: str = "snap") -> Graph:
    """Read an undirected graph from a SNAP or CSV edge list.

    Reversed duplicates are collapsed and self-loops dropped. Nodes are the
    endpoints of the remaining edges, remapped to dense ids in increasing
    order of their original id; the mapping is kept in ``Graph.original_ids``.
    Disconnected inputs are accepted but logged.
    """
    path = Path(path)
    if format not in ("snap", "csv"):
        raise GraphError(f"unknown edge-list format {format!r}")
    if not path.exists():
        raise FileNotFoundError(path)
    pairs = np.asarray(_parse_pairs(path, format), dtype=np.int64).reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if len(pairs) == 0:
        raise GraphError(f"{path}: no edges after dropping self-loops")
    original, dense = np.unique(pairs, return_inverse=True)
    g = Graph.from_edges(len(original), dense.reshape(-1, 2), original_ids=original, name=path.stem)
    ncomp, _ = g.components()
    if ncomp > 1:
        logger.warning("%s: graph has %d connected components", path, ncomp)
    return g


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_clique(n: int) -> Graph:
    if n < 2:
        raise GraphError("clique needs n >= 2")
    iu, ju = np.triu_indices(n, k=1)
    return Graph.from_edges(n, np.column_stack([iu, ju]), name=f"clique-{n}")


def gen_erdos_renyi(n: int, p: float, seed=None) -> Graph:
    """G(n, p) random graph."""
    if n < 2:
        raise GraphError("need n >= 2")
    if not 0.0 <= p <= 1.0:
        raise GraphError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n - 1):
        hit = np.flatnonzero(rng.random(n - i - 1) < p) + i + 1
        rows.append(np.column_stack([np.full(len(hit), i), hit]))
    return Graph.from_edges(n, np.concatenate(rows), name=f"er-{n}-{p}")


def powerlaw_degree_sequence(n: int, exponent: float, max_degree: int, rng) -> np.ndarray:
    """i.i.d. degrees with P(k) proportional to k**-exponent on 1..max_degree, even sum."""
    ks = np.arange(1, max_degree + 1)
    w = ks.astype(float) ** -exponent
    deg = rng.choice(ks, size=n, p=w / w.sum())
    if deg.sum() % 2:
        # fix parity on a node that can still move down (or up) by one
        i = int(rng.integers(n))
        deg[i] += -1 if deg[i] > 1 else 1
    return deg


def _bad_edges(e: np.ndarray) -> np.ndarray:
    """Indices of self-loops and of every repeat of an already-seen pair."""
    canon = np.sort(e, axis=1)
    bad = canon[:, 0] == canon[:, 1]
    _, first = np.unique(canon, axis=0, return_index=True)
    dup = np.ones(len(e), dtype=bool)
    dup[first] = False
    return np.flatnonzero(bad | dup)


def configuration_model(deg: np.ndarray, rng, max_passes: int = 100) -> Optional[np.ndarray]:
    """Random stub matching; self-loops/multi-edges repaired by degree-preserving swaps.

    Returns ``None`` when defects survive ``max_passes`` rewiring passes.
    """
    stubs = np.repeat(np.arange(len(deg)), deg)
    rng.shuffle(stubs)
    e = stubs.reshape(-1, 2).copy()
    m = len(e)
    for _ in range(max_passes):
        bad = _bad_edges(e)
        if bad.size == 0:
            return e
        if m < 2:
            return None
        for b in bad:
            o = int(rng.integers(m - 1))
            o += o >= b
            if rng.random() < 0.5:
                e[b, 1], e[o, 0] = e[o, 0], e[b, 1]
            else:
                e[b, 1], e[o, 1] = e[o, 1], e[b, 1]
    return e if _bad_edges(e).size == 0 else None


def gen_powerlaw(n: int, exponent: float, scale: Optional[float] = None, seed=None,
                 max_attempts: int = 20) -> Graph:
    """Configuration-model graph on an i.i.d. power-law degree sequence.

    Args:
        n: number of nodes (>= 2).
        exponent: power-law exponent (> 1).
        scale: largest admissible degree before capping at ``n - 1``
            (the amplitude of a PLOD-style generator). ``None`` means ``n - 1``.
        seed: anything accepted by ``numpy.random.default_rng``.
        max_attempts: fresh degree sequences tried before giving up.
    """
    if n < 2:
        raise GraphError("need n >= 2")
    if exponent <= 1:
        raise GraphError("exponent must be > 1")
    kmax = n - 1 if scale is None else max(1, min(n - 1, int(math.floor(scale))))
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        deg = powerlaw_degree_sequence(n, exponent, kmax, rng)
        if deg.max() > n - 1:
            continue
        e = configuration_model(deg, rng)
        if e is not None:
            return Graph.from_edges(n, e, name=f"powerlaw-{n}-{exponent}")
    raise GraphError(f"could not realise a simple power-law graph after {max_attempts} attempts")


# ---------------------------------------------------------------------------
# degrees
# ---------------------------------------------------------------------------

def degrees(g: Graph, pm: "ProfileMap") -> DegreeProfile:
    assignment = np.asarray(pm.assignment)
    if len(assignment) != g.node_count:
        raise GraphError(f"profile map covers {len(assignment)} nodes, graph has {g.node_count}")
    onehot = np.zeros((g.node_count, pm.k))
    onehot[np.arange(g.node_count), assignment] = 1.0
    by_profile = np.rint(g.A @ onehot).astype(np.int64)
    return DegreeProfile(g.degree.astype(np.int64), by_profile, assignment.copy())
