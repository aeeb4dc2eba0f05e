"""Node profiles and per-profile SIS rates."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .graph import Graph


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Profile:
    beta: float
    delta: float

    def __post_init__(self):
        for name in ("beta", "delta"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ProfileError(f"{name}={v} outside (0, 1]")


@dataclass(frozen=True)
class ProfileParams:
    """Infection (beta) and healing (delta) rates, one record per profile id."""

    profiles: tuple[Profile, ...]

    def __post_init__(self):
        if not self.profiles:
            raise ProfileError("at least one profile required")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "ProfileParams":
        """From ``[(beta, delta), ...]``."""
        return cls(tuple(Profile(float(b), float(d)) for b, d in pairs))

    @classmethod
    def uniform(cls, beta: float, delta: float, k: int = 1) -> "ProfileParams":
        return cls.from_pairs([(beta, delta)] * k)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProfileParams":
        try:
            return cls.from_pairs([(p["beta"], p["delta"]) for p in data["profiles"]])
        except (KeyError, TypeError) as exc:
            raise ProfileError(f"malformed profile config: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "ProfileParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"profiles": [{"beta": p.beta, "delta": p.delta} for p in self.profiles]}

    @property
    def k(self) -> int:
        return len(self.profiles)

    @property
    def beta(self) -> np.ndarray:
        return np.array([p.beta for p in self.profiles])

    @property
    def delta(self) -> np.ndarray:
        return np.array([p.delta for p in self.profiles])

    def __getitem__(self, i: int) -> Profile:
        return self.profiles[i]

    def __len__(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True, eq=False)
class ProfileMap:
    """Per-node profile id in ``0..k-1``."""

    assignment: np.ndarray
    k: int

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 1 or a.size == 0:
            raise ProfileError("assignment must be a non-empty 1-d array")
        if self.k < 1 or a.min() < 0 or a.max() >= self.k:
            raise ProfileError(f"profile ids must lie in 0..{self.k - 1}")
        empty = np.flatnonzero(self.sizes == 0)
        if empty.size:
            warnings.warn(f"profiles {empty.tolist()} have no nodes", stacklevel=3)

    @property
    def node_count(self) -> int:
        return len(self.assignment)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    """Diagonals of the healing matrix (``delta``) and infection matrix (``beta``)."""

    delta: np.ndarray
    beta: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        """beta / delta per node: the diagonal of inv(Delta) @ B."""
        return self.beta / self.delta


def assign_random_split(g: Graph, k: int, seed=None) -> ProfileMap:
    """Random partition into ``k`` profiles whose sizes differ by at most one."""
    if k < 1:
        raise ProfileError("k must be >= 1")
    if k > g.node_count:
        raise ProfileError(f"k={k} exceeds node count {g.node_count}")
    perm = np.random.default_rng(seed).permutation(g.node_count)
    assignment = np.empty(g.node_count, dtype=np.int64)
    assignment[perm] = np.arange(g.node_count) % k
    return ProfileMap(assignment, k)


def read_attribute_csv(path) -> dict[int, float]:
    """``node_id,value`` rows; blank or non-numeric values count as missing."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if len(row) < 2 or row[0].strip().startswith("#"):
                continue
            try:
                node = int(row[0])
            except ValueError:
                continue  # header
            try:
                out[node] = float(row[1])
            except ValueError:
                pass
    return out


def assign_by_attribute(g: Graph, attr: Union[Mapping[int, float], str, Path],
                        bins: Sequence[float]) -> tuple[Graph, ProfileMap]:
    """Bin nodes by an attribute, dropping nodes without one.

    ``bins`` are strictly increasing thresholds; a value ``v`` lands in profile
    ``#{t in bins : t <= v}``, so there are ``len(bins) + 1`` profiles. Keys
    of ``attr`` are original node ids. Returns the induced subgraph on the
    retained nodes together with its profile map.
    """
    if not isinstance(attr, Mapping):
        attr = read_attribute_csv(attr)
    bins = np.asarray(bins, dtype=float)
    if bins.size and np.any(np.diff(bins) <= 0):
        raise ProfileError("bins must be strictly increasing")
    orig = g.original_ids if g.original_ids is not None else np.arange(g.node_count)
    keep = np.array([int(o) in attr for o in orig], dtype=bool)
    if not keep.any():
        raise ProfileError("no node has an attribute value")
    sub = g.subgraph(np.flatnonzero(keep)) if not keep.all() else g
    sub_orig = sub.original_ids if sub.original_ids is not None else np.arange(sub.node_count)
    values = np.array([attr[int(o)] for o in sub_orig])
    assignment = np.searchsorted(bins, values, side="right").astype(np.int64)
    return sub, ProfileMap(assignment, len(bins) + 1)


def build_matrices(pm: ProfileMap, params: ProfileParams) -> SystemMatrices:
    if pm.k > params.k:
        raise ProfileError(f"profile map uses {pm.k} profiles, params define {params.k}")
    return SystemMatrices(params.delta[pm.assignment], params.beta[pm.assignment])
