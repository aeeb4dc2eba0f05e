"""Discrete-time stochastic SIS with per-profile rates.

Each round reads the state at round start. A susceptible node ``j`` with
``m_j`` infected neighbours becomes infected with probability
``1 - (1 - beta_j)**m_j``; an infected node heals with probability
``delta_j``. Both draws use one uniform per node per round: infection when
``u < p_inf``, healing when ``u >= 1 - delta``. Sharing the uniform stream
across parameter settings gives a common-random-numbers coupling that is
monotone in beta whenever ``p_inf + delta <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .graph import Graph
from .profiles import ProfileMap, ProfileParams, build_matrices


class SimulationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedSpec:
    """How the initial infection is chosen; exactly one field is set."""

    top_degree_fraction: Optional[float] = None
    bottom_degree_fraction: Optional[float] = None
    fixed_per_profile: Optional[int] = None
    explicit: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        given = [f for f in ("top_degree_fraction", "bottom_degree_fraction", "fixed_per_profile", "explicit")
                 if getattr(self, f) is not None]
        if len(given) != 1:
            raise SimulationError(f"exactly one seeding strategy required, got {given}")
        for f in ("top_degree_fraction", "bottom_degree_fraction"):
            v = getattr(self, f)
            if v is not None and not 0 < v <= 1:
                raise SimulationError(f"{f}={v} outside (0, 1]")
        if self.fixed_per_profile is not None and self.fixed_per_profile < 1:
            raise SimulationError("fixed_per_profile must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "SeedSpec":
        """``top:0.05``, ``bottom:0.05``, ``per-profile:10`` or ``nodes:1,2,3``."""
        kind, _, arg = text.partition(":")
        if kind == "top":
            return cls(top_degree_fraction=float(arg))
        if kind == "bottom":
            return cls(bottom_degree_fraction=float(arg))
        if kind == "per-profile":
            return cls(fixed_per_profile=int(arg))
        if kind == "nodes":
            return cls(explicit=tuple(int(t) for t in arg.split(",") if t))
        raise SimulationError(f"unknown seeding spec {text!r}")

    def describe(self) -> str:
        if self.top_degree_fraction is not None:
            return f"top:{self.top_degree_fraction}"
        if self.bottom_degree_fraction is not None:
            return f"bottom:{self.bottom_degree_fraction}"
        if self.fixed_per_profile is not None:
            return f"per-profile:{self.fixed_per_profile}"
        return "nodes:" + ",".join(map(str, self.explicit))


def seed_infection(g: Graph, pm: ProfileMap, spec: SeedSpec, rng=None) -> np.ndarray:
    """Sorted node ids of the initial infection.

    Degree fractions take ``ceil(fraction * n)`` nodes, ranking by degree and
    breaking ties by node id.
    """
    n = g.node_count
    if spec.explicit is not None:
        ids = np.unique(np.asarray(spec.explicit, dtype=np.int64))
        if ids.size == 0 or ids.min() < 0 or ids.max() >= n:
            raise SimulationError(f"explicit seed ids must be a non-empty subset of 0..{n - 1}")
        return ids
    if spec.fixed_per_profile is not None:
        rng = np.random.default_rng(rng)
        chosen = []
        for k in range(pm.k):
            members = pm.members(k)
            if len(members) < spec.fixed_per_profile:
                raise SimulationError(f"profile {k} has {len(members)} nodes, "
                                      f"cannot seed {spec.fixed_per_profile}")
            chosen.append(rng.choice(members, spec.fixed_per_profile, replace=False))
        return np.sort(np.concatenate(chosen))
    frac = spec.top_degree_fraction if spec.top_degree_fraction is not None else spec.bottom_degree_fraction
    count = min(n, math.ceil(frac * n - 1e-9))
    deg = g.degree
    ids = np.arange(n)
    key = -deg if spec.top_degree_fraction is not None else deg
    order = np.lexsort((ids, key))
    return np.sort(order[:count])


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------

def infection_probability(beta: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``1 - (1 - beta)**m`` evaluated without cancellation for small beta."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = -np.expm1(m * np.log1p(-beta))
    return np.where(beta >= 1.0, (m > 0).astype(float), np.where(m > 0, p, 0.0))


def infected_neighbours(g: Graph, state: np.ndarray) -> np.ndarray:
    x = state.astype(np.float64)
    if g.is_complete:
        return x.sum() - x
    return g.A @ x


def step(g: Graph, beta: np.ndarray, delta: np.ndarray, state: np.ndarray, rng=None,
         u: Optional[np.ndarray] = None) -> np.ndarray:
    """One synchronous round; ``beta``/``delta`` are per-node arrays.

    ``u`` supplies the round's uniforms directly (common random numbers);
    otherwise they are drawn from ``rng``.
    """
    if u is None:
        u = np.random.default_rng(rng).random(g.node_count)
    if not state.any():
        return state.copy()
    m = infected_neighbours(g, state)
    p_inf = infection_probability(beta, m)
    return np.where(state, u < 1.0 - delta, u < p_inf)


def step_profiles(g: Graph, pm: ProfileMap, params: ProfileParams, state: np.ndarray, rng=None) -> np.ndarray:
    sm = build_matrices(pm, params)
    return step(g, sm.beta, sm.delta, state, rng)


@dataclass(frozen=True)
class SimConfig:
    rounds: int
    seeding: SeedSpec
    replications: int = 1
    rng_seed: int = 0
    record_every: int = 1
    steady_window: float = 0.2
    steady_tolerance: float = 0.02
    batch_size: int = 4096      # replications advanced together per state matrix

    def __post_init__(self):
        if self.rounds < 1:
            raise SimulationError("rounds must be >= 1")
        if self.replications < 1:
            raise SimulationError("replications must be >= 1")
        if self.record_every < 1:
            raise SimulationError("record_every must be >= 1")
        if not 0 < self.steady_window <= 1:
            raise SimulationError("steady_window must lie in (0, 1]")
        if self.steady_tolerance < 0:
            raise SimulationError("steady_tolerance must be >= 0")
        if self.batch_size < 1:
            raise SimulationError("batch_size must be >= 1")


@dataclass(frozen=True, eq=False)
class SimTrace:
    rounds: np.ndarray          # recorded round numbers, starting at 0
    counts: np.ndarray          # (len(rounds), k) infected per profile
    final_state: np.ndarray     # bool per node after the last round
    rng_seed: int
    replication: int
    extinction_round: Optional[int]
    steady: bool
    profile_sizes: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def steady_fraction(self, window: float = 0.2) -> np.ndarray:
        """Mean infected fraction per profile over the trailing ``window`` of recorded rounds."""
        return trailing(self.counts, window).mean(axis=0) / np.maximum(self.profile_sizes, 1)


@dataclass(frozen=True, eq=False)
class Aggregate:
    rounds: np.ndarray
    mean: np.ndarray            # (T, k)
    std: np.ndarray             # (T, k)
    total_mean: np.ndarray
    total_std: np.ndarray
    replications: int
    profile_sizes: np.ndarray
    steady: bool
    window: float

    def steady_fraction(self) -> np.ndarray:
        return trailing(self.mean, self.window).mean(axis=0) / np.maximum(self.profile_sizes, 1)


@dataclass(frozen=True, eq=False)
class SimResult:
    traces: list
    aggregate: Aggregate
    seeds: np.ndarray
    config: SimConfig

    def survivors(self) -> list:
        return [t for t in self.traces if t.extinction_round is None]

    def surviving_aggregate(self) -> Optional[Aggregate]:
        """Aggregate over replications still infected at the end (quasi-stationary view)."""
        alive = self.survivors()
        return aggregate(alive, self.config) if alive else None

    def extinction_rate(self, by_round: Optional[int] = None) -> float:
        hits = [t.extinction_round is not None and (by_round is None or t.extinction_round <= by_round)
                for t in self.traces]
        return float(np.mean(hits))


def trailing(a: np.ndarray, window: float) -> np.ndarray:
    n = max(1, int(math.ceil(window * len(a))))
    return a[-n:]


def is_steady(counts: np.ndarray, sizes: np.ndarray, window: float = 0.2, tolerance: float = 0.02) -> bool:
    """Per-profile range over the trailing window is within ``tolerance`` of profile size."""
    tail = trailing(counts, window)
    spread = tail.max(axis=0) - tail.min(axis=0)
    return bool(np.all(spread <= tolerance * sizes))


def replication_seed(master: int, index: int) -> np.random.SeedSequence:
    """Independent stream for replication ``index`` derived from the master seed."""
    return np.random.SeedSequence(entropy=master, spawn_key=(index,))


def _run_batch(g: Graph, pm: ProfileMap, beta, delta, seeds, cfg: SimConfig,
               indices: Sequence[int]) -> list[SimTrace]:
    """All replications advanced together as columns of one state matrix.

    Column ``i`` consumes ``n`` uniforms per round from its own generator
    until it goes extinct, exactly as a stand-alone run of replication ``i``
    would, so traces do not depend on how replications are batched.
    """
    n, k, R = g.node_count, pm.k, len(indices)
    gens = [np.random.default_rng(replication_seed(cfg.rng_seed, i)) for i in indices]
    X = np.zeros((n, R), dtype=bool)
    X[seeds, :] = True
    onehot = np.zeros((k, n))
    onehot[pm.assignment, np.arange(n)] = 1.0

    n_rec = cfg.rounds // cfg.record_every + 1
    counts = np.zeros((n_rec, R, k), dtype=np.int64)
    counts[0] = np.rint(onehot @ X).T
    extinct = np.full(R, -1, dtype=np.int64)
    if len(seeds) == 0:
        extinct[:] = 0
    alive = np.flatnonzero(extinct < 0)
    b, d = beta[:, None], delta[:, None]
    complete = g.is_complete
    U = np.empty((n, R))
    for r in range(1, cfg.rounds + 1):
        if alive.size == 0:
            break
        Xa = X[:, alive]
        for c, i in enumerate(alive):
            U[:, c] = gens[i].random(n)
        u = U[:, :alive.size]
        xf = Xa.astype(np.float64)
        m = xf.sum(axis=0) - xf if complete else g.A @ xf
        new = np.where(Xa, u < 1.0 - d, u < infection_probability(b, m))
        X[:, alive] = new
        if r % cfg.record_every == 0:
            counts[r // cfg.record_every][alive] = np.rint(onehot @ new).T
        died = ~new.any(axis=0)
        if died.any():
            extinct[alive[died]] = r
            alive = alive[~died]

    rounds = np.arange(n_rec) * cfg.record_every
    sizes = pm.sizes
    traces = []
    for i in range(R):
        c = counts[:, i, :].copy()
        traces.append(SimTrace(rounds, c, X[:, i].copy(), cfg.rng_seed, int(indices[i]),
                               int(extinct[i]) if extinct[i] >= 0 else None,
                               is_steady(c, sizes, cfg.steady_window, cfg.steady_tolerance), sizes))
    return traces


def run(g: Graph, pm: ProfileMap, params: ProfileParams, cfg: SimConfig) -> SimResult:
    """Run ``cfg.replications`` independent replications and aggregate them.

    Replication ``i`` draws from ``SeedSequence(rng_seed, spawn_key=(i,))``
    and is reproducible on its own; the initial infection is resolved once
    and shared by all replications.
    """
    if pm.node_count != g.node_count:
        raise SimulationError("profile map does not match graph")
    sm = build_matrices(pm, params)
    seed_rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.rng_seed, spawn_key=(2**31 - 1,)))
    seeds = seed_infection(g, pm, cfg.seeding, seed_rng)
    traces = []
    for lo in range(0, cfg.replications, cfg.batch_size):
        idx = range(lo, min(lo + cfg.batch_size, cfg.replications))
        traces.extend(_run_batch(g, pm, sm.beta, sm.delta, seeds, cfg, idx))
    return SimResult(traces, aggregate(traces, cfg), seeds, cfg)


def aggregate(traces: Sequence[SimTrace], cfg: SimConfig) -> Aggregate:
    if not traces:
        raise SimulationError("no traces to aggregate")
    stack = np.stack([t.counts for t in traces]).astype(float)  # (R, T, k)
    totals = stack.sum(axis=2)
    sizes = traces[0].profile_sizes
    mean = stack.mean(axis=0)
    return Aggregate(traces[0].rounds, mean, stack.std(axis=0), totals.mean(axis=0), totals.std(axis=0),
                     len(traces), sizes, is_steady(mean, sizes, cfg.steady_window, cfg.steady_tolerance),
                     cfg.steady_window)


# ---------------------------------------------------------------------------
# comparison with the mean-field prediction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Divergence:
    empirical: np.ndarray
    meanfield: np.ndarray
    divergence: np.ndarray
    std_error: np.ndarray

    @property
    def max_divergence(self) -> float:
        return float(self.divergence.max())

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("empirical", "meanfield", "divergence", "std_error")}


def compare_to_meanfield(agg: Aggregate, mf_p: Union[np.ndarray, "object"], pm: ProfileMap,
                         require_steady: bool = True) -> Divergence:
    """Per-profile |empirical steady fraction - mean mean-field probability|.

    The standard error treats each (node, replication) pair in the trailing
    window as a Bernoulli draw with the empirical fraction.
    """
    if require_steady and not agg.steady:
        raise SimulationError("aggregate trace has not reached a steady state")
    p = getattr(mf_p, "p", mf_p)
    p = np.asarray(p, dtype=float)
    if len(p) != pm.node_count:
        raise SimulationError("mean-field state does not match profile map")
    emp = agg.steady_fraction()
    sizes = pm.sizes
    mf = np.array([p[pm.assignment == k].mean() if sizes[k] else 0.0 for k in range(pm.k)])
    se = np.sqrt(emp * (1 - emp) / np.maximum(sizes * agg.replications, 1))
    return Divergence(emp, mf, np.abs(emp - mf), se)
