"""Mean-field SIS on arbitrary graphs with per-node rates.

State ``p[i]`` is the infection probability of node ``i``; it evolves as

    dp_i/dt = -delta_i p_i + beta_i (1 - p_i) sum_j A_ji p_j

and its fixed points satisfy ``p = inv(Delta) B Q A p`` with ``Q = I - diag(p)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import DegreeProfile, Graph
from .profiles import ProfileParams, SystemMatrices
from .spectral import DEFAULT_TOL, SparseNonneg, SpectralError, spectral_abscissa_metzler, spectral_radius

logger = logging.getLogger(__name__)

CRITICAL_BAND = 1e-6
DENSE_LIMIT = 64


class MeanFieldError(RuntimeError):
    pass


class FixedPointNotConverged(MeanFieldError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"fixed-point iteration stalled after {iterations} iterations, residual {residual:.3e}")


@dataclass(frozen=True, eq=False)
class MeanFieldState:
    p: np.ndarray
    residual: Optional[float] = None
    iterations: Optional[int] = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1:
            raise ValueError("p must be a vector")
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "p", p)


def _check(g: Graph, sm: SystemMatrices, p=None):
    n = g.node_count
    if len(sm.delta) != n or len(sm.beta) != n:
        raise ValueError(f"system matrices have length {len(sm.delta)}, graph has {n} nodes")
    if p is not None and len(p) != n:
        raise ValueError(f"state has length {len(p)}, graph has {n} nodes")


def _p(st) -> np.ndarray:
    return st.p if isinstance(st, MeanFieldState) else np.asarray(st, dtype=float)


def mf_rhs(g: Graph, sm: SystemMatrices, st) -> np.ndarray:
    p = _p(st)
    _check(g, sm, p)
    return -sm.delta * p + sm.beta * (1.0 - p) * (g.A @ p)


def fixed_point_residual(g: Graph, sm: SystemMatrices, st) -> float:
    """``|p - inv(Delta) B Q A p|_inf``."""
    p = _p(st)
    return float(np.abs(p - sm.ratio * (1.0 - p) * (g.A @ p)).max())


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    final: MeanFieldState
    t_final: float
    clamp_count: int
    steady: bool
    steps: int


def default_dt(g: Graph, sm: SystemMatrices) -> float:
    dmax = float(g.degree.max()) if g.node_count else 0.0
    return min(0.05, 0.1 / max(float(sm.delta.max()), float(sm.beta.max()) * dmax))


def mf_integrate(g: Graph, sm: SystemMatrices, p0, t_end: float, dt: Optional[float] = None,
                 record_every: int = 1, stop_at_steady: bool = False, steady_tol: float = 1e-8,
                 steady_checks: int = 10, check_every: int = 10) -> Trajectory:
    """Classical RK4 on the mean-field ODE.

    Every state is clamped to [0, 1] after each step and the number of clamped
    entries is counted. A checkpoint is taken every ``check_every`` steps; the
    run is "steady" once ``|rhs|_inf < steady_tol`` at ``steady_checks``
    consecutive checkpoints, and stops there if ``stop_at_steady``.
    """
    p = _p(p0).astype(float).copy()
    _check(g, sm, p)
    if dt is None:
        dt = default_dt(g, sm)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("p0 must lie in [0, 1]")
    A, beta, delta = g.A, sm.beta, sm.delta

    def f(x):
        return -delta * x + beta * (1.0 - x) * (A @ x)

    n_steps = int(np.ceil(t_end / dt - 1e-12))
    times, states = [0.0], [p.copy()]
    clamps = 0
    calm = 0
    steady = False
    t = 0.0
    step = 0
    for step in range(1, n_steps + 1):
        h = min(dt, t_end - t)
        k1 = f(p)
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if not np.all(np.isfinite(p)):
            raise MeanFieldError(f"non-finite state at step {step} (t={t:.6g})")
        out = (p < 0) | (p > 1)
        if out.any():
            clamps += int(out.sum())
            np.clip(p, 0.0, 1.0, out=p)
        if step % record_every == 0:
            times.append(t)
            states.append(p.copy())
        if step % check_every == 0:
            calm = calm + 1 if np.abs(f(p)).max() < steady_tol else 0
            if calm >= steady_checks:
                steady = True
                if stop_at_steady:
                    break
    if times[-1] != t:
        times.append(t)
        states.append(p.copy())
    return Trajectory(np.array(times), np.array(states), MeanFieldState(p), t, clamps, steady, step)


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

def mf_fixed_point(g: Graph, sm: SystemMatrices, p0, tol: float = 1e-10, max_iter: int = 200_000,
                   damping: float = 0.5) -> MeanFieldState:
    """Damped self-consistent iteration ``p_i <- s_i / (delta_i/beta_i + s_i)``, ``s = A p``.

    The update solves the per-node fixed-point equation for ``p_i`` with the
    neighbour sum frozen. Returns once the vector residual
    ``|p - inv(Delta) B Q A p|_inf`` is at most ``tol``.
    """
    p = _p(p0).astype(float).copy()
    _check(g, sm, p)
    if np.any(p < 0) or np.any(p >= 1):
        raise ValueError("p0 entries must lie in [0, 1)")
    A, ratio = g.A, sm.ratio
    inv_ratio = 1.0 / ratio
    res = np.inf
    for it in range(max_iter + 1):
        s = A @ p
        res = float(np.abs(p - ratio * (1.0 - p) * s).max())
        if res <= tol:
            return MeanFieldState(p, res, it)
        target = s / (inv_ratio + s)
        p = (1.0 - damping) * p + damping * target
    raise FixedPointNotConverged(res, max_iter)


class MeanFieldJacobian:
    """Operator ``J(p) = -I + inv(Delta) B (I - diag(p)) A - inv(Delta) B diag(A p)``.

    Stored as a non-negative sparse part ``M = diag(ratio (1-p)) A`` and a
    positive diagonal ``D = 1 + ratio * (A p)`` so that ``J = M - diag(D)``.
    """

    def __init__(self, g: Graph, sm: SystemMatrices, p):
        p = _p(p)
        _check(g, sm, p)
        self.n = g.node_count
        self.M = SparseNonneg(sp.diags(sm.ratio * (1.0 - p)) @ g.A)
        self.D = 1.0 + sm.ratio * (g.A @ p)

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.M @ v - self.D * v

    __matmul__ = matvec

    def toarray(self) -> np.ndarray:
        if self.n > DENSE_LIMIT:
            raise MeanFieldError(f"refusing to densify a {self.n}x{self.n} Jacobian")
        return self.M.matrix.toarray() - np.diag(self.D)

    def abscissa(self, tol: float = DEFAULT_TOL, max_iter: Optional[int] = None) -> float:
        return spectral_abscissa_metzler(self.M, self.D, tol, max_iter)


def mf_jacobian(g: Graph, sm: SystemMatrices, st) -> MeanFieldJacobian:
    return MeanFieldJacobian(g, sm, st)


@dataclass(frozen=True, eq=False)
class ZeroStabilityReport:
    rho: float
    abscissa: float
    stable: Optional[bool]
    critical: bool
    irreducible: bool
    component_restricted: bool
    component_size: int
    node_count: int
    iterations: int
    pf_vector: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "abscissa": self.abscissa,
            "stable": self.stable,
            "critical": self.critical,
            "irreducible": self.irreducible,
            "component_restricted": self.component_restricted,
            "component_size": self.component_size,
            "node_count": self.node_count,
            "iterations": self.iterations,
            "formula": "rho(inv(Delta) B A) < 1  <=>  abscissa(B A - Delta) < 0",
        }


def zero_stability(g: Graph, sm: SystemMatrices, tol: float = DEFAULT_TOL,
                   max_iter: Optional[int] = None) -> ZeroStabilityReport:
    """Stability of extinction from ``rho(inv(Delta) B A)``.

    Disconnected graphs are restricted to their largest component with a
    warning. The Metzler abscissa of ``B A - Delta`` is computed as an
    independent second route and must agree in sign.
    """
    _check(g, sm)
    total = g.node_count
    nodes = np.arange(total)
    restricted = False
    if not g.is_connected():
        nodes = g.largest_component()
        warnings.warn(f"graph is disconnected; restricting to largest component "
                      f"({len(nodes)} of {g.node_count} nodes)", stacklevel=2)
        restricted = True
        sub = g.subgraph(nodes)
        sm = SystemMatrices(sm.delta[nodes], sm.beta[nodes])
        g = sub
    A = g.A
    res = spectral_radius(SparseNonneg(sp.diags(sm.ratio) @ A), tol, max_iter)
    absc = spectral_abscissa_metzler(SparseNonneg(sp.diags(sm.beta) @ A), sm.delta, tol, max_iter)
    critical = abs(res.rho - 1.0) < CRITICAL_BAND
    stable = None if critical else res.rho < 1.0
    if not critical and stable != (absc < 0):
        raise SpectralError(f"spectral routes disagree: rho={res.rho:.12g}, abscissa={absc:.3e}")
    return ZeroStabilityReport(res.rho, absc, stable, critical, True, restricted, len(nodes), total,
                               res.iterations, res.vector, nodes)


def pf_fixed_point(g: Graph, sm: SystemMatrices, tol: float = 1e-10, max_iter: int = 200_000) -> MeanFieldState:
    """Non-trivial fixed point above threshold, seeded along the Perron vector of inv(Delta) B A."""
    _check(g, sm)
    if not g.is_connected():
        raise MeanFieldError("graph is disconnected; pass g.subgraph(g.largest_component())")
    z = zero_stability(g, sm)
    if z.stable is not False:
        raise MeanFieldError(f"zero is the attractor (rho={z.rho:.6g}); no positive fixed point")
    v = z.pf_vector
    p0 = 0.5 * v / v.max()
    st = mf_fixed_point(g, sm, p0, tol=tol, max_iter=max_iter)
    if np.any(st.p <= 0):
        raise MeanFieldError("fixed point is not strictly positive")
    return st


# ---------------------------------------------------------------------------
# degree windows for two profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundsQuery:
    a: float
    b: float
    x: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.a < self.b < 1.0):
            raise ValueError(f"need 0 < a < b < 1, got a={self.a}, b={self.b}")
        if self.x is not None and not self.x > 1.0:
            raise ValueError(f"x must exceed 1, got {self.x}")


@dataclass(frozen=True)
class Window:
    lower: float
    upper: float
    quantity: str

    def contains(self, v) -> np.ndarray:
        return (self.lower < v) & (v < self.upper)

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper


@dataclass(frozen=True, eq=False)
class BoundsReport:
    mode: str
    windows: dict  # constraint name -> Window
    node_pass: np.ndarray  # (n, n_constraints) bool, True where a constraint holds or does not apply
    overall: bool
    degree_windows: dict = field(default_factory=dict)

    @property
    def failing_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.node_pass.all(axis=1))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "constraints": {k: {"lower": w.lower, "upper": w.upper, "quantity": w.quantity}
                            for k, w in self.windows.items()},
            "degree_windows": {k: {"lower": lo, "upper": hi} for k, (lo, hi) in self.degree_windows.items()},
            "nodes": int(self.node_pass.shape[0]),
            "failing_nodes": self.failing_nodes.tolist()[:100],
            "failing_count": int(self.failing_nodes.size),
            "overall": self.overall,
        }


def _two_profiles(params: ProfileParams):
    if params.k != 2:
        raise ValueError(f"degree windows need exactly two profiles, got {params.k}")


def flood_windows(params: ProfileParams, q: BoundsQuery) -> dict:
    """Per-profile window on ``(beta/delta) d(i)``, all nodes in [a, b]."""
    _two_profiles(params)
    lo = q.a / (q.b * (1 - q.a))
    hi = q.b / (q.a * (1 - q.b))
    return {f"profile_{k}": Window(lo, hi, f"beta_{k}/delta_{k} * d(i)") for k in range(2)}


def flood_bounds(dp: DegreeProfile, params: ProfileParams, q: BoundsQuery) -> BoundsReport:
    """Check each node's degree against its own profile's flood window."""
    if q.x is not None:
        raise ValueError("flood bounds take no separation factor x")
    windows = flood_windows(params, q)
    ratio = params.beta / params.delta
    degree_windows = {name: (w.lower / ratio[k], w.upper / ratio[k]) for k, (name, w) in enumerate(windows.items())}
    scaled = ratio[dp.profile] * dp.d
    node_pass = np.ones((len(dp.d), 2), dtype=bool)
    for k, w in enumerate(windows.values()):
        own = dp.profile == k
        node_pass[own, k] = w.contains(scaled[own])
    return BoundsReport("flood", windows, node_pass, bool(node_pass.all()), degree_windows)


def mixed_windows(params: ProfileParams, q: BoundsQuery) -> dict:
    """Windows on ``d_A(i)/x + d_B(i)`` with profile 0 resilient (A) and 1 susceptible (B)."""
    _two_profiles(params)
    if q.x is None:
        raise ValueError("mixed bounds need the separation factor x")
    if q.x <= q.b:
        raise ValueError(f"x={q.x} must exceed b={q.b}")
    a, b, x = q.a, q.b, q.x
    inv_a = params.delta[0] / params.beta[0]
    inv_b = params.delta[1] / params.beta[1]
    return {
        "profile_A": Window(inv_a * a / (b * (x - a)), inv_a * b / (a * (x - b)), "d_A(i)/x + d_B(i)"),
        "profile_B": Window(inv_b * a / (b * (1 - a)), inv_b * b / (a * (1 - b)), "d_A(i)/x + d_B(i)"),
    }


def mixed_bounds(dp: DegreeProfile, params: ProfileParams, q: BoundsQuery) -> BoundsReport:
    windows = mixed_windows(params, q)
    weighted = dp.d_by_profile[:, 0] / q.x + dp.d_by_profile[:, 1]
    node_pass = np.column_stack([w.contains(weighted) for w in windows.values()])
    return BoundsReport("mixed", windows, node_pass, bool(node_pass.all()),
                        {k: (w.lower, w.upper) for k, w in windows.items()})
