"""Two-profile SIS on a clique of 2N nodes: rates, Jacobian, fixed points, stability.

Profile A and profile B hold N nodes each; ``I_a``/``I_b`` count infected nodes
and evolve as

    dI_a/dt = beta_a (N - I_a)(I_a + I_b) - delta_a I_a
    dI_b/dt = beta_b (N - I_b)(I_a + I_b) - delta_b I_b

Three fixed-point families have closed forms: extinction ``(0, 0)``,
symmetric ``(cN, cN)`` and mixed ``((1-c)N, cN)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

HYPERBOLIC_EPS = 1e-12


class CliqueError(ValueError):
    pass


class NotAFixedPoint(CliqueError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        super().__init__(f"state is not a fixed point: |rhs|={residual:.3e} > tol={tol:.3e}")


def _check_rate(name, v):
    if not (0.0 < v <= 1.0):
        raise CliqueError(f"{name}={v} outside (0, 1]")


@dataclass(frozen=True)
class CliqueSystem:
    N: int
    beta_a: float
    beta_b: float
    delta_a: float
    delta_b: float

    def __post_init__(self):
        if self.N < 1:
            raise CliqueError("N must be >= 1")
        for name in ("beta_a", "beta_b", "delta_a", "delta_b"):
            _check_rate(name, getattr(self, name))


@dataclass(frozen=True)
class CliqueState:
    I_a: float
    I_b: float


@dataclass(frozen=True)
class EigenPair2:
    lambda1: complex
    lambda2: complex
    discriminant: float

    @property
    def max_real(self) -> float:
        return max(self.lambda1.real, self.lambda2.real)

    def to_dict(self) -> dict:
        def c(z):
            return {"re": z.real, "im": z.imag}
        return {"lambda1": c(self.lambda1), "lambda2": c(self.lambda2), "discriminant": self.discriminant}


@dataclass(frozen=True)
class StabilityVerdict:
    fixed_point: str
    coordinates: tuple[float, float]
    eigenvalues: EigenPair2
    stable: bool
    non_hyperbolic: bool = False
    condition_value: Optional[float] = None
    formula: str = ""
    rates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "fixed_point": self.fixed_point,
            "coordinates": list(self.coordinates),
            "eigenvalues": self.eigenvalues.to_dict(),
            "stable": self.stable,
            "non_hyperbolic": self.non_hyperbolic,
            "formula": self.formula,
        }
        if self.condition_value is not None:
            d["condition_value"] = self.condition_value
        if self.rates:
            d["rates"] = self.rates
        return d


def clique_rhs(sys: CliqueSystem, st: CliqueState) -> tuple[float, float]:
    total = st.I_a + st.I_b
    da = sys.beta_a * (sys.N - st.I_a) * total - sys.delta_a * st.I_a
    db = sys.beta_b * (sys.N - st.I_b) * total - sys.delta_b * st.I_b
    return da, db


def clique_jacobian(sys: CliqueSystem, st: CliqueState) -> np.ndarray:
    N, Ia, Ib = sys.N, st.I_a, st.I_b
    return np.array([
        [sys.beta_a * (N - 2 * Ia - Ib) - sys.delta_a, sys.beta_a * (N - Ia)],
        [sys.beta_b * (N - Ib), sys.beta_b * (N - 2 * Ib - Ia) - sys.delta_b],
    ])


def quadratic_eigenvalues(trace: float, det: float, disc: Optional[float] = None) -> EigenPair2:
    """Roots of ``lam**2 - trace*lam + det`` without cancellation.

    The larger-magnitude real root is formed first and the other one from the
    product of roots. ``disc`` overrides ``trace**2 - 4*det`` when a better
    conditioned expression is available.
    """
    if disc is None:
        disc = trace * trace - 4.0 * det
    if disc >= 0:
        s = math.sqrt(disc)
        q = 0.5 * (trace + math.copysign(s, trace))
        if q == 0.0:
            return EigenPair2(0j, 0j, disc)
        r1, r2 = q, det / q
        hi, lo = (r1, r2) if r1 >= r2 else (r2, r1)
        return EigenPair2(complex(hi), complex(lo), disc)
    im = 0.5 * math.sqrt(-disc)
    return EigenPair2(complex(0.5 * trace, im), complex(0.5 * trace, -im), disc)


def _verdict(label, coords, eig: EigenPair2, **kw) -> StabilityVerdict:
    reals = (eig.lambda1.real, eig.lambda2.real)
    non_hyp = any(abs(r) <= HYPERBOLIC_EPS for r in reals)
    stable = (not non_hyp) and max(reals) < 0
    return StabilityVerdict(label, coords, eig, stable, non_hyp, **kw)


def discriminant_zero_fp(sys: CliqueSystem) -> float:
    """Discriminant of the characteristic quadratic of the Jacobian at (0, 0).

    Written as a square plus a non-negative term (the larger healing rate
    determines which form), so it is positive for every valid system.
    """
    N, ba, bb, da, db = sys.N, sys.beta_a, sys.beta_b, sys.delta_a, sys.delta_b
    if db >= da:
        return ((db - da) - N * (ba + bb)) ** 2 + 4 * N * ba * (db - da)
    return ((da - db) - N * (ba + bb)) ** 2 + 4 * N * bb * (da - db)


def zero_condition_value(sys: CliqueSystem) -> float:
    """N (delta_a beta_b + delta_b beta_a) / (delta_a delta_b); extinction is stable below 1."""
    return sys.N * (sys.delta_a * sys.beta_b + sys.delta_b * sys.beta_a) / (sys.delta_a * sys.delta_b)


def analyze_zero(sys: CliqueSystem) -> StabilityVerdict:
    N, ba, bb, da, db = sys.N, sys.beta_a, sys.beta_b, sys.delta_a, sys.delta_b
    trace = N * (ba + bb) - (da + db)
    det = da * db - N * (db * ba + da * bb)
    eig = quadratic_eigenvalues(trace, det, discriminant_zero_fp(sys))
    return _verdict("zero", (0.0, 0.0), eig, condition_value=zero_condition_value(sys),
                    formula="N*(delta_a*beta_b + delta_b*beta_a)/(delta_a*delta_b) < 1")


def analyze_at(sys: CliqueSystem, st: CliqueState, tol: Optional[float] = None,
               label: str = "custom") -> StabilityVerdict:
    """Eigen-analysis of the Jacobian at a (numerical) fixed point ``st``."""
    if tol is None:
        tol = 1e-8 * sys.N
    residual = max(abs(x) for x in clique_rhs(sys, st))
    if residual > tol:
        raise NotAFixedPoint(residual, tol)
    J = clique_jacobian(sys, st)
    eig = quadratic_eigenvalues(J[0, 0] + J[1, 1], J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    return _verdict(label, (st.I_a, st.I_b), eig, formula="eig(J(I_a, I_b))")


def derive_rates_full_infection(N: int, c: float, delta_a: float, delta_b: float) -> tuple[float, float]:
    """Rates making (cN, cN) a fixed point: beta = delta / (2N(1-c))."""
    if not (0.5 < c < 1.0):
        raise CliqueError(f"c={c} outside (1/2, 1)")
    beta_a = delta_a / (2 * N * (1 - c))
    beta_b = delta_b / (2 * N * (1 - c))
    for name, b, d in (("beta_a", beta_a, delta_a), ("beta_b", beta_b, delta_b)):
        if not (0.0 < b <= 1.0):
            raise CliqueError(f"{name}={b:.6g} outside (0, 1]; need c <= {1 - d / (2 * N):.6g}")
    return beta_a, beta_b


def derive_rates_mixed(N: int, c: float, delta_a: float, delta_b: float) -> tuple[float, float]:
    """Rates making ((1-c)N, cN) a fixed point.

    beta_a = (delta_a / N)(1-c)/c and beta_b = (delta_b / N) c/(1-c).
    """
    if not (0.0 < c < 1.0):
        raise CliqueError(f"c={c} outside (0, 1)")
    beta_a = delta_a / N * (1 - c) / c
    beta_b = delta_b / N * c / (1 - c)
    if not (0.0 < beta_a <= 1.0):
        raise CliqueError(f"beta_a={beta_a:.6g} outside (0, 1]; need c >= {delta_a / (N + delta_a):.6g}")
    if not (0.0 < beta_b <= 1.0):
        raise CliqueError(f"beta_b={beta_b:.6g} outside (0, 1]; need c <= {N / (N + delta_b):.6g}")
    return beta_a, beta_b


def full_infection_system(N: int, c: float, delta_a: float, delta_b: float) -> CliqueSystem:
    ba, bb = derive_rates_full_infection(N, c, delta_a, delta_b)
    return CliqueSystem(N, ba, bb, delta_a, delta_b)


def mixed_system(N: int, c: float, delta_a: float, delta_b: float) -> CliqueSystem:
    ba, bb = derive_rates_mixed(N, c, delta_a, delta_b)
    return CliqueSystem(N, ba, bb, delta_a, delta_b)


def analyze_full(sys: CliqueSystem, c: float) -> StabilityVerdict:
    if not (0.5 < c < 1.0):
        raise CliqueError(f"c={c} outside (1/2, 1)")
    v = analyze_at(sys, CliqueState(c * sys.N, c * sys.N), label="full")
    return replace(v, formula="beta = delta/(2N(1-c))")


def analyze_mixed(sys: CliqueSystem, c: float) -> StabilityVerdict:
    if not (0.0 < c < 1.0):
        raise CliqueError(f"c={c} outside (0, 1)")
    v = analyze_at(sys, CliqueState((1 - c) * sys.N, c * sys.N), label="mixed")
    return replace(v, formula="beta_a = delta_a/N*(1-c)/c, beta_b = delta_b/N*c/(1-c)")
