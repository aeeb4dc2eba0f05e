"""Acceptance criteria, one test per criterion.

Each criterion prints a single ``PASS``/``FAIL`` line (also under pytest's
output capture) including its wall time against the runtime budget. Run
``python tests/test_acceptance.py`` for the summary without pytest.
"""

import sys
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from hetero_sis.cli import main as cli_main
from hetero_sis.cli import run_scenario
from hetero_sis.clique import (CliqueState, CliqueSystem, analyze_at, analyze_zero, clique_jacobian, clique_rhs,
                               derive_rates_full_infection, derive_rates_mixed, discriminant_zero_fp,
                               zero_condition_value)
from hetero_sis.graph import Graph, degrees, gen_clique, gen_erdos_renyi
from hetero_sis.meanfield import (BoundsQuery, fixed_point_residual, flood_bounds, mf_integrate, mf_jacobian,
                                  mixed_windows, pf_fixed_point, zero_stability)
from hetero_sis.profiles import ProfileMap, ProfileParams, SystemMatrices, build_matrices
from hetero_sis.simulation import SeedSpec, SimConfig, run


def connected_er(n, p, seed):
    while True:
        g = gen_erdos_renyi(n, p, seed=seed)
        if g.is_connected():
            return g
        seed += 10_000


def circulant(n, k):
    return Graph.from_edges(n, [(i, (i + j) % n) for i in range(n) for j in range(1, k // 2 + 1)])


def truncate(v, digits=1):
    return np.floor(v * 10 ** digits) / 10 ** digits


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1():
    """Clique die-out: exact condition value and desk-scale extinction."""
    cond = analyze_zero(CliqueSystem(N=1000, beta_a=5e-7, beta_b=9e-7, delta_a=0.01, delta_b=0.01))
    exact = abs(cond.condition_value - 0.14) <= 1e-12 and cond.stable
    # 200-node clique: beta scaled by 1000/100 keeps N*beta/delta and so the condition value
    N, scale = 100, 10.0
    ba, bb, d = 5e-7 * scale, 9e-7 * scale, 0.01
    desk = zero_condition_value(CliqueSystem(N=N, beta_a=ba, beta_b=bb, delta_a=d, delta_b=d))
    res = run(gen_clique(2 * N), ProfileMap(np.repeat([0, 1], N), 2), ProfileParams.from_pairs([(ba, d), (bb, d)]),
              SimConfig(rounds=2000, seeding=SeedSpec(fixed_per_profile=10), replications=32, rng_seed=0))
    rate = res.extinction_rate(by_round=2000)
    ok = exact and desk < 1 and rate >= 0.95
    return ok, f"condition={cond.condition_value:.15g} desk_condition={desk:.3g} extinction={rate:.3f}"


def criterion_2():
    """Single-profile reductions of both thresholds."""
    rng = np.random.default_rng(2)
    worst_clique = worst_graph = 0.0
    for i in range(20):
        N = int(rng.integers(1, 5000))
        beta, delta = rng.uniform(1e-6, 1), rng.uniform(1e-3, 1)
        v = zero_condition_value(CliqueSystem(N=N, beta_a=beta, beta_b=beta, delta_a=delta, delta_b=delta))
        worst_clique = max(worst_clique, abs(v - 2 * N * beta / delta) / (2 * N * beta / delta))
        g = connected_er(30, 0.3, i)
        sm = SystemMatrices(np.full(30, delta), np.full(30, beta))
        lam = np.linalg.eigvalsh(g.A.toarray()).max()
        z = zero_stability(g, sm, tol=1e-15)
        worst_graph = max(worst_graph, abs(z.rho - beta * lam / delta) / (beta * lam / delta))
    ok = worst_clique <= 1e-12 and worst_graph <= 1e-12
    return ok, f"max_rel_err clique={worst_clique:.2e} graph={worst_graph:.2e}"


def criterion_3():
    """Discriminant positivity and agreement with trace^2 - 4 det."""
    rng = np.random.default_rng(3)
    worst, min_disc, jac_ok = 0.0, np.inf, True
    for _ in range(10_000):
        N = int(rng.integers(1, 100_000))
        ba, bb, da, db = 10 ** rng.uniform(-9, 0, 4)
        sys_ = CliqueSystem(N=N, beta_a=ba, beta_b=bb, delta_a=da, delta_b=db)
        disc = discriminant_zero_fp(sys_)
        min_disc = min(min_disc, disc)
        # exact rational trace^2 - 4 det of J(0, 0) as the oracle
        J = clique_jacobian(sys_, CliqueState(0.0, 0.0))
        jac_ok &= np.allclose(J, [[N * ba - da, N * ba], [N * bb, N * bb - db]])
        fa, fb, fda, fdb = (Fraction(x) for x in (ba, bb, da, db))
        tr = N * (fa + fb) - (fda + fdb)
        det = (N * fa - fda) * (N * fb - fdb) - N * fa * N * fb
        exact = tr * tr - 4 * det
        worst = max(worst, abs(float((Fraction(disc) - exact) / exact)))
    ok = min_disc > 0 and worst <= 1e-9 and jac_ok
    return ok, f"min_discriminant={min_disc:.3e} max_rel_err={worst:.2e}"


def criterion_4():
    """Derived rates place the fixed points exactly and make them stable."""
    rng = np.random.default_rng(4)
    worst_rhs, max_re, done = 0.0, -np.inf, 0
    while done < 100:
        N = int(rng.integers(10, 10_000))
        da, db = rng.uniform(1e-3, 1, 2)
        # c on a 2^-20 grid so that cN and (1-c)N are exact and the state itself carries no rounding
        c_full = int(rng.integers(2**19 + 2**10, 2**20 - 2**10)) / 2**20
        c_mixed = int(rng.integers(2**10, 2**20 - 2**10)) / 2**20
        try:
            full = CliqueSystem(N, *derive_rates_full_infection(N, c_full, da, db), da, db)
            mixed = CliqueSystem(N, *derive_rates_mixed(N, c_mixed, da, db), da, db)
        except ValueError:
            continue  # rates outside (0, 1] for this draw
        for sys_, st in ((full, CliqueState(c_full * N, c_full * N)),
                         (mixed, CliqueState((1 - c_mixed) * N, c_mixed * N))):
            worst_rhs = max(worst_rhs, max(abs(x) for x in clique_rhs(sys_, st)))
            max_re = max(max_re, analyze_at(sys_, st).eigenvalues.max_real)
        done += 1
    ok = worst_rhs < 1e-10 and max_re < 0
    return ok, f"max_rhs={worst_rhs:.2e} max_eigen_real={max_re:.3e}"


def criterion_5():
    """Mixed regime on the desk clique with rates derived for ((1-c)N, cN)."""
    N, c = 100, 0.9
    ba, bb = derive_rates_mixed(N, c, 0.5, 0.1)
    res = run(gen_clique(2 * N), ProfileMap(np.repeat([0, 1], N), 2), ProfileParams.from_pairs([(ba, 0.5), (bb, 0.1)]),
              SimConfig(rounds=2000, seeding=SeedSpec(fixed_per_profile=10), replications=32, rng_seed=0))
    fr = np.array([t.steady_fraction() for t in res.traces])
    good = (fr[:, 1] >= 0.8) & (fr[:, 1] <= 1.0) & (fr[:, 0] <= 0.1)
    ok = good.mean() >= 0.9
    return ok, f"pass_rate={good.mean():.3f} mean_A={fr[:, 0].mean():.3f} mean_B={fr[:, 1].mean():.3f}"


def criterion_6():
    """Long-run mean-field extinction matches the spectral verdict."""
    rng = np.random.default_rng(6)
    checked = mismatches = 0
    seed = 0
    while checked < 50:
        seed += 1
        g = connected_er(20, 0.2, seed)
        pm = ProfileMap(rng.permutation(np.arange(20) % 2), 2)
        delta = rng.uniform(0.2, 1.0, 2)
        beta = rng.uniform(0.05, 1.0, 2) * delta
        base = build_matrices(pm, ProfileParams.from_pairs(list(zip(beta, delta))))
        rho0 = zero_stability(g, base).rho
        target = rng.uniform(0.3, 2.0)
        if abs(target - 1) < 0.05:
            continue
        scale = target / rho0
        if beta.max() * scale > 1:
            continue
        sm = SystemMatrices(base.delta, base.beta * scale)
        z = zero_stability(g, sm)
        if abs(z.rho - 1) < 0.05:
            continue
        tr = mf_integrate(g, sm, np.full(20, 0.5), 20_000.0, stop_at_steady=True, steady_tol=1e-13)
        died = tr.final.p.max() < 1e-6
        mismatches += died != z.stable
        checked += 1
    return mismatches == 0, f"graphs={checked} mismatches={mismatches}"


def criterion_7():
    """Positive fixed point on regular graphs: closed form, residual, stability."""
    cases = [(circulant(12, 2), 0.3, 0.2), (circulant(40, 4), 0.05, 0.1), (circulant(60, 6), 0.1, 0.3),
             (gen_clique(10), 0.02, 0.1), (gen_clique(50), 0.01, 0.2)]
    worst_err = worst_res = 0.0
    max_abs = -np.inf
    for g, beta, delta in cases:
        k = int(g.degree[0])
        sm = SystemMatrices(np.full(g.node_count, delta), np.full(g.node_count, beta))
        st = pf_fixed_point(g, sm, tol=1e-10)
        worst_err = max(worst_err, float(np.abs(st.p - (1 - delta / (beta * k))).max()))
        worst_res = max(worst_res, fixed_point_residual(g, sm, st))
        max_abs = max(max_abs, mf_jacobian(g, sm, st).abscissa(tol=1e-13))
    ok = worst_err <= 1e-8 and worst_res <= 1e-10 and max_abs <= 1e-8
    return ok, f"max_err={worst_err:.2e} max_residual={worst_res:.2e} max_abscissa={max_abs:.3e}"


def criterion_8():
    """Degree windows for the flood and mixed regimes."""
    params = ProfileParams.from_pairs([(0.4, 0.2), (0.8, 0.2)])  # ratios 2 and 4
    dp = degrees(Graph.from_edges(2, [(0, 1)]), ProfileMap(np.array([0, 1]), 2))
    (lo_a, hi_a), (lo_b, hi_b) = flood_bounds(dp, params, BoundsQuery(0.6, 0.9)).degree_windows.values()
    flood_ok = (truncate(lo_a), truncate(lo_b)) == (0.8, 0.4) and np.allclose([hi_a, hi_b], [7.5, 3.75])
    mixed = ProfileParams.from_pairs([(1e-4, 0.1), (0.9, 0.009)])  # delta_A/beta_A = 1e3, delta_B/beta_B = 0.01
    w = mixed_windows(mixed, BoundsQuery(0.8, 0.99, 100.0))["profile_A"]
    # printed as 8.1 and 12.4: both are truncations of the exact values
    mixed_ok = truncate(w.lower) == 8.1 and truncate(w.upper) == 12.4 and round(w.upper, 1) == 12.5
    ok = flood_ok and mixed_ok
    return ok, (f"flood=({lo_a:.4f},{hi_a:.4f}) ({lo_b:.4f},{hi_b:.4f}) "
                f"mixed_A=({w.lower:.4f},{w.upper:.4f})")


def criterion_9():
    """Full-size runs stay opt-in; their shapes are smoke-checked at desk scale."""
    names = ["arbitrary-die-out", "arbitrary-flood", "arbitrary-mixed", "five-profile", "powerlaw"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundles = {n: run_scenario(n) for n in names}
    desk = all(b.scale == "desk" for b in bundles.values())
    passed = [n for n, b in bundles.items() if b.passed]
    gated = cli_main(["repro", "arbitrary-flood", "--full-scale"]) == 2  # no contact network given
    ok = desk and len(passed) == len(names) and gated
    return ok, f"desk_passed={len(passed)}/{len(names)} full_scale_requires_graph={gated}"


BUDGET = {1: 30, 2: 1, 3: 5, 4: 5, 5: 60, 6: 60, 7: 10, 8: 1, 9: 120}
CRITERIA = {i: globals()[f"criterion_{i}"] for i in BUDGET}


def evaluate(i: int) -> tuple[bool, str]:
    t0 = time.perf_counter()
    ok, detail = CRITERIA[i]()
    wall = time.perf_counter() - t0
    in_time = wall < BUDGET[i]
    line = (f"criterion {i}: {'PASS' if ok and in_time else 'FAIL'} "
            f"[{wall:.2f}s / {BUDGET[i]}s] {detail}")
    return ok and in_time, line


@pytest.mark.parametrize("i", list(CRITERIA))
def test_criterion(i, capsys):
    ok, line = evaluate(i)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(i) for i in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
