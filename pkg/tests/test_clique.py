from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, example, given, settings
from hypothesis import strategies as st

from hetero_sis.clique import (CliqueError, CliqueState, CliqueSystem, NotAFixedPoint, analyze_at, analyze_full,
                               analyze_mixed, analyze_zero, clique_jacobian, clique_rhs, derive_rates_full_infection,
                               derive_rates_mixed, discriminant_zero_fp, full_infection_system, mixed_system,
                               quadratic_eigenvalues, zero_condition_value)

EPS = np.finfo(float).eps
rates = st.floats(1e-6, 1.0)
Ns = st.integers(1, 5000)


@st.composite
def systems(draw):
    return CliqueSystem(draw(Ns), draw(rates), draw(rates), draw(rates), draw(rates))


def fd_jacobian(sys, s, h=1e-4):
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        up = clique_rhs(sys, CliqueState(s.I_a + e[0], s.I_b + e[1]))
        dn = clique_rhs(sys, CliqueState(s.I_a - e[0], s.I_b - e[1]))
        J[:, j] = (np.array(up) - np.array(dn)) / (2 * h)
    return J


def companion_roots(J):
    """Independent eigenvalue oracle: roots of the characteristic polynomial via numpy.roots."""
    tr, det = J[0, 0] + J[1, 1], J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    return np.sort_complex(np.roots([1.0, -tr, det]))


def exact_discriminant(sys):
    N = Fraction(sys.N)
    ba, bb, da, db = (Fraction(x) for x in (sys.beta_a, sys.beta_b, sys.delta_a, sys.delta_b))
    tr = N * (ba + bb) - (da + db)
    det = da * db - N * (db * ba + da * bb)
    return tr * tr - 4 * det


# -- rhs ----------------------------------------------------------------------

def test_rhs_examples():
    sys = CliqueSystem(10, 0.3, 0.2, 0.1, 0.4)
    assert clique_rhs(sys, CliqueState(0, 0)) == (0, 0)
    one = CliqueSystem(1, 0.5, 0.5, 0.5, 0.5)
    assert clique_rhs(one, CliqueState(1, 0))[0] == -0.5
    assert clique_rhs(sys, CliqueState(10, 10)) == pytest.approx((-0.1 * 10, -0.4 * 10))


def test_system_validation():
    with pytest.raises(CliqueError):
        CliqueSystem(0, 0.1, 0.1, 0.1, 0.1)
    with pytest.raises(CliqueError):
        CliqueSystem(5, 0.0, 0.1, 0.1, 0.1)
    with pytest.raises(CliqueError):
        CliqueSystem(5, 0.1, 0.1, 1.5, 0.1)


# -- Jacobian -----------------------------------------------------------------

def test_jacobian_at_zero_matches_closed_form():
    sys = CliqueSystem(1000, 5e-7, 9e-7, 0.01, 0.02)
    N = sys.N
    expected = [[sys.beta_a * N - sys.delta_a, sys.beta_a * N], [sys.beta_b * N, sys.beta_b * N - sys.delta_b]]
    assert np.allclose(clique_jacobian(sys, CliqueState(0, 0)), expected, rtol=0, atol=1e-15)


def test_jacobian_at_cn_cn_matches_closed_form():
    sys, c = CliqueSystem(200, 0.001, 0.003, 0.05, 0.02), 0.7
    N = sys.N
    expected = [[(1 - 3 * c) * sys.beta_a * N - sys.delta_a, (1 - c) * sys.beta_a * N],
                [(1 - c) * sys.beta_b * N, (1 - 3 * c) * sys.beta_b * N - sys.delta_b]]
    assert np.allclose(clique_jacobian(sys, CliqueState(c * N, c * N)), expected, rtol=1e-13, atol=1e-13)


def test_jacobian_matches_finite_differences_at_100_states():
    rng = np.random.default_rng(0)
    for _ in range(100):
        N = int(rng.integers(1, 200))
        sys = CliqueSystem(N, *rng.uniform(1e-4, 1, 4))
        s = CliqueState(*rng.uniform(0, N, 2))
        # rhs is quadratic, so central differences are exact up to rounding
        assert np.allclose(clique_jacobian(sys, s), fd_jacobian(sys, s), rtol=0, atol=1e-6)


# -- eigenvalues --------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e6, 1e6))
def test_quadratic_eigenvalues_sum_and_product(tr, det):
    e = quadratic_eigenvalues(tr, det)
    scale = max(1.0, abs(tr), abs(det))
    assert abs((e.lambda1 + e.lambda2) - tr) <= 1e-12 * scale
    assert abs(e.lambda1 * e.lambda2 - det) <= 1e-12 * max(1.0, abs(det), abs(tr) ** 2)


def test_quadratic_eigenvalues_tiny_root_is_accurate():
    # naive formula loses the small root to cancellation
    e = quadratic_eigenvalues(1e8, 1.0)
    assert e.lambda2.real == pytest.approx(1e-8, rel=1e-12)


def test_quadratic_complex_and_zero():
    e = quadratic_eigenvalues(-2.0, 5.0)
    assert e.lambda1 == pytest.approx(complex(-1, 2))
    assert e.lambda2 == pytest.approx(complex(-1, -2))
    z = quadratic_eigenvalues(0.0, 0.0)
    assert z.lambda1 == 0 and z.lambda2 == 0


@settings(max_examples=200, deadline=None)
@given(systems(), st.floats(0, 1), st.floats(0, 1))
@example(CliqueSystem(N=2, beta_a=1.0, beta_b=1.0, delta_a=0.5, delta_b=0.5), 1.0, 1.0)  # double root
def test_eigenvalues_match_companion_oracle(sys, fa, fb):
    s = CliqueState(fa * sys.N, fb * sys.N)
    J = clique_jacobian(sys, s)
    tr, det = J[0, 0] + J[1, 1], J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    e = quadratic_eigenvalues(tr, det)
    ours = np.sort_complex(np.array([e.lambda1, e.lambda2]))
    oracle = companion_roots(J)
    scale = max(1.0, np.abs(J).max())
    # backward error: each root solves the characteristic polynomial to rounding level
    for lam in ours:
        resid = abs(lam * lam - tr * lam + det)
        assert resid <= 64 * EPS * (abs(lam) ** 2 + abs(tr * lam) + abs(det) + 1.0)
    # forward error: roots taken from coefficients are only as sensitive as their gap allows,
    # growing like 1/gap and saturating at sqrt(eps) for a repeated root
    gap = abs(oracle[0] - oracle[1])
    conditioning = min(64 * EPS * scale**2 / max(gap, 1e-300), 8 * np.sqrt(EPS) * scale)
    assert np.allclose(ours, oracle, rtol=0, atol=1e-10 * scale + conditioning)


# -- extinction point ---------------------------------------------------------

def test_die_out_parameters():
    v = analyze_zero(CliqueSystem(1000, 5e-7, 9e-7, 0.01, 0.01))
    assert abs(v.condition_value - 0.14) <= 1e-12
    assert v.stable and not v.non_hyperbolic


def test_single_profile_reduction():
    N, b, d = 300, 0.0004, 0.5
    v = analyze_zero(CliqueSystem(N, b, b, d, d))
    assert v.condition_value == pytest.approx(2 * N * b / d, rel=1e-14)
    # the dominant eigenvalue of J(0,0) is 2N*beta - delta
    assert v.eigenvalues.max_real == pytest.approx(2 * N * b - d, rel=1e-12)


def test_small_unstable_case():
    v = analyze_zero(CliqueSystem(1, 0.5, 0.5, 0.5, 0.5))
    assert v.condition_value == 2.0
    assert not v.stable


def test_decoupled_limit():
    sys = CliqueSystem(10, 1e-15, 1e-15, 0.2, 0.7)
    v = analyze_zero(sys)
    assert sorted([v.eigenvalues.lambda1.real, v.eigenvalues.lambda2.real]) == pytest.approx([-0.7, -0.2], abs=1e-12)


def test_non_hyperbolic_flag():
    # condition value exactly 1 puts an eigenvalue at zero
    v = analyze_zero(CliqueSystem(1, 0.25, 0.25, 0.5, 0.5))
    assert v.non_hyperbolic and not v.stable
    assert v.to_dict()["non_hyperbolic"] is True


def test_discriminant_equal_healing():
    sys = CliqueSystem(50, 0.01, 0.03, 0.2, 0.2)
    assert discriminant_zero_fp(sys) == pytest.approx(50 ** 2 * 0.04 ** 2, rel=1e-14)


@settings(max_examples=1000, deadline=None)
@given(systems())
def test_discriminant_positive_and_matches_exact(sys):
    d = discriminant_zero_fp(sys)
    exact = exact_discriminant(sys)
    assert d > 0 and exact > 0
    assert abs(d - float(exact)) <= 1e-9 * float(exact)


@settings(max_examples=500, deadline=None)
@given(systems())
def test_zero_verdict_three_way_consistency(sys):
    v = analyze_zero(sys)
    cond = zero_condition_value(sys)
    assume(abs(cond - 1) > 1e-9)
    # sign of the dominant eigenvalue from an independent root solve
    J = clique_jacobian(sys, CliqueState(0, 0))
    oracle_max = companion_roots(J).real.max()
    assert v.stable == (cond < 1) == (oracle_max < 0)


# -- constructed fixed points ---------------------------------------------------

def test_full_infection_rate_example():
    ba, bb = derive_rates_full_infection(1000, 0.75, 0.01, 0.02)
    assert ba == pytest.approx(2e-5, rel=1e-14)
    assert bb == pytest.approx(4e-5, rel=1e-14)


@pytest.mark.parametrize("c", [0.6, 0.75, 0.9])
def test_full_infection_stable(c):
    sys = full_infection_system(1000, c, 0.01, 0.01)
    assert max(abs(x) for x in clique_rhs(sys, CliqueState(c * 1000, c * 1000))) < 1e-10
    v = analyze_full(sys, c)
    assert v.stable and v.eigenvalues.max_real < 0


def test_full_infection_range_errors():
    for c in (0.5, 0.3, 1.0):
        with pytest.raises(CliqueError):
            derive_rates_full_infection(100, c, 0.1, 0.1)
    # beta would exceed 1
    with pytest.raises(CliqueError, match="need c <="):
        derive_rates_full_infection(1, 0.9, 1.0, 0.1)
    with pytest.raises(CliqueError):
        analyze_full(CliqueSystem(10, 0.1, 0.1, 0.1, 0.1), 0.4)


def test_mixed_rate_examples():
    ba, bb = derive_rates_mixed(1000, 0.99, 0.1, 0.01)
    assert ba == pytest.approx(0.1 * (0.01 / 0.99) / 1000, rel=1e-12)
    assert ba == pytest.approx(1.0101e-6, rel=1e-4)
    assert bb == pytest.approx(9.9e-4, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3000), st.floats(0.01, 0.99), rates, rates)
def test_mixed_swap_symmetry(N, c, da, db):
    try:
        ba, bb = derive_rates_mixed(N, c, da, db)
        ba2, bb2 = derive_rates_mixed(N, 1 - c, db, da)
    except CliqueError:
        return
    assert ba2 == pytest.approx(bb, rel=1e-12)
    assert bb2 == pytest.approx(ba, rel=1e-12)


def test_mixed_stable_example():
    sys = mixed_system(100, 0.9, 0.1, 0.1)
    v = analyze_mixed(sys, 0.9)
    assert v.stable
    assert v.coordinates == pytest.approx((10.0, 90.0))


def test_mixed_infeasible_reports_range():
    with pytest.raises(CliqueError, match="need c <="):
        derive_rates_mixed(10, 0.999, 0.1, 0.5)
    with pytest.raises(CliqueError):
        derive_rates_mixed(10, 1.0, 0.1, 0.1)


def test_analyze_at_rejects_non_fixed_point():
    sys = CliqueSystem(100, 0.01, 0.01, 0.1, 0.1)
    with pytest.raises(NotAFixedPoint) as exc:
        analyze_at(sys, CliqueState(5, 5))
    assert exc.value.residual > 1e-6


def test_analyze_at_extinction_agrees_with_closed_form():
    sys = CliqueSystem(400, 2e-4, 7e-4, 0.3, 0.6)
    a, z = analyze_at(sys, CliqueState(0, 0)), analyze_zero(sys)
    assert a.eigenvalues.lambda1.real == pytest.approx(z.eigenvalues.lambda1.real, rel=1e-10)
    assert a.eigenvalues.lambda2.real == pytest.approx(z.eigenvalues.lambda2.real, rel=1e-10)
    assert a.stable == z.stable


def test_verdict_to_dict():
    d = analyze_zero(CliqueSystem(1000, 5e-7, 9e-7, 0.01, 0.01)).to_dict()
    assert d["stable"] is True and d["fixed_point"] == "zero"
    assert set(d["eigenvalues"]) == {"lambda1", "lambda2", "discriminant"}
