"""Exact enumeration oracles, condition reports, and the renewal check."""

import dataclasses
import math

import pytest
from hypothesis import given, strategies as st

from perfectsim.backward import BetaZeroForAlgo1, run_algorithm1, run_joint_tableau
from perfectsim.coalescence import find_nhat
from perfectsim.diagnostics import (
    ExplosionGuard,
    check_theorem_conditions,
    concentration_bound,
    exact_T0_tail,
    renewal_diagnostic,
    rho_exact,
    rho_tilde_exact,
)
from perfectsim.gallery import (
    flipflop_r,
    make_autoregressive,
    make_cyclic4,
    make_flipflop,
    theta_geometric,
    theta_list,
)
from perfectsim.streams import StreamKey


def _autoreg():
    return make_autoregressive(theta_geometric(0.5), 0.3)


def _no_closed_form_tail(kernel):
    """Same kernel with the tail recursion's closed form stripped, forcing
    exact_T0_tail down the independent star-string enumeration path."""
    forms = {k: v for k, v in kernel.closed_forms.items() if k != "star_affine"}
    return dataclasses.replace(kernel, closed_forms=forms)


# ------------------------------------------------------------- tail masses


def test_tail_at_zero_is_the_leftover_mass():
    au = _autoreg()
    assert exact_T0_tail(au, 0) == 0.5


def test_tail_hand_values():
    au = _autoreg()
    assert exact_T0_tail(au, 1) == pytest.approx(0.375, abs=1e-15)
    assert exact_T0_tail(au, 2) == pytest.approx(0.28125, abs=1e-15)


def test_tail_is_decreasing_and_positive():
    au = _autoreg()
    vals = [exact_T0_tail(au, n) for n in range(12)]
    assert all(a > b > 0.0 for a, b in zip(vals, vals[1:]))


def test_tail_recursion_matches_star_string_enumeration():
    au = _autoreg()
    enum = _no_closed_form_tail(au)
    assert "star_affine" in au.closed_forms
    assert "star_affine" not in enum.closed_forms
    for n in range(7):
        assert exact_T0_tail(au, n) == pytest.approx(
            exact_T0_tail(enum, n), abs=1e-12
        )


def test_tail_input_validation_and_budget():
    au = _autoreg()
    with pytest.raises(ValueError):
        exact_T0_tail(au, -1)
    with pytest.raises(ExplosionGuard):
        exact_T0_tail(_no_closed_form_tail(au), 30, budget=10)


# ----------------------------------------------------- letter-string masses


def test_letter_string_mass_matches_the_closed_product():
    au = _autoreg()
    s = au.closed_forms["s"]
    for n in range(1, 9):
        prod = 1.0
        for j in range(1, n + 1):
            prod *= 1.0 - s(j)
        assert rho_exact(au, n) == pytest.approx(prod, abs=1e-12)


def test_closed_class_mass_matches_the_verified_product():
    # the closed-class variant multiplies the class size by the letter
    # masses of strings grown on top of a class window: first factor s(2)
    cy = make_cyclic4(theta_geometric(0.5))
    _, ana = find_nhat(cy, 8)
    s = cy.closed_forms["s"]
    for n in range(1, 4):
        prod = float(len(ana.states))
        for j in range(2, n + 2):
            prod *= 1.0 - s(j)
        assert rho_tilde_exact(cy, ana, n) == pytest.approx(prod, abs=1e-12)


def test_mass_enumeration_guards():
    au = _autoreg()
    cy = make_cyclic4(theta_geometric(0.5))
    _, ana = find_nhat(cy, 8)
    with pytest.raises(ValueError):
        rho_exact(au, 0)
    with pytest.raises(ValueError):
        rho_tilde_exact(cy, ana, 0)
    with pytest.raises(ExplosionGuard):
        rho_exact(cy, 12, budget=100)
    with pytest.raises(ExplosionGuard):
        rho_tilde_exact(cy, ana, 12, budget=100)


# --------------------------------------------------------- condition report


def test_condition_report_for_the_matching_kernel():
    au = _autoreg()
    rep = check_theorem_conditions(au, N=12)
    assert rep.rho_available
    assert rep.rho_source == "closed-form"
    assert len(rep.rho_values) == 12
    prod = 1.0
    for j in range(1, 13):
        prod *= 1.0 - 0.5**j
    assert rep.c_hat == pytest.approx(prod, abs=1e-12)
    assert rep.c_hat == pytest.approx(0.2888586114696384, abs=1e-9)
    assert rep.bound_expected_t0 == pytest.approx((1 - prod) / prod, abs=1e-9)
    assert rep.raabe_epsilon == 0.5  # max over n of n * 0.5^n beyond 1 is 0.5
    assert rep.notes[0] == "necessary-condition evidence, not proof"


def test_condition_report_for_a_kernel_with_no_route():
    ff = make_flipflop(flipflop_r(0.5, 0.5))
    rep = check_theorem_conditions(ff, N=6)
    assert not rep.rho_available
    assert not rep.rho_tilde_available
    assert rep.c_hat is None and rep.bound_expected_t0 is None
    assert any("neither route" in note for note in rep.notes)


# ------------------------------------------------------- concentration bound


def test_concentration_bound_hand_value_and_clamp():
    # exponent -2 * 1 / (9 * 1 * (1/9)) = -2
    val = concentration_bound(1.0, 1.0 / 3.0, 0.0)
    assert val == pytest.approx(4.0 * math.exp(-2.0), abs=1e-15)
    assert concentration_bound(1e-6, 10.0, 5.0) == 1.0  # clamped
    with pytest.raises(ValueError):
        concentration_bound(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        concentration_bound(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        concentration_bound(1.0, 1.0, -1.0)


@given(
    eps=st.floats(min_value=0.01, max_value=10.0),
    bigger=st.floats(min_value=1.0, max_value=4.0),
    norm=st.floats(min_value=0.01, max_value=10.0),
    et0=st.floats(min_value=0.0, max_value=50.0),
)
def test_concentration_bound_monotonicity(eps, bigger, norm, et0):
    base = concentration_bound(eps, norm, et0)
    assert concentration_bound(eps * bigger, norm, et0) <= base
    assert concentration_bound(eps, norm * bigger, et0) >= base
    assert concentration_bound(eps, norm, et0 * bigger) >= base


# ------------------------------------------------------------ joint tableau


def test_joint_tableau_resolves_every_time_consistently():
    au = _autoreg()
    vals, T = run_joint_tableau(au, 30, StreamKey(44))
    # every target time is resolved; earlier times resolved along the way
    # stay in the tableau (they sit below every target)
    assert set(vals) == set(T)
    assert set(range(31)) <= set(vals)
    assert all(t <= 30 for t in vals)
    assert all(v in (0, 1) for v in vals.values())
    assert all(T[t] <= t for t in T)
    vals2, T2 = run_joint_tableau(au, 30, StreamKey(44))
    assert vals == vals2 and T == T2


def test_joint_tableau_requires_the_additive_closed_form():
    cy = make_cyclic4(theta_geometric(0.5))
    with pytest.raises(ValueError):
        run_joint_tableau(cy, 5, StreamKey(0))
    # additive hook present but no spontaneous mass: the backward scan
    # can never seed a letter
    dead = make_autoregressive(theta_list([0.0, 0.5, 0.5]), 0.3)
    with pytest.raises(BetaZeroForAlgo1):
        run_joint_tableau(dead, 5, StreamKey(0))


# ------------------------------------------------------------ renewal check


def test_renewal_report_smoke_values():
    au = _autoreg()
    rep = renewal_diagnostic(au, 12, 400, StreamKey(11))
    assert rep.window_w == 400 and rep.horizon_h == 12
    assert rep.renewal_count == 112
    assert len(rep.gaps_first) + len(rep.gaps_second) == rep.renewal_count - 1
    assert all(g >= 1 for g in rep.gaps_first + rep.gaps_second)
    assert not rep.low_counts
    assert rep.halves_agree_3se is True
    assert rep.z_gap_means == pytest.approx(-0.33646036656818534, abs=1e-9)
    assert rep.chi2_dof == 6
    assert rep.truncation_bias == exact_T0_tail(au, 12)


def test_renewal_input_validation():
    au = _autoreg()
    with pytest.raises(ValueError):
        renewal_diagnostic(au, -1, 100, StreamKey(0))
    with pytest.raises(ValueError):
        renewal_diagnostic(au, 5, 0, StreamKey(0))


# --------------------------------------------------------------- union bound


def test_window_stopping_depth_obeys_the_union_bound():
    # P(min T > m deep) for a 3-slot window is at most the sum of the three
    # per-time tails, and at least the deepest single tail
    au = _autoreg()
    n = 4000
    depths = []
    for rep in range(n):
        _, rec = run_algorithm1(au, 2, StreamKey(seed=555, replication=rep))
        depths.append(-rec.t_min(-2, 0))
    for m in (2, 3, 4):
        emp = sum(1 for d in depths if d > m) / n
        se = math.sqrt(max(emp * (1 - emp), 1e-9) / n)
        upper = sum(exact_T0_tail(au, max(m - i, 0)) for i in range(3))
        lower = exact_T0_tail(au, m)
        assert emp <= upper + 4 * se
        assert emp >= lower - 4 * se
