import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from fjmgt.errors import DomainError, NoIntegrableResolvent, NumericalError, UnsupportedScenario
from fjmgt.kernels import (
    Kernel,
    KernelPair,
    build_weights,
    conv_apply,
    conv_apply_fast,
    conv_apply_naive,
    fourier_symbol,
    fractional_integral,
    kernel_convolution,
    neg_sobolev_norm,
    resolvent,
    scenario_table,
    sonine_defect,
)


def test_abel_values_match_closed_form():
    assert Kernel.abel(0.5).eval(1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)
    assert Kernel.abel(0.25).eval(16.0) == pytest.approx(16 ** -0.75 / gamma(0.25), rel=1e-12)


def test_abel_weights_are_exact_moments():
    w = build_weights(Kernel.abel(0.5), 0.01, 10).weights
    # integral of t^{-1/2}/Gamma(1/2) over [0, h]
    assert w[0] == pytest.approx(2 * math.sqrt(0.01) / math.sqrt(math.pi), rel=1e-12)
    assert np.all(np.diff(w) < 0)


def test_abel_against_constant_history():
    # (g_beta * 1)(t) = t^beta / Gamma(beta + 1), reproduced exactly
    w = build_weights(Kernel.abel(0.5), 0.1, 10)
    assert conv_apply(w, np.ones(10)) == pytest.approx(1.0 / gamma(1.5), rel=1e-13)


def test_mass_and_singularity_index():
    assert Kernel.delta().mass(3.0) == 1.0
    assert Kernel.one().mass(2.0) == 2.0
    assert Kernel.abel(0.3).mass(1.0) == pytest.approx(1 / gamma(1.3))
    assert Kernel.delta().singularity_index == 0.0
    assert Kernel.abel(0.3).singularity_index == pytest.approx(0.3)
    assert Kernel.one().singularity_index == 1.0


def test_abel_order_validated():
    with pytest.raises(DomainError):
        Kernel.abel(1.2)
    with pytest.raises(DomainError):
        Kernel.abel(0.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
def test_delta_returns_latest_sample(history):
    w = build_weights(Kernel.delta(), 0.1, 50)
    assert conv_apply(w, np.array(history)) == history[-1]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_conv_apply_is_linear(n, a, b, seed):
    rng = np.random.default_rng(seed)
    z, y = rng.standard_normal(n), rng.standard_normal(n)
    w = build_weights(Kernel.abel(0.4), 0.01, 64)
    lhs = conv_apply(w, a * z + b * y)
    rhs = a * conv_apply(w, z) + b * conv_apply(w, y)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 700), st.sampled_from([0.1, 0.5, 0.9]), st.integers(0, 2 ** 31))
def test_fast_matches_naive(n, order, seed):
    z = np.random.default_rng(seed).standard_normal(n)
    w = build_weights(Kernel.abel(order), 1e-3, n)
    naive, fast = conv_apply_naive(w, z), conv_apply_fast(w, z)
    assert np.max(np.abs(fast - naive)) <= 1e-12 * max(1.0, np.max(np.abs(naive)))


def test_fast_is_batched_along_trailing_axes():
    z = np.random.default_rng(1).standard_normal((100, 3, 2))
    w = build_weights(Kernel.abel(0.3), 0.01, 100)
    out = conv_apply_fast(w, z)
    for i in range(3):
        for j in range(2):
            np.testing.assert_allclose(out[:, i, j], conv_apply_fast(w, z[:, i, j]), atol=1e-14)


def test_history_longer_than_weights_rejected():
    w = build_weights(Kernel.abel(0.3), 0.01, 5)
    with pytest.raises(DomainError):
        conv_apply(w, np.ones(6))


def test_resolvent_rules():
    assert resolvent(Kernel.delta()) == Kernel.one()
    assert resolvent(Kernel.abel(0.3)) == Kernel.abel(0.7)
    with pytest.raises(NoIntegrableResolvent):
        resolvent(Kernel.one())


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_sonine_lattice(alpha):
    k = Kernel.abel(1 - alpha)
    r = resolvent(k)
    h = 1e-3
    assert sonine_defect(k, r, h, 1000) <= 0.5 * h ** min(alpha, 1 - alpha)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_sonine_defect_decreases_when_h_halves(alpha):
    k = Kernel.abel(1 - alpha)
    r = resolvent(k)
    defects = [sonine_defect(k, r, h, round(1 / h), n_min=round(0.1 / h)) for h in (2e-3, 1e-3, 5e-4)]
    assert defects[0] > defects[1] > defects[2]


def test_mismatched_pair_is_far_from_one():
    assert sonine_defect(Kernel.abel(0.3), Kernel.abel(0.5), 1e-3, 1000) >= 0.1


def test_kernel_convolution_delta_pairs():
    h, n = 0.01, 50
    np.testing.assert_allclose(kernel_convolution(Kernel.delta(), Kernel.one(), h, n), 1.0)


def test_tabulated_resolvent_recovers_abel():
    h, n = 1e-3, 1000
    grid = h * np.arange(1, n + 1)
    tab = Kernel.tabulated(grid, Kernel.abel(0.3).eval(grid))
    r = resolvent(tab, h, n)
    t = grid[10:]
    exact = Kernel.abel(0.7).eval(t)
    assert np.max(np.abs(r.eval(t) - exact) / exact) < 0.01
    assert sonine_defect(tab, r, h, n) < 0.02


def test_tabulated_domain_checks():
    tab = Kernel.tabulated([0.1, 0.2, 0.3], [1.0, 0.8, 0.7])
    with pytest.raises(DomainError):
        tab.eval(0.5)
    with pytest.raises(NumericalError):
        Kernel.tabulated([0.1, 0.2], [100.0, 1.0]).eval(0.01)


def test_fractional_integral_of_constant():
    y = np.ones(100)
    out = fractional_integral(0.5, y, 0.01)
    np.testing.assert_allclose(out[-1], 1.0 / gamma(1.5), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(-5, 5), st.integers(0, 2 ** 31))
def test_neg_sobolev_norm_homogeneous(alpha, scale, seed):
    y = np.random.default_rng(seed).standard_normal(64)
    a = neg_sobolev_norm(alpha, scale * y, 0.01)
    b = abs(scale) * neg_sobolev_norm(alpha, y, 0.01)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-300)


def test_neg_sobolev_norm_zero_only_on_zero():
    assert neg_sobolev_norm(0.5, np.zeros(20), 0.01) == 0.0
    assert neg_sobolev_norm(0.5, np.eye(20)[3], 0.01) > 0.0


def test_fourier_symbol_example_and_additivity():
    assert fourier_symbol("GFE_I", 0.5, 1.0, 1.0, 4.0) == pytest.approx(
        -math.sqrt(0.5) * 0.125 + math.sqrt(0.5) * 0.5, rel=1e-7)
    assert fourier_symbol("GFE", 0.5, 0.0, 1.0, 2.0) == 0.0
    for alpha in (0.2, 0.6):
        for omega in (0.3, 7.0):
            whole = fourier_symbol("GFE_I", alpha, 0.7, 0.2, omega)
            parts = fourier_symbol("GFE_III", alpha, 0.7, 0.2, omega) + fourier_symbol("GFE", alpha, 0.7, 0.2, omega)
            assert whole == pytest.approx(parts, rel=1e-14)
    with pytest.raises(UnsupportedScenario):
        fourier_symbol("JMGT", 0.5, 1.0, 1.0, 1.0)


def test_named_pairs_fill_in_the_kernel_table():
    p = KernelPair.named("gfe1", 0.3)
    assert (p.k1, p.k2, p.power_a) == (Kernel.abel(0.7), Kernel.abel(0.3), 0.3)
    p = KernelPair.named("jmgt")
    assert (p.k1, p.k2, p.power_a) == (Kernel.delta(), Kernel.one(), 1.0)
    p = KernelPair.named("GFE_III", 0.6)
    assert (p.k1, p.k2, p.power_a) == (Kernel.delta(), Kernel.abel(0.6), 1.0)
    p = KernelPair.named("GFE", 0.4)
    assert (p.k1, p.k2, p.power_a) == (Kernel.abel(0.6), Kernel.one(), 0.4)
    with pytest.raises(DomainError):
        KernelPair(Kernel.delta(), Kernel.one(), 1.0, "GFE_I")


def test_kernel_config_round_trip():
    for k in (Kernel.delta(), Kernel.one(), Kernel.abel(0.3),
              Kernel.tabulated([0.1, 0.2], [2.0, 1.0])):
        assert Kernel.from_config(k.to_config()) == k


def test_scenario_table_rows():
    rows = scenario_table(0.4)
    assert rows["GFE_I"].alpha1 == pytest.approx(0.6)
    assert rows["GFE_III"].alpha1 == 0.0
    assert rows["GFE"].alpha2 == 1.0
