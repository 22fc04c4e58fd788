import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mipt import collapse
from mipt.collapse import CollapseDataset, CollapseError, GridSpec

PS = np.round(np.arange(0, 1.0001, 0.05), 10)


def _hand_dataset():
    # L=1: q = p - 1/2, W = S - 1;  L=2: q = 2(p - 1/2), W = (S - 2)/2
    L = [1] * 4 + [2] * 4
    p = [0.25, 0.5, 0.75, 1.0, 0.25, 0.375, 0.5, 0.625]
    s = [0.0, 1.0, 3.0, 4.0, 1.0, 2.0, 2.0, 4.0]
    return CollapseDataset(L, p, s, None, 0.5)


def test_rescale_unit_size():
    data = _hand_dataset()
    q, w = collapse.rescale(data, 1.7, 1.0)[1]
    np.testing.assert_allclose(q, [-0.25, 0, 0.25, 0.5])
    np.testing.assert_allclose(w, [-1, 0, 2, 3])


def test_rescale_at_critical_point_is_origin():
    data = collapse.synthetic_dataset([4, 6, 9], PS, 1.3, 0.8, 0.25)
    for q, w in collapse.rescale(data, 0.9, 1.4).values():
        i = int(np.argmin(np.abs(q)))
        assert q[i] == 0 and w[i] == 0


def test_rescale_abs_form_coincides():
    # S_L(p) = L^(gamma/nu) |(p - p*) L^(1/nu)| at gamma = nu = 1, i.e. L^2 |p - p*|
    ps = np.linspace(0.1, 0.9, 9)
    s = np.r_[np.abs(ps - 0.5), 4 * np.abs(ps - 0.5)]
    data = CollapseDataset(np.r_[np.full(9, 1), np.full(9, 2)], np.r_[ps, ps], s, None, 0.5)
    curves = collapse.rescale(data, 1.0, 1.0)
    f1 = collapse.Interpolant(*curves[1])
    q2, w2 = curves[2]
    m = (q2 >= f1.lo) & (q2 <= f1.hi)
    assert m.sum() >= 3
    np.testing.assert_allclose(f1(q2[m]), w2[m], atol=1e-14)


def test_interpolated_p_star():
    data = CollapseDataset([3] * 4 + [4] * 4, [0, 0.2, 0.4, 0.6] * 2, [0, 1, 2, 3, 0, 2, 4, 6], None, 0.3)
    q, w = collapse.rescale(data, 1.0, 1.0)[4]
    np.testing.assert_allclose(w, (np.array([0, 2, 4, 6]) - 3.0) / 4)


def test_p_star_outside_range_rejected():
    data = CollapseDataset([3] * 4 + [4] * 4, [0.3, 0.4, 0.5, 0.6] * 2, np.arange(8.0), None, 0.1)
    with pytest.raises(CollapseError):
        collapse.rescale(data, 1, 1)


def test_dataset_invariants():
    with pytest.raises(CollapseError):
        CollapseDataset([5] * 5, [0, 0.1, 0.2, 0.3, 0.4], np.zeros(5), None, 0.2)
    with pytest.raises(CollapseError):
        CollapseDataset([5] * 3 + [6] * 4, [0, 0.1, 0.2] + [0, 0.1, 0.2, 0.3], np.zeros(7), None, 0.1)
    with pytest.raises(CollapseError):
        CollapseDataset([5] * 4 + [6] * 4, [0, 0.1, 0.2, 1.2] * 2, np.zeros(8), None, 0.1)
    with pytest.raises(CollapseError):
        CollapseDataset([5] * 4 + [6] * 4, [0, 0.1, 0.1, 0.3] * 2, np.zeros(8), None, 0.1)


def test_interpolant_examples():
    f = collapse.interpolant([(0, 0), (1, 1)])
    assert f(0.5) == 0.5
    g = collapse.interpolant([(0, 0.3), (0.5, -2.0), (1, 7.0)])
    assert g(0.5) == -2.0 and g(1.0) == 7.0
    with pytest.raises(ValueError):
        g(1.01)
    with pytest.raises(ValueError):
        g(-0.01)
    with pytest.raises(ValueError):
        collapse.interpolant([(0, 1)])
    with pytest.raises(ValueError):
        collapse.interpolant([(0, 1), (0, 2)])


@pytest.mark.parametrize("n", [11, 41, 201])
def test_interpolant_sine_error_bound(n):
    q = np.linspace(0, 2 * np.pi, n)
    f = collapse.Interpolant(q, np.sin(q))
    x = np.linspace(0, 2 * np.pi, 10_007)
    dq = q[1] - q[0]
    assert np.max(np.abs(f(x) - np.sin(x))) < dq**2 / 8


def test_loss_hand_computed():
    # (L=1 onto L=2 points): residuals -1, 0, 1 with weight 1; (L=2 onto L=1): 1, 0, -1 with weight 4
    assert collapse.collapse_loss(_hand_dataset(), 1.0, 1.0) == pytest.approx(10.0, abs=1e-12)


def test_loss_zero_for_exact_scaling_form():
    # piecewise-linear interpolation is exact for a linear scaling function
    lin = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25, scaling=lambda q: 0.7 * q)
    assert collapse.collapse_loss(lin, 1.9, 2.1) < 1e-10
    assert collapse.collapse_loss(lin, 2.4, 2.1) > 1e-3
    curved = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25)
    assert collapse.collapse_loss(curved, 2.4, 2.1) > collapse.collapse_loss(curved, 1.9, 2.1)


def test_entry_order_bit_identical():
    rng = np.random.default_rng(0)
    data = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25, noise=0.05, rng=rng)
    perm = rng.permutation(len(data.L))
    shuffled = CollapseDataset(data.L[perm], data.p[perm], data.s_mean[perm], data.s_err[perm], data.p_star)
    for g, n in [(1.0, 1.0), (1.9, 2.1), (0.3, 3.7)]:
        assert collapse.collapse_loss(data, g, n) == collapse.collapse_loss(shuffled, g, n)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 4), st.floats(0.2, 4), st.integers(0, 10_000))
def test_loss_non_negative(g, n, seed):
    data = collapse.synthetic_dataset([4, 6], PS, 1.0, 1.5, 0.25, noise=0.1, rng=np.random.default_rng(seed))
    assert collapse.collapse_loss(data, g, n) >= 0


def test_argmin_invariant_under_scaling():
    grid = GridSpec(0.5, 3.0, 0.5, 3.5, 0.1)
    data = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25, noise=0.02, rng=np.random.default_rng(3))
    _, _, a = collapse.grid_search(data, grid)
    _, _, b = collapse.grid_search(data.scaled(3.7), grid)
    assert np.unravel_index(np.argmin(a), a.shape) == np.unravel_index(np.argmin(b), b.shape)
    np.testing.assert_allclose(b, 3.7**2 * a, rtol=1e-10)


def test_fit_recovers_noiseless_exponents():
    data = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25)
    fit = collapse.fit_exponents(data)
    assert abs(fit.gamma0 - 1.9) <= 0.05 and abs(fit.nu0 - 2.1) <= 0.05
    assert fit.loss_at_min >= 0 and min(fit.d_gamma_plus, fit.d_gamma_minus, fit.d_nu_plus, fit.d_nu_minus) > 0
    assert fit.sizes == [5, 6, 7, 8] and fit.p_star_used == 0.25


def test_fit_widths_from_log_ratio():
    data = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.5, 1.2, 0.25, noise=0.03, rng=np.random.default_rng(9))
    fit = collapse.fit_exponents(data)
    r0 = collapse.collapse_loss(data, fit.gamma0, fit.nu0)
    r_plus = collapse.collapse_loss(data, 1.01 * fit.gamma0, fit.nu0)
    if r_plus > r0:
        assert fit.d_gamma_plus == pytest.approx(0.01 * fit.gamma0 / np.sqrt(2 * np.log(r_plus / r0)))
    assert fit.gamma_err == max(fit.d_gamma_plus, fit.d_gamma_minus)


def test_zero_loss_width_is_grid_resolution():
    assert collapse._width(0.0, 1.0, 2.0, 0.01, 0.05) == 0.05
    assert collapse._width(1.0, 1.0, 2.0, 0.01, 0.05) == 0.05
    assert collapse._width(1.0, np.e**0.5, 2.0, 0.01, 0.05) == pytest.approx(0.02)


def test_boundary_minimum_rejected():
    data = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25)
    with pytest.raises(CollapseError, match="widen"):
        collapse.fit_exponents(data, GridSpec(0.5, 1.2, 0.5, 1.2, 0.1))


def test_fit_json_round_trip(tmp_path):
    data = collapse.synthetic_dataset([5, 6, 7, 8], PS, 1.9, 2.1, 0.25, noise=0.02, rng=np.random.default_rng(1))
    fit = collapse.fit_exponents(data, refine=False)
    path = tmp_path / "fit.json"
    fit.write_json(path)
    assert collapse.CollapseFit.read_json(path) == fit
    blob = json.loads(path.read_text())
    assert {"gamma0", "nu0", "d_gamma_plus", "d_gamma_minus", "d_nu_plus", "d_nu_minus", "loss_at_min", "p_star_used", "epsilon", "grid"} <= set(blob)


def test_dataset_csv_round_trip(tmp_path):
    data = collapse.synthetic_dataset([5, 6], PS, 1.9, 2.1, 0.25, noise=0.02, rng=np.random.default_rng(2))
    path = tmp_path / "d.csv"
    data.write_csv(path)
    back = CollapseDataset.read_csv(path, 0.25)
    np.testing.assert_array_equal(back.s_mean, data.s_mean)
    np.testing.assert_array_equal(back.p, data.p)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(CollapseError):
        CollapseDataset.read_csv(tmp_path / "bad.csv", 0.25)


def test_largest_sizes_and_p_star_estimate():
    data = collapse.synthetic_dataset([3, 4, 5, 6, 7, 8], PS, 1.9, 2.1, 0.25)
    assert data.largest().sizes == [5, 6, 7, 8]
    assert collapse.estimate_p_star([0.1, 0.2, 0.3], [0.2, 0.5, 0.1]) == 0.2
