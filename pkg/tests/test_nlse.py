import math
from dataclasses import replace

import numpy as np
import pytest

from nlsechan import (
    ComplexField,
    EvaluationBudgetError,
    PropagationConfig,
    StepInstabilityError,
    ensemble_noise_stats,
    gamma_tilde_of_snr,
    make_grid,
    phase_mismatch_kernel,
    phi_perturbative,
    propagate,
    sample_gaussian_input,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture()
def grid():
    return make_grid(1e11, 16, 4)


@pytest.fixture()
def powered_link(link):
    return link.with_snr(100.0)


@pytest.fixture()
def input_field(grid, powered_link, rng):
    return sample_gaussian_input(grid, powered_link.signal_psd, rng)


# -- grid ----------------------------------------------------------------------


def test_grid_identities():
    g = make_grid(1e11, 32, 4)
    assert g.m_total == 128
    assert g.w_prime == pytest.approx(4e11)
    assert g.big_t == pytest.approx(TWO_PI * 32 / 1e11, rel=1e-15)
    assert g.big_t * g.w == pytest.approx(TWO_PI * g.m_meaning, rel=1e-15)
    assert g.big_t == pytest.approx(1.0 / g.delta_omega, rel=1e-15)
    assert g.delta_omega * TWO_PI * g.m_meaning == pytest.approx(g.w, rel=1e-15)
    assert g.delta_t == pytest.approx(g.big_t / g.m_total, rel=1e-15)


def test_grid_dense_equals_meaning_at_r1():
    g = make_grid(1e11, 8, 1)
    assert g.m_total == g.m_meaning
    assert g.w_prime == g.w
    assert bool(np.all(g.meaning_mask))


@pytest.mark.parametrize("bad", [0, 1])
def test_grid_rejects_small_m(bad):
    with pytest.raises(ValueError):
        make_grid(1e11, bad, 4)


def test_grid_rejects_fractional_oversampling():
    with pytest.raises(ValueError):
        make_grid(1e11, 16, 2.5)
    assert make_grid(1e11, 16, 2.0).oversampling == 2


# -- fields ----------------------------------------------------------------------


def test_transform_round_trip(grid, rng):
    f = ComplexField(rng.standard_normal(64) + 1j * rng.standard_normal(64),
                     "frequency", grid)
    back = f.to_time().to_frequency()
    assert np.linalg.norm(back.samples - f.samples) <= 1e-12 * np.linalg.norm(f.samples)


def test_gaussian_input_support(grid, rng):
    f = sample_gaussian_input(grid, 1e-16, rng)
    assert np.all(f.samples[~grid.meaning_mask] == 0.0)
    assert np.count_nonzero(f.samples) == grid.m_meaning


def test_gaussian_input_zero_power(grid, rng):
    assert np.all(sample_gaussian_input(grid, 0.0, rng).samples == 0.0)


def test_gaussian_input_mean_power(grid, powered_link):
    # ensemble time-average power -> p W / 2pi within 3 standard errors
    p = powered_link.signal_psd
    rng = np.random.default_rng(42)
    vals = np.array([sample_gaussian_input(grid, p, rng).time_average_power()
                     for _ in range(10_000)])
    expect = p * grid.w / TWO_PI
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - expect) <= 3.0 * se


def test_field_binary_round_trip(tmp_path, grid, input_field):
    path = tmp_path / "snap.nlsf"
    input_field.write_binary(path)
    back = ComplexField.read_binary(path, grid)
    assert back.domain == input_field.domain
    assert np.array_equal(back.samples, input_field.samples)


def test_field_binary_header_no_grid(tmp_path, grid, input_field):
    path = tmp_path / "snap.nlsf"
    input_field.to_time().write_binary(path)
    bare = ComplexField.read_binary(path)
    assert bare.domain == "time"
    assert bare.grid.m_total == grid.m_total
    assert bare.grid.big_t == pytest.approx(grid.big_t, rel=1e-15)
    assert np.array_equal(bare.samples, input_field.to_time().samples)


def test_field_binary_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a field at all")
    with pytest.raises(ValueError):
        ComplexField.read_binary(path)


def test_field_csv(tmp_path, input_field):
    path = tmp_path / "snap.csv"
    input_field.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,coordinate,re,im"
    assert len(lines) == 1 + input_field.grid.m_total


# -- propagation -------------------------------------------------------------------


def test_linear_channel_exact(grid, powered_link, input_field):
    link = replace(powered_link, gamma=0.0)
    out = propagate(input_field, link, PropagationConfig(n_steps=7))
    exact = np.exp(1j * link.beta * grid.omega**2 * link.length) * input_field.samples
    assert np.linalg.norm(out.samples - exact) <= 1e-10 * np.linalg.norm(exact)


def test_nondispersive_exact(grid, powered_link, input_field):
    link = replace(powered_link, beta=0.0)
    out = propagate(input_field, link, PropagationConfig(n_steps=9)).to_time()
    xt = input_field.to_time().samples
    exact = xt * np.exp(1j * link.gamma * link.length * np.abs(xt) ** 2)
    assert np.linalg.norm(out.samples - exact) <= 1e-10 * np.linalg.norm(exact)


def test_power_conservation(powered_link, input_field):
    out = propagate(input_field, powered_link, PropagationConfig(n_steps=300))
    pin = input_field.time_average_power()
    assert abs(out.time_average_power() - pin) <= 1e-9 * pin


def test_propagate_preserves_domain(powered_link, input_field):
    assert propagate(input_field, powered_link, PropagationConfig(n_steps=5)).domain \
        == "frequency"
    t = input_field.to_time()
    assert propagate(t, powered_link, PropagationConfig(n_steps=5)).domain == "time"


def test_noisy_run_deterministic(powered_link, input_field):
    cfg = PropagationConfig(n_steps=20, seed=99)
    a = propagate(input_field, powered_link, cfg, noise_q=powered_link.noise_psd)
    b = propagate(input_field, powered_link, cfg, noise_q=powered_link.noise_psd)
    assert np.array_equal(a.samples, b.samples)
    c = propagate(input_field, powered_link, replace(cfg, seed=100),
                  noise_q=powered_link.noise_psd)
    assert not np.array_equal(a.samples, c.samples)


def test_instability_guard_trips(grid, powered_link, input_field):
    # amplitude large enough to overflow the nonlinear phase to NaN
    blown = ComplexField(input_field.samples * 1e160, "frequency", grid)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(StepInstabilityError):
            propagate(blown, powered_link, PropagationConfig(n_steps=3))


def _order_slope(link, field, ladder, ref_n, scheme):
    ref = propagate(field, link, PropagationConfig(n_steps=ref_n)).samples
    errs = [np.linalg.norm(
        propagate(field, link, PropagationConfig(n_steps=n, scheme=scheme)).samples
        - ref) for n in ladder]
    return float(np.polyfit(np.log(ladder), np.log(errs), 1)[0])


def test_strang_order_two(link, grid, rng):
    strong = link.with_snr(360.0)  # gamma_tilde ~ 0.25
    field = sample_gaussian_input(grid, strong.signal_psd, rng)
    slope = _order_slope(strong, field, (250, 500, 1000), 8000, "strang")
    assert slope == pytest.approx(-2.0, abs=0.2)


def test_euler_order_one(link, grid, rng):
    strong = link.with_snr(360.0)
    field = sample_gaussian_input(grid, strong.signal_psd, rng)
    slope = _order_slope(strong, field, (250, 500, 1000), 8000, "euler")
    assert slope == pytest.approx(-1.0, abs=0.3)


def test_out_of_band_growth(link, grid, rng):
    field = sample_gaussian_input(grid, link.with_snr(100.0).signal_psd, rng)
    prev = -1.0
    for fac in (1.0, 2.0, 4.0):
        strong = replace(link, gamma=link.gamma * fac)
        out = propagate(field, strong, PropagationConfig(n_steps=400))
        leak = out.band_power(in_band=False)
        assert leak >= 0.0
        assert leak > prev
        prev = leak


# -- perturbative solution ------------------------------------------------------


def test_kernel_k_limit_and_branches():
    import mpmath as mp
    assert phase_mismatch_kernel(0.0) == 1.0
    # both branches against a 40-digit evaluation across the switch at 1e-2
    with mp.workdps(40):
        for mu in (3e-7j, 9.9e-3j, 1.01e-2j, 5e-2j, 0.3j, 40.0j):
            exact = complex((1 - mp.e ** (-mp.mpc(mu))) / mp.mpc(mu))
            assert abs(phase_mismatch_kernel(mu) - exact) < 1e-13


def test_phi_linear_limit(grid, powered_link, input_field):
    link = replace(powered_link, gamma=0.0)
    pert = phi_perturbative(input_field, link)
    exact = np.exp(1j * link.beta * grid.omega**2 * link.length) * input_field.samples
    assert np.allclose(pert.samples, exact, rtol=1e-12, atol=0.0)


def test_phi_budget_guard(powered_link, rng):
    wide = make_grid(1e11, 96, 1)
    field = sample_gaussian_input(wide, powered_link.signal_psd, rng)
    with pytest.raises(EvaluationBudgetError):
        phi_perturbative(field, powered_link, budget=64)


def test_phi_gamma_scaling(link, grid, rng):
    # residual against the full solver shrinks ~x4 when gamma halves
    base = link.with_snr(100.0)
    field = sample_gaussian_input(grid, base.signal_psd, rng)
    gt0 = gamma_tilde_of_snr(base, 100.0)
    res = []
    for fac in (1.0, 0.5, 0.25):
        scaled = replace(base, gamma=base.gamma * (0.05 / gt0) * fac)
        full = propagate(field, scaled, PropagationConfig(n_steps=3000))
        res.append(full.l2_distance(phi_perturbative(field, scaled)))
    slope = float(np.polyfit(np.log([1.0, 0.5, 0.25]), np.log(res), 1)[0])
    assert slope == pytest.approx(2.0, abs=0.1)


def test_phi_wrap_convention_matches_fft(link):
    # 3 occupied bins at the grid edge force index wrapping; the odd-in-gamma
    # part of the full solver isolates the first-order term
    g1 = make_grid(1e11, 8, 1)
    xw = np.zeros(8, dtype=complex)
    xw[[3, 6, 7]] = [1.0 + 0.5j, -0.3 + 1.0j, 0.8 - 0.2j]
    field = ComplexField(xw, "frequency", g1)
    peak = float(np.max(np.abs(field.to_time().samples)))
    small = replace(link, beta=5e-24, gamma=5e-5 / (link.length * peak**2))
    cfg = PropagationConfig(n_steps=4000)
    plus = propagate(field, small, cfg).samples
    minus = propagate(field, replace(small, gamma=-small.gamma), cfg).samples
    odd = 0.5 * (plus - minus)
    phi1 = phi_perturbative(field, small).samples \
        - phi_perturbative(field, replace(small, gamma=0.0)).samples
    assert np.linalg.norm(odd - phi1) <= 1e-8 * np.linalg.norm(phi1)


def test_phi_sine_grid_converges_to_continuum(link):
    # the two dispersion conventions agree in the fine-grid limit
    diffs = []
    for r in (2, 4, 8):
        g = make_grid(1e11, 8, r)
        rng = np.random.default_rng(7)
        field = sample_gaussian_input(g, link.with_snr(100.0).signal_psd, rng)
        a = phi_perturbative(field, link, dispersion="continuum")
        b = phi_perturbative(field, link, dispersion="sine_grid")
        diffs.append(a.l2_distance(b) / math.sqrt(field.time_average_power() * g.big_t))
    assert diffs[0] > diffs[1] > diffs[2]


# -- noise ensembles ---------------------------------------------------------------


def test_ensemble_added_power_linear(link, rng):
    grid = make_grid(link.bandwidth, 32, 4)
    flat = replace(link.with_snr(100.0), gamma=0.0)
    stats = ensemble_noise_stats(flat, grid, PropagationConfig(n_steps=25),
                                 300, seed=5, q_factors=(1.0,))
    expect = flat.noise_psd * flat.length * grid.w_prime / TWO_PI
    assert abs(stats.mean_added_power - expect) <= 3.0 * stats.added_power_std_error


def test_ensemble_sqrt_q_scaling(link):
    grid = make_grid(link.bandwidth, 16, 4)
    stats = ensemble_noise_stats(link.with_snr(100.0), grid,
                                 PropagationConfig(n_steps=25), 150, seed=6)
    assert stats.scaling_fit == pytest.approx(0.5, abs=0.05)


def test_ensemble_zero_noise(link):
    grid = make_grid(link.bandwidth, 16, 4)
    stats = ensemble_noise_stats(link.with_snr(100.0), grid,
                                 PropagationConfig(n_steps=10), 5, seed=7,
                                 q_factors=(0.0,))
    assert stats.mean_added_power == 0.0
    assert stats.mean_deviation_norm == 0.0


def test_ensemble_thread_independence(link):
    grid = make_grid(link.bandwidth, 16, 4)
    kwargs = dict(n_realizations=40, seed=8)
    a = ensemble_noise_stats(link.with_snr(100.0), grid,
                             PropagationConfig(n_steps=10), threads=1, **kwargs)
    b = ensemble_noise_stats(link.with_snr(100.0), grid,
                             PropagationConfig(n_steps=10), threads=4, **kwargs)
    assert a == b
