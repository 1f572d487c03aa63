import numpy as np
import pytest

from dispersed_tde.channel import (ChannelRealization, ReceivedSignal, snr_to_sigma,
                                   substream, synthesize_received)
from dispersed_tde.estimators import (Refine, SearchGrid, _cross_spectra, _profile,
                                      branch_ml, correlate, joint_ml)
from dispersed_tde.waveform import SampledSignal, derivative_energy, energy

from conftest import make_plan


def on_grid_delay(plan, k):
    return plan.feasible_delays()[0] + k * plan.dt_s


def test_autocorrelation_peak(plan1):
    s = plan1.bands[0].waveform
    tau = on_grid_delay(plan1, 40)
    r = synthesize_received(plan1, ChannelRealization.fixed(tau, 1))[0]
    c = correlate(r, s, tau)
    assert c.real == pytest.approx(energy(s), abs=1e-9)
    assert abs(c.imag) <= 1e-9


def test_correlation_phase(plan1):
    s = plan1.bands[0].waveform
    tau = on_grid_delay(plan1, 40) + 0.3 * plan1.dt_s
    r = synthesize_received(plan1, ChannelRealization.fixed(tau, 1, phase=np.pi / 3))[0]
    assert np.angle(correlate(r, s, tau)) == pytest.approx(np.pi / 3, abs=1e-9)


def test_disjoint_supports_orthogonal():
    plan = make_plan((100e3,), span_samples=400)
    s = plan.bands[0].waveform
    lo, hi = plan.feasible_delays()
    r = synthesize_received(plan, ChannelRealization.fixed(lo, 1))[0]
    assert abs(correlate(r, s, hi)) <= 1e-12


def test_correlate_out_of_window(plan1):
    s = plan1.bands[0].waveform
    r = synthesize_received(plan1, ChannelRealization.fixed(on_grid_delay(plan1, 0), 1))[0]
    with pytest.raises(ValueError):
        correlate(r, s, 0.0)


def test_phase_projection_identity(plan1):
    s = plan1.bands[0].waveform
    p = plan1.with_noise_psd(0.05)
    r = synthesize_received(p, ChannelRealization.fixed(on_grid_delay(p, 60), 1, 0.8, 2.0), 3)[0]
    phis = np.linspace(0, 2 * np.pi, 20001)
    for tau in on_grid_delay(p, 50) + p.dt_s * np.array([0.0, 3.7, 12.2]):
        c = correlate(r, s, tau, 2 * np.pi * 300.0)
        best = np.max(np.real(c * np.exp(-1j * phis)))
        assert best == pytest.approx(abs(c), rel=1e-7)


def test_grid_profile_matches_direct_correlation(plan3):
    p = plan3.with_noise_psd(0.01)
    recv = synthesize_received(p, ChannelRealization.fixed(on_grid_delay(p, 90) + 0.4 * p.dt_s, 3), 5)
    up = 4
    for r, b in zip(recv.branches, p.bands):
        prof = _profile(_cross_spectra(r, b.waveform, [0.0]), p.dt_s, up)[0]
        base = int(round(up * p.feasible_delays()[0] / p.dt_s))
        for m in (base + 4 * 60 + 1, base + 4 * 95 + 3, base + 4 * 120):
            tau = m * p.dt_s / up
            assert prof[m] == pytest.approx(correlate(r, b.waveform, tau), rel=1e-9, abs=1e-9)


def test_noiseless_recovery(plan1):
    s = plan1.bands[0].waveform
    tau = on_grid_delay(plan1, 77)
    r = synthesize_received(plan1, ChannelRealization.fixed(tau, 1, 1.0, np.pi / 4))[0]
    est = branch_ml(r, s, SearchGrid.for_plan(plan1))
    assert est.tau_hat_s == pytest.approx(tau, abs=1e-6 * plan1.dt_s)
    assert est.a_hat == pytest.approx(1.0, abs=1e-6)
    assert est.phi_hat == pytest.approx(np.pi / 4, abs=1e-6)
    assert est.omega_hat == 0.0
    assert est.peak_metric == pytest.approx(energy(s), rel=1e-9)


@pytest.mark.parametrize("frac", [0.1, 0.37, 0.5, 0.81])
def test_noiseless_off_grid_within_refinement_tolerance(plan3, frac):
    tau = on_grid_delay(plan3, 50) + frac * plan3.dt_s
    recv = synthesize_received(plan3, ChannelRealization.fixed(tau, 3))
    grid = SearchGrid.for_plan(plan3)
    for r, b in zip(recv.branches, plan3.bands):
        assert abs(branch_ml(r, b.waveform, grid).tau_hat_s - tau) <= 1e-3 * plan3.dt_s


def test_true_peak_is_global_maximum(plan3):
    tau = on_grid_delay(plan3, 100)
    recv = synthesize_received(plan3, ChannelRealization.fixed(tau, 3))
    for r, b in zip(recv.branches, plan3.bands):
        prof = np.abs(_profile(_cross_spectra(r, b.waveform, [0.0]), plan3.dt_s, 4)[0])
        assert int(np.argmax(prof)) == int(round(4 * tau / plan3.dt_s))


def test_shift_equivariance(plan1):
    p = plan1.with_noise_psd(0.002)
    s = p.bands[0].waveform
    r = synthesize_received(p, ChannelRealization.fixed(on_grid_delay(p, 70) + 0.2 * p.dt_s, 1), 8)[0]
    lo, hi = p.feasible_delays()
    g = SearchGrid(p.dt_s / 4, (lo, hi - 10 * p.dt_s))
    shift = 7
    r2 = SampledSignal(np.roll(r.samples, shift), r.dt_s)
    g2 = SearchGrid(p.dt_s / 4, (lo + shift * p.dt_s, hi - 3 * p.dt_s))
    e1, e2 = branch_ml(r, s, g), branch_ml(r2, s, g2)
    assert e2.tau_hat_s - e1.tau_hat_s == pytest.approx(shift * p.dt_s, abs=1e-9 * p.dt_s)
    assert e2.a_hat == pytest.approx(e1.a_hat, rel=1e-9)


def test_phase_invariance(plan1):
    p = plan1.with_noise_psd(0.01)
    s = p.bands[0].waveform
    r = synthesize_received(p, ChannelRealization.fixed(on_grid_delay(p, 70) + 0.6 * p.dt_s, 1), 2)[0]
    g = SearchGrid.for_plan(p)
    theta = 2.2
    e1 = branch_ml(r, s, g)
    e2 = branch_ml(r.scaled(np.exp(1j * theta)), s, g)
    assert e2.tau_hat_s == pytest.approx(e1.tau_hat_s, abs=1e-9 * p.dt_s)
    assert e2.a_hat == pytest.approx(e1.a_hat, rel=1e-9)
    assert np.mod(e2.phi_hat - e1.phi_hat, 2 * np.pi) == pytest.approx(theta, abs=1e-9)


def test_cfo_search_recovers_offset():
    plan = make_plan((100e3,), cfo=True)
    s = plan.bands[0].waveform
    g = SearchGrid.for_plan(plan, 0)
    w = g.omegas()[14]
    tau = on_grid_delay(plan, 33)
    r = synthesize_received(plan, ChannelRealization.fixed(tau, 1, cfo=w))[0]
    est = branch_ml(r, s, g)
    assert est.omega_hat == w
    assert est.tau_hat_s == pytest.approx(tau, abs=1e-3 * plan.dt_s)
    assert est.a_hat == pytest.approx(1.0, abs=1e-6)


def test_grid_validation(plan1):
    with pytest.raises(ValueError):
        SearchGrid(0.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        SearchGrid(1e-7, (1.0, 0.0))
    with pytest.raises(ValueError):
        SearchGrid(1e-7, (0.0, 1.0), 0.0, (-1.0, 1.0))
    s = plan1.bands[0].waveform
    r = synthesize_received(plan1, ChannelRealization.fixed(on_grid_delay(plan1, 5), 1))[0]
    with pytest.raises(ValueError, match="integer fraction"):
        branch_ml(r, s, SearchGrid(plan1.dt_s / 3.5, plan1.feasible_delays()))
    with pytest.raises(ValueError, match="no grid points"):
        tau = on_grid_delay(plan1, 5) + 0.1 * plan1.dt_s
        branch_ml(r, s, SearchGrid(plan1.dt_s, (tau, tau + 0.5 * plan1.dt_s)))


def test_refine_none_stays_on_grid(plan1):
    s = plan1.bands[0].waveform
    tau = on_grid_delay(plan1, 20) + 0.3 * plan1.dt_s
    r = synthesize_received(plan1, ChannelRealization.fixed(tau, 1))[0]
    g = SearchGrid.for_plan(plan1, refine=Refine.NONE)
    est = branch_ml(r, s, g)
    assert (est.tau_hat_s / g.tau_step_s) == pytest.approx(round(est.tau_hat_s / g.tau_step_s), abs=1e-9)
    assert abs(est.tau_hat_s - tau) <= g.tau_step_s / 2


def _high_snr_trials(snr_db, n, seed):
    plan = make_plan((100e3,), span_samples=128)
    psd = snr_to_sigma(snr_db, 1.0)
    plan = plan.with_noise_psd(psd)
    s = plan.bands[0].waveform
    lo, hi = plan.feasible_delays()
    g = SearchGrid.for_plan(plan)
    err, a = np.empty(n), np.empty(n)
    for k in range(n):
        seq = np.random.SeedSequence(seed, spawn_key=(k,))
        tau = substream(seq, 90).uniform(lo + 20 * plan.dt_s, hi - 20 * plan.dt_s)
        ch = ChannelRealization.fixed(tau, 1, 1.0, substream(seq, 91).uniform(0, 2 * np.pi))
        est = branch_ml(synthesize_received(plan, ch, seq)[0], s, g)
        err[k], a[k] = est.tau_hat_s - tau, est.a_hat
    return err, a, psd, s


def test_high_snr_variances_match_prediction():
    err, a, psd, s = _high_snr_trials(30.0, 10_000, seed=21)
    assert err.var() == pytest.approx(psd / derivative_energy(s), rel=0.10)
    assert a.var() == pytest.approx(psd / energy(s), rel=0.10)


def test_asymptotically_unbiased():
    err, _, _, _ = _high_snr_trials(25.0, 10_000, seed=22)
    assert abs(err.mean()) <= 0.1 * err.std()


def test_joint_ml_single_band_matches_branch_ml(plan1):
    p = plan1.with_noise_psd(snr_to_sigma(15.0, 1.0))
    s = p.bands[0].waveform
    g = SearchGrid.for_plan(p)
    for k in range(20):
        seq = np.random.SeedSequence(4, spawn_key=(k,))
        ch = ChannelRealization.fixed(on_grid_delay(p, 60) + 0.37 * p.dt_s, 1, 1.0, 0.5)
        recv = synthesize_received(p, ch, seq)
        assert joint_ml(recv, p, g) == pytest.approx(branch_ml(recv[0], s, g).tau_hat_s,
                                                     abs=1e-3 * p.dt_s)


def test_joint_ml_noiseless(plan3):
    tau = on_grid_delay(plan3, 64)
    recv = synthesize_received(plan3, ChannelRealization.fixed(tau, 3, [0.3, 1.0, 0.7], [0.1, 2.0, 4.0]))
    assert joint_ml(recv, plan3, SearchGrid.for_plan(plan3)) == pytest.approx(tau, abs=1e-3 * plan3.dt_s)


def test_joint_ml_errors(plan3):
    recv = synthesize_received(plan3, ChannelRealization.fixed(on_grid_delay(plan3, 5), 3))
    g = SearchGrid.for_plan(plan3)
    with pytest.raises(ValueError):
        joint_ml(ReceivedSignal(recv.branches[:2]), plan3, g)
    with pytest.raises(ValueError):
        joint_ml(recv, plan3, [g, g])
