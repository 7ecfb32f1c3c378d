"""Photon-number layer: distributions, loss channel, generating function."""

import math

import numpy as np
import pytest
from scipy import stats

from spatscert.fock import (
    FockDensityMatrix,
    PhotonNumberDistribution,
    StateParams,
    apply_loss,
    coherent_amplitudes,
    coherent_matrix,
    default_cutoff_hint,
    diag_to_matrix,
    diagonal_dist,
    loss_matrix,
    lossy_spats_dist,
    mandel_q,
    mean_photon,
    pgf_eval,
    photon_variance,
    spats_dist,
    thermal_dist,
)

NBAR_GRID = [0.0, 0.3, 0.5, 0.98, 1.2, 2.0, 3.0]
ETA_GRID = [0.01, 0.07, 0.25, 0.4, 0.5, 0.75, 0.9, 1.0]


def test_state_params_validation():
    with pytest.raises(ValueError):
        StateParams(-0.1, 0.5)
    with pytest.raises(ValueError):
        StateParams(1.0, 1.5)
    with pytest.raises(ValueError):
        StateParams(1.0, -0.01)
    with pytest.raises(ValueError):
        StateParams(math.nan, 0.5)


@pytest.mark.parametrize("nbar", NBAR_GRID)
@pytest.mark.parametrize("eta", [0.1, 0.6, 1.0])
def test_state_params_mean_photon(nbar, eta):
    assert StateParams(nbar, eta).mean_photon == pytest.approx(eta * (2 * nbar + 1))


def test_distribution_validation():
    with pytest.raises(ValueError):
        PhotonNumberDistribution(np.array([0.5, -0.01, 0.51]))
    with pytest.raises(ValueError):
        PhotonNumberDistribution(np.array([0.5, 0.4]))  # sum far from 1
    with pytest.raises(ValueError):
        PhotonNumberDistribution(np.array([0.5, math.inf]))


@pytest.mark.parametrize("nbar", NBAR_GRID)
def test_thermal_closed_form(nbar):
    dist = thermal_dist(nbar)
    k = np.arange(dist.cutoff + 1)
    expected = nbar**k / (nbar + 1.0) ** (k + 1)
    np.testing.assert_allclose(dist.probs, expected, rtol=0, atol=1e-15)
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-10)
    assert dist.mean() == pytest.approx(nbar, abs=1e-8 * (1 + nbar))
    assert dist.variance() == pytest.approx(nbar * (nbar + 1), rel=1e-7, abs=1e-8)


@pytest.mark.parametrize("nbar", NBAR_GRID)
def test_spats_raising_operator_oracle(nbar):
    # independent route: apply the creation operator to the thermal density
    # matrix, n-th diagonal of a^dag rho a is (k+1) p_k shifted up one
    cut = default_cutoff_hint(nbar) + 20
    p_th = np.array([nbar**k / (nbar + 1.0) ** (k + 1) for k in range(cut)])
    raised = np.zeros(cut + 1)
    raised[1:] = (np.arange(cut) + 1) * p_th
    raised /= raised.sum()
    dist = spats_dist(nbar)
    size = min(dist.probs.size, raised.size)
    np.testing.assert_allclose(dist.probs[:size], raised[:size], rtol=0, atol=5e-10)
    assert dist.probs[0] == 0.0
    # mean error is bounded by truncated tail mass (1e-10) times the cutoff
    assert dist.mean() == pytest.approx(2 * nbar + 1, rel=1e-8)


def test_spats_mean_exact_low_occupation():
    # adding a photon to vacuum gives the ideal single photon
    dist = spats_dist(0.0)
    assert dist.probs[1] == pytest.approx(1.0, abs=1e-14)
    assert dist.mean() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("eta", [0.0, 0.3, 0.7, 1.0])
def test_loss_matrix_binomial_oracle(eta):
    cut = 12
    mat = loss_matrix(cut, eta)
    for n in range(cut + 1):
        expected = stats.binom.pmf(np.arange(cut + 1), n, eta)
        np.testing.assert_allclose(mat[:, n], expected, rtol=0, atol=1e-13)
    # each input Fock level maps to a normalized output distribution
    np.testing.assert_allclose(mat.sum(axis=0), np.ones(cut + 1), atol=1e-12)


@pytest.mark.parametrize("nbar", [0.0, 0.5, 2.0])
def test_loss_composition(nbar):
    dist = spats_dist(nbar)
    once = apply_loss(dist, 0.8 * 0.5)
    twice = apply_loss(apply_loss(dist, 0.8), 0.5)
    size = min(once.probs.size, twice.probs.size)
    np.testing.assert_allclose(once.probs[:size], twice.probs[:size], atol=1e-12)


def test_loss_identity_and_blackout():
    dist = spats_dist(0.7)
    same = apply_loss(dist, 1.0)
    np.testing.assert_allclose(same.probs[: dist.probs.size], dist.probs, atol=1e-12)
    dark = apply_loss(dist, 0.0)
    assert dark.probs[0] == pytest.approx(1.0, abs=1e-12)


def test_apply_loss_rejects_bad_eta():
    with pytest.raises(ValueError):
        apply_loss(thermal_dist(1.0), 1.2)
    with pytest.raises(ValueError):
        apply_loss(thermal_dist(1.0), -0.1)


@pytest.mark.parametrize("nbar", NBAR_GRID)
@pytest.mark.parametrize("eta", ETA_GRID)
def test_lossy_mean_photon(nbar, eta):
    dist = lossy_spats_dist(StateParams(nbar, eta))
    assert dist.mean() == pytest.approx(eta * (2 * nbar + 1), rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("nbar", [0.0, 0.5, 0.98, 2.0])
@pytest.mark.parametrize("eta", [0.07, 0.3, 0.65, 1.0])
@pytest.mark.parametrize("z", [-1.0, -0.5, 0.0, 0.4, 1.0])
def test_pgf_dual_route(nbar, eta, z):
    # closed form Phi(z) with z -> 1 - eta + eta z against the Fock sum
    params = StateParams(nbar, eta)
    dist = lossy_spats_dist(params)
    fock_sum = np.polynomial.polynomial.polyval(z, dist.probs)
    assert pgf_eval(params, z) == pytest.approx(fock_sum, abs=1e-9)


@pytest.mark.parametrize("nbar", [0.0, 0.98, 3.0])
def test_pgf_special_values(nbar):
    params = StateParams(nbar, 0.4)
    dist = lossy_spats_dist(params)
    assert pgf_eval(params, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert pgf_eval(params, 0.0) == pytest.approx(float(dist.probs[0]), abs=1e-10)


def test_moment_helpers_match_direct_sums():
    dist = lossy_spats_dist(StateParams(1.3, 0.45))
    n = np.arange(dist.probs.size)
    mean = float(np.sum(n * dist.probs))
    var = float(np.sum(n**2 * dist.probs) - mean**2)
    assert mean_photon(dist) == pytest.approx(mean, rel=1e-9)
    assert photon_variance(dist) == pytest.approx(var, rel=1e-9)


@pytest.mark.parametrize("nbar", [0.1, 0.5, 0.707, 1.0, 2.0])
@pytest.mark.parametrize("eta", [0.1, 0.5, 0.9])
def test_mandel_eta_scaling(nbar, eta):
    # loss rescales the Mandel parameter linearly: Q(eta) = eta * Q(1)
    lossless = mandel_q(lossy_spats_dist(StateParams(nbar, 1.0), cutoff_hint=220))
    lossy = mandel_q(lossy_spats_dist(StateParams(nbar, eta), cutoff_hint=220))
    assert lossy == pytest.approx(eta * lossless, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("eta", [0.1, 0.5, 0.9])
def test_mandel_sign_boundary(eta):
    below = mandel_q(lossy_spats_dist(StateParams(1 / math.sqrt(2) - 1e-3, eta), cutoff_hint=200))
    above = mandel_q(lossy_spats_dist(StateParams(1 / math.sqrt(2) + 1e-3, eta), cutoff_hint=200))
    assert below < 0 < above


def test_mandel_thermal_is_nbar():
    assert mandel_q(thermal_dist(1.7)) == pytest.approx(1.7, rel=1e-7)


def test_mandel_zero_mean_raises():
    with pytest.raises(ValueError):
        mandel_q(thermal_dist(0.0))


def test_density_matrix_validation():
    good = np.diag([0.6, 0.4]).astype(complex)
    FockDensityMatrix(good)
    bad_herm = good.copy()
    bad_herm[0, 1] = 0.3j
    with pytest.raises(ValueError):
        FockDensityMatrix(bad_herm)
    with pytest.raises(ValueError):
        FockDensityMatrix(np.diag([0.7, 0.4]).astype(complex))


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0 + 1.0j])
def test_coherent_amplitudes_poisson(beta):
    cut = 40
    c = coherent_amplitudes(beta, cut)
    expected = stats.poisson.pmf(np.arange(cut + 1), abs(beta) ** 2)
    np.testing.assert_allclose(np.abs(c) ** 2, expected, atol=1e-12)


def test_coherent_matrix_is_pure():
    rho = coherent_matrix(1.5 + 0.5j, 40).mat
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
    assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-9)


def test_diag_matrix_round_trip():
    dist = lossy_spats_dist(StateParams(0.8, 0.6))
    back = diagonal_dist(diag_to_matrix(dist))
    np.testing.assert_allclose(back.probs, dist.probs, atol=1e-14)


@pytest.mark.parametrize("nbar", NBAR_GRID)
def test_default_cutoff_hint_tail(nbar):
    # the hint is a lower bound; construction extends until the dropped
    # tail mass is below 1e-10, so the stored tail must be negligible
    dist = lossy_spats_dist(StateParams(nbar, 1.0))
    assert dist.cutoff >= default_cutoff_hint(nbar)
    assert dist.probs[-1] < 1e-9
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)
