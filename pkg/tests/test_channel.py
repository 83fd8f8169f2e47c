"""Channel generation: path loss, drops, fading statistics, determinism."""

import numpy as np
import pytest

from risbeam.channel import (
    ChannelSet,
    FadingModel,
    Geometry,
    PathLossModel,
    drop_users,
    generate_channels,
    path_loss,
    sample_rayleigh,
    sample_rician,
    ula_steering,
)
from risbeam.rng import stream
from risbeam.system_model import desk_scenario


def test_path_loss_reference_distance():
    model = PathLossModel(beta0=1e-3)
    assert path_loss(model, 1.0, 3.2) == pytest.approx(1e-3)
    assert path_loss(PathLossModel(beta0=1.0), 1.0, 3.2) == pytest.approx(1.0)


def test_path_loss_scalar_value():
    # independent scalar evaluation of beta0 * 20**-2.2
    model = PathLossModel(beta0=1e-3)
    assert path_loss(model, 20.0, 2.2) == pytest.approx(1.3725e-6, rel=1e-3)


def test_path_loss_rejects_nonpositive_distance():
    model = PathLossModel()
    with pytest.raises(ValueError):
        path_loss(model, 0.0, 2.0)
    with pytest.raises(ValueError):
        path_loss(model, -3.0, 2.0)


def test_drop_users_containment_and_determinism():
    sc = desk_scenario(n_users=5)
    geo = drop_users(sc, stream(11, "geometry"))
    assert geo.ue_positions.shape == (5, 2)
    (x_lo, x_hi), (y_lo, y_hi) = sc.ue_region
    assert np.all(geo.ue_positions[:, 0] >= x_lo) and np.all(geo.ue_positions[:, 0] <= x_hi)
    assert np.all(geo.ue_positions[:, 1] >= y_lo) and np.all(geo.ue_positions[:, 1] <= y_hi)

    geo2 = drop_users(sc, stream(11, "geometry"))
    np.testing.assert_array_equal(geo.ue_positions, geo2.ue_positions)


def test_drop_users_mean_near_centroid():
    # law of large numbers: mean of 1e4 single-user drops approaches the
    # rectangle centroid; tolerance 2% of the side length.
    sc = desk_scenario(n_users=1)
    rng = stream(3, "geometry")
    pos = np.array([drop_users(sc, rng).ue_positions[0] for _ in range(10_000)])
    centroid = np.array([100.0, 0.0])
    side = 200.0
    assert np.all(np.abs(pos.mean(axis=0) - centroid) < 0.02 * side)


def test_rayleigh_zero_power():
    h = sample_rayleigh(4, 3, 0.0, stream(0, "x"))
    np.testing.assert_array_equal(h, np.zeros((4, 3), complex))


def test_rayleigh_rejects_negative_power():
    with pytest.raises(ValueError):
        sample_rayleigh(1, 1, -1.0, stream(0, "x"))


def test_rayleigh_power_calibration():
    h = sample_rayleigh(100_000, 1, 1.0, stream(1, "ray"))
    mean_sq = np.mean(np.abs(h) ** 2)
    assert 0.98 < mean_sq < 1.02
    assert np.var(h.real) == pytest.approx(0.5, rel=0.02)
    assert np.var(h.imag) == pytest.approx(0.5, rel=0.02)


def test_rician_limits_and_power():
    rng = stream(2, "ric")
    los = ula_steering(6, 0.4)[None, :]

    # huge factor: output collapses onto the LOS component
    h = sample_rician(1, 6, 1e12, 2.5, los, rng)
    np.testing.assert_allclose(h, np.sqrt(2.5) * los, rtol=1e-5)

    # zero factor: statistically Rayleigh
    h0 = sample_rician(100_000, 1, 0.0, 1.0, np.ones((100_000, 1)), rng)
    assert np.mean(np.abs(h0) ** 2) == pytest.approx(1.0, rel=0.02)

    for k_factor in (1.0, 10.0, 100.0):
        h = sample_rician(100_000, 1, k_factor, 3.0, np.ones((100_000, 1)), rng)
        assert np.mean(np.abs(h) ** 2) == pytest.approx(3.0, rel=0.02)


def test_rician_shape_mismatch():
    with pytest.raises(ValueError):
        sample_rician(2, 2, 1.0, 1.0, np.ones((3, 2)), stream(0, "x"))


def test_rician_mixing_weights_at_extremes():
    # k -> inf kills the scattered part, k = 0 kills the LOS part, at the
    # 1e-6 coefficient level
    assert np.sqrt(1.0 / (1e12 + 1.0)) < 1e-5
    assert np.sqrt(0.0 / (0.0 + 1.0)) == 0.0


def test_steering_unit_modulus():
    a = ula_steering(16, 0.7)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)


def test_generate_channels_deterministic():
    sc = desk_scenario()
    geo = drop_users(sc, stream(5, "geometry"))
    ch1 = generate_channels(sc, geo, stream(5, "channels"))
    ch2 = generate_channels(sc, geo, stream(5, "channels"))
    assert ch1.fingerprint() == ch2.fingerprint()
    np.testing.assert_array_equal(ch1.h_direct, ch2.h_direct)
    np.testing.assert_array_equal(ch1.h_bs_ris, ch2.h_bs_ris)
    np.testing.assert_array_equal(ch1.h_ris_ue, ch2.h_ris_ue)


def test_generate_channels_rejects_coincident_ue():
    sc = desk_scenario(n_users=1)
    geo = Geometry(
        bs_position=np.array([0.0, 0.0]),
        ris_position=np.array([20.0, 0.0]),
        ue_positions=np.array([[0.0, 0.0]]),
    )
    with pytest.raises(ValueError):
        generate_channels(sc, geo, stream(0, "channels"))


@pytest.mark.slow
def test_direct_channel_power_calibration():
    # UE at 1 m from the BS: per-entry mean power over many regenerations
    # approaches beta0.
    sc = desk_scenario(n_users=1, n_ris=2, n_active=0)
    geo = Geometry(
        bs_position=np.array([0.0, 0.0]),
        ris_position=np.array([20.0, 0.0]),
        ue_positions=np.array([[1.0, 0.0]]),
    )
    rng = stream(7, "calib")
    draws = np.concatenate(
        [np.abs(generate_channels(sc, geo, rng).h_direct.ravel()) ** 2 for _ in range(60_000)]
    )
    assert draws.size >= 100_000
    assert draws.mean() == pytest.approx(sc.path_loss.beta0, rel=0.02)


@pytest.mark.slow
def test_reflected_channel_power_calibration():
    # per-entry E|.|^2 of the Rician links matches beta(d) within 2%
    sc = desk_scenario(n_users=1, n_ris=4)
    geo = drop_users(sc, stream(8, "geometry"))
    rng = stream(8, "calib")
    d1 = np.linalg.norm(geo.ris_position - geo.bs_position)
    d2 = np.linalg.norm(geo.ue_positions[0] - geo.ris_position)
    beta1 = path_loss(sc.path_loss, d1, sc.path_loss.eps_bs_ris)
    beta2 = path_loss(sc.path_loss, d2, sc.path_loss.eps_ris_ue)

    p1, p2 = [], []
    for _ in range(15_000):
        ch = generate_channels(sc, geo, rng)
        p1.append(np.abs(ch.h_bs_ris.ravel()) ** 2)
        p2.append(np.abs(ch.h_ris_ue.ravel()) ** 2)
    assert np.concatenate(p1).size >= 100_000
    assert np.concatenate(p1).mean() == pytest.approx(beta1, rel=0.02)
    assert np.concatenate(p2).mean() == pytest.approx(beta2, rel=0.02)


def test_direct_power_decreases_with_exponent():
    # doubling the direct exponent with d > 1 strictly reduces mean power
    sc_lo = desk_scenario(n_users=2)
    sc_hi = desk_scenario(
        n_users=2, path_loss=PathLossModel(eps_direct=6.4)
    )
    geo = drop_users(sc_lo, stream(9, "geometry"))
    assert np.all(np.linalg.norm(geo.ue_positions, axis=1) > 1.0)
    ch_lo = generate_channels(sc_lo, geo, stream(9, "channels"))
    ch_hi = generate_channels(sc_hi, geo, stream(9, "channels"))
    p_lo = np.mean(np.abs(ch_lo.h_direct) ** 2, axis=1)
    p_hi = np.mean(np.abs(ch_hi.h_direct) ** 2, axis=1)
    assert np.all(p_hi < p_lo)


def test_channelset_validation():
    with pytest.raises(ValueError):
        ChannelSet(
            h_direct=np.zeros((2, 3), complex),
            h_bs_ris=np.zeros((4, 2), complex),  # antenna mismatch
            h_ris_ue=np.zeros((2, 4), complex),
        )
    with pytest.raises(ValueError):
        ChannelSet(
            h_direct=np.array([[np.nan + 0j]]),
            h_bs_ris=np.zeros((1, 1), complex),
            h_ris_ue=np.zeros((1, 1), complex),
        )


def test_fading_model_validation():
    with pytest.raises(ValueError):
        FadingModel(rician_k_bs_ris=-1.0)
    with pytest.raises(ValueError):
        PathLossModel(beta0=0.0)
