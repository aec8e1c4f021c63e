import math

import numpy as np
import pytest

from secnoma.errors import DimensionError, UnattainableEHError
from secnoma.model import (
    ChannelRealization,
    CovarianceDesign,
    EhModel,
    Requirements,
    VectorDesign,
    c4_fraction,
    c5_fractions,
    eh_input_threshold,
    harvest_curve,
    harvested_power,
    secrecy_rates,
    user2_secrecy_legs,
    verify_design,
)

from conftest import cn, random_channel, random_design

# [DERIVED] 50-digit mpmath root of the sigmoid harvesting curve at the Table III point
C_TABLE3 = 5.3235839179795472e-4
# [DERIVED] 50-digit mpmath evaluation of the curve at its turn-on point b
PHI_AT_B = 1.1557401991185120e-2


def test_eh_threshold_table3():
    eh = EhModel()
    c = eh_input_threshold(eh, 1e-3)
    assert c == pytest.approx(C_TABLE3, rel=1e-12)
    assert abs(harvest_curve(c, eh) - 1e-3) <= 1e-9


def test_curve_examples():
    eh = EhModel()
    assert harvest_curve(0.0, eh) == pytest.approx(0.0, abs=1e-18)
    assert harvest_curve(eh.b, eh) == pytest.approx(PHI_AT_B, rel=1e-12)
    assert abs(harvest_curve(1.0, eh) - eh.p_max) <= 1e-12
    assert eh_input_threshold(eh, PHI_AT_B) == pytest.approx(eh.b, rel=1e-10)


def test_unattainable_and_inactive_targets():
    eh = EhModel()
    with pytest.raises(UnattainableEHError):
        eh_input_threshold(eh, eh.p_max)
    assert eh_input_threshold(eh, 0.0) <= 1e-15
    assert eh_input_threshold(eh, -1.0) <= 0


def test_psi_range_and_curve_monotone():
    eh = EhModel()
    assert 0 < eh.psi_e < 0.5
    x = np.linspace(0, 0.02, 2001)
    y = harvest_curve(x, eh)
    assert np.all(np.diff(y) > 0)
    assert np.all((y >= 0) & (y < eh.p_max))


@pytest.mark.parametrize("target", [1e-6, 1e-4, 1e-3, 0.01, 0.02, 0.0239])
def test_threshold_inverts_curve(target):
    eh = EhModel()
    assert harvest_curve(eh_input_threshold(eh, target), eh) == pytest.approx(target, rel=1e-9)


def test_rate_example():
    ch = ChannelRealization([1, 0], [0.5, 0], [0, 0], 1.0, 1.0, 1.0)
    d = VectorDesign([1, 0], [2, 0], np.zeros((2, 2)))
    r1, r2 = secrecy_rates(d, ch)
    assert r1 == pytest.approx(1.0, abs=1e-12)
    assert r2 == pytest.approx(0.84799690655495005, abs=1e-12)


def test_zero_design_rates(rng):
    ch = random_channel(rng, 3)
    z = CovarianceDesign(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)))
    assert secrecy_rates(z, ch) == (0.0, 0.0)


def test_rate_fraction_identities(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        ch = random_channel(rng, n, tuple(10.0 ** rng.uniform(-3, 0, 3)))
        d = random_design(rng, n)
        r1, r2 = secrecy_rates(d, ch)
        legs = user2_secrecy_legs(d, ch)
        assert 2.0 ** (-r1) == pytest.approx(c4_fraction(d, ch), rel=1e-10)
        fa, fb = c5_fractions(d, ch)
        assert 2.0 ** (-legs[0]) == pytest.approx(fa, rel=1e-10)
        assert 2.0 ** (-legs[1]) == pytest.approx(fb, rel=1e-10)
        assert r2 == pytest.approx(min(legs), abs=1e-12)


def test_phase_invariance_and_vector_form(rng):
    n = 4
    ch = random_channel(rng, n)
    w1, w2 = cn(rng, n), cn(rng, n)
    S = random_design(rng, n).Sigma
    vec = VectorDesign(w1, w2, S)
    r = secrecy_rates(vec, ch)
    assert secrecy_rates(vec.as_covariance(), ch) == r
    rot = ChannelRealization(ch.h1 * np.exp(0.7j), ch.h2 * np.exp(-2j), ch.g * 1j, ch.sigma1_sq, ch.sigma2_sq, ch.sigma_e_sq)
    np.testing.assert_allclose(secrecy_rates(vec, rot), r, atol=1e-12)


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelRealization([1, 0], [2, 0], [1, 1], 1, 1, 1)  # ordering
    with pytest.raises(ValueError):
        ChannelRealization([1], [1], [1], 0.0, 1, 1)
    with pytest.raises(DimensionError):
        ChannelRealization([1, 0], [1], [1, 0], 1, 1, 1)


def test_channel_dict_round_trip(rng):
    ch = random_channel(rng, 3)
    back = ChannelRealization.from_dict(ch.to_dict())
    assert back.digest() == ch.digest()


def test_verify_design_examples():
    ch = ChannelRealization([1, 0], [0.5, 0], [0, 1], 1.0, 1.0, 1.0)
    z = CovarianceDesign(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
    eh = EhModel()
    assert verify_design(z, ch, Requirements(0, 0, 0), eh).feasible
    rep = verify_design(z, ch, Requirements(0, 0, 1e-3), eh)
    assert not rep.feasible
    assert rep.eh_slack == pytest.approx(-1e-3, abs=1e-15)


def test_harvested_power_closed_form(rng):
    ch = random_channel(rng, 3)
    eh = EhModel()
    ug = ch.g / np.linalg.norm(ch.g)
    c = eh_input_threshold(eh, 1e-3)
    p = c / np.vdot(ch.g, ch.g).real
    d = CovarianceDesign(np.zeros((3, 3)), np.zeros((3, 3)), p * np.outer(ug, ug.conj()))
    assert harvested_power(d, ch, eh) == pytest.approx(1e-3, rel=1e-9)
    assert math.isclose(d.total_power, p, rel_tol=1e-12)
