import pytest

from hcdlab.cd_harness import (
    default_target,
    homothety_exponent,
    homothety_volumes,
    translated_sampler,
    unit_time_ratio,
)
from hcdlab.errors import UsageError
from hcdlab.heisenberg import IDENTITY, HPoint

N = 20_000


def test_euclidean_exponent_is_five(euclid):
    fit = homothety_exponent(euclid, IDENTITY, default_target(euclid), 1, n=N)
    assert fit.slope == pytest.approx(5.0, abs=0.2)
    assert fit.r2 > 0.999


@pytest.mark.slow
def test_lp4_exponent_is_five(lp4):
    fit = homothety_exponent(lp4, IDENTITY, default_target(lp4), 1, n=N)
    assert fit.slope == pytest.approx(5.0, abs=0.2)


def test_left_translation_keeps_exponent(euclid):
    base = homothety_exponent(euclid, IDENTITY, default_target(euclid), 1, n=N).slope
    p = HPoint(0.4, -0.3, 0.2)
    moved = homothety_exponent(euclid, p, translated_sampler(p, default_target(euclid)), 1, n=N)
    assert abs(moved.slope - base) < 0.05


def test_volumes_shrink(euclid):
    vols = homothety_volumes(euclid, IDENTITY, default_target(euclid), (0.5, 0.25), 2, n=5000)
    ratio = vols[1].value / vols[0].value
    assert 2.0**-5 * 0.8 < ratio < 2.0**-5 * 1.25


def test_unit_time_is_identity(euclid):
    assert unit_time_ratio(euclid, IDENTITY, default_target(euclid), 1, n=N) == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("t", [0.0, 1.5])
def test_bad_time(euclid, t):
    with pytest.raises(UsageError):
        homothety_volumes(euclid, IDENTITY, default_target(euclid), (t,), 0, n=100)
