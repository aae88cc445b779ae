"""Tests for the full extension: construction, verification and the Bartnik bracket"""

import math

import numpy as np
import pytest

from horizonlab.core.errors import InputError
from horizonlab.services.extension import (
    ExtensionOptions,
    adm_mass,
    bartnik_mass_estimate,
    below_right_margin,
    build_extension,
    hawking_mass,
    verify,
)
from horizonlab.services.metric_path import build_path
from horizonlab.services.profiles import Profile
from horizonlab.services.sphere_field import ScalarField, get_grid

N_TIME = 16
MASS = 0.55
OPTIONS = ExtensionOptions(n_time=N_TIME, epsilon_cap=0.1)


@pytest.fixture(scope="module")
def round_path(round_w):
    return build_path(round_w, n_time=N_TIME)


@pytest.fixture(scope="module")
def round_extension(round_w, round_path):
    return build_extension(round_w, MASS, OPTIONS, path=round_path)


@pytest.fixture(scope="module")
def round_report(round_extension):
    return verify(round_extension)


# ------------------------------------------------------------------------------#
# masses
# ------------------------------------------------------------------------------#


def test_hawking_mass_of_unit_sphere():
    assert hawking_mass(4.0 * math.pi) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(InputError):
        hawking_mass(0.0)


@pytest.mark.parametrize("m", [0.45, 0.5 * (1.0 - 1e-9)])
def test_mass_at_or_below_hawking_rejected(round_w, round_path, m):
    with pytest.raises(InputError) as info:
        build_extension(round_w, m, OPTIONS, path=round_path)
    assert info.value.details["hawking_mass"] == pytest.approx(0.5, abs=1e-12)


def test_adm_mass_is_tail_parameter(round_extension):
    assert adm_mass(round_extension) == MASS


# ------------------------------------------------------------------------------#
# construction
# ------------------------------------------------------------------------------#


def test_extension_layout(round_extension):
    """Collar end, neck and Schwarzschild tail fit together"""
    ext = round_extension
    assert ext.collar.rescaled and ext.collar.A == 1.0
    assert 0 < ext.epsilon_star <= ext.collar.epsilon_0
    assert ext.collar.epsilon == ext.epsilon_star
    assert ext.neck.a == pytest.approx(0.5 * ext.T)
    assert ext.s0 > 0 and 0 < ext.delta < ext.s0

    u, du, ddu = ext.tail(ext.neck.b)
    assert abs(float(u) - ext.neck.f[-1]) <= 1e-10, "neck must end on the Schwarzschild tail"
    assert abs(float(du) - ext.neck.df[-1]) <= 1e-10


def test_tail_samples(round_extension):
    s = round_extension.tail_samples(n=65)
    assert s[0] == pytest.approx(round_extension.tail_start)
    assert s[-1] == pytest.approx(round_extension.tail_start + 100.0 * MASS)


# ------------------------------------------------------------------------------#
# verification
# ------------------------------------------------------------------------------#


def test_round_extension_verifies(round_report):
    """Every flag holds for the round horizon at m = 1.1 m_H"""
    failed = [k for k, v in round_report.flags.items() if not v]
    assert round_report.passed, f"failed flags: {failed}"
    assert round_report.min_R_collar > 0
    assert round_report.max_abs_R_tail <= 1e-8
    assert round_report.H0_residual <= 1e-6
    assert round_report.min_interior_H > 0
    assert round_report.hawking_mass == pytest.approx(0.5)
    assert round_report.penrose_margin == pytest.approx(4.0 * math.pi * (4.0 * MASS ** 2 - 1.0), rel=1e-10)


def test_glued_region_strictly_positive(round_report):
    assert round_report.flags["glued_positive"]
    assert round_report.min_R_glued > 0


def test_below_right_margin():
    """Only samples up to s0 at heights shared with the collar curve count"""
    s = np.linspace(0.5, 1.2, 8)
    df = np.array([0.01, 0.02, 0.03, 0.04, 0.05, 0.5, 0.01, 0.01])
    ddf = np.zeros_like(s)
    right = Profile(s, np.array([2.0] * 5 + [0.5, 0.5, 0.5]), df, ddf, kind="bent", params={"s0": 1.0})
    assert below_right_margin(right, 1.0, 1.0, 0.1) > 0
    left = Profile(s, np.full_like(s, 1.0), df, ddf, kind="bent", params={"s0": 1.0})
    assert below_right_margin(left, 1.0, 1.0, 0.1) < 0


def test_totally_geodesic_flag(round_w, round_path):
    options = ExtensionOptions(n_time=N_TIME, epsilon_cap=0.1, totally_geodesic=True)
    report = verify(build_extension(round_w, MASS, options, path=round_path))
    assert report.flags["totally_geodesic"]


def test_curvature_spike_flips_neck_flag(round_extension):
    """A spike in f'' is caught as negative neck curvature"""
    neck = round_extension.neck
    ddf = neck.ddf.copy()
    ddf[ddf.size // 2] += 10.0
    spiked = Profile(neck.s, neck.f, neck.df, ddf, kind=neck.kind, params=neck.params)

    original = round_extension.neck
    round_extension.neck = spiked
    try:
        report = verify(round_extension)
    finally:
        round_extension.neck = original
    assert not report.flags["neck_nonnegative"]
    assert not report.passed
    assert report.min_R_neck < 0


# ------------------------------------------------------------------------------#
# Bartnik bracket
# ------------------------------------------------------------------------------#


def test_bartnik_bracket(round_w):
    estimate = bartnik_mass_estimate(round_w, rel_tol=0.2, options=OPTIONS, seed=7)
    assert estimate.seed == 7
    assert estimate.lower == pytest.approx(0.5)
    assert estimate.lower < estimate.upper <= 1.0
    assert estimate.trials[0].mass == pytest.approx(1.0) and estimate.trials[0].success
    assert all(p.success for p in estimate.trials if p.mass == estimate.upper)


def test_bartnik_rejects_bad_tolerance(round_w):
    with pytest.raises(InputError):
        bartnik_mass_estimate(round_w, rel_tol=0.0, options=OPTIONS)


@pytest.mark.slow
def test_bartnik_round_sphere_near_hawking(round_w):
    """The round sphere extends at 1.01 times its Hawking mass"""
    estimate = bartnik_mass_estimate(round_w, rel_tol=0.01, options=OPTIONS)
    assert estimate.upper <= 1.01 * estimate.hawking_mass * (1.0 + 1e-12)
    assert any(p.success and p.mass == pytest.approx(1.01 * estimate.hawking_mass) for p in estimate.trials)


@pytest.mark.slow
def test_cos_metric_extension():
    """w = cos(theta)/2 extends at 1.05 times its Hawking mass"""
    grid = get_grid(16, zonal=True)
    w = ScalarField.from_function(grid, lambda theta, phi: 0.5 * np.cos(theta))
    path = build_path(w, n_time=32)
    m_h = hawking_mass(path.area)
    report = verify(build_extension(w, 1.05 * m_h, ExtensionOptions(n_time=32), path=path))
    failed = [k for k, v in report.flags.items() if not v]
    assert report.passed, f"failed flags: {failed}"
