from __future__ import annotations

import math

import numpy as np
import pytest

from acoustic_eit import (
    DriveCondition,
    SingularModelError,
    ThreeLevelAtom,
    UndefinedPhaseError,
    coherence_rates,
    dip_shape,
    eit_linewidth,
    group_delay,
    hz_to_angular,
    reflection,
    reflection_coefficient,
    transmission,
    transmission_flux_coefficient,
    transmission_flux_sweep,
)

MHZ = 2.0 * math.pi * 1e6


# ---------------------------------------------------------------------------
# Coherence rates and atom construction
# ---------------------------------------------------------------------------


def test_coherence_rates_all_zero():
    assert coherence_rates(0.0, 0.0, 0.0, 0.0) == (0.0, 0.0, 0.0)


def test_coherence_rates_radiatively_limited():
    gamma = 7.0
    g10, g20, g21 = coherence_rates(2.0 * gamma, 0.0, 0.0, 0.0)
    assert g10 == gamma
    assert g20 == 0.0
    assert g21 == gamma


def test_coherence_rates_device_values():
    g10, g20, g21 = coherence_rates(20.1 * MHZ, 0.0, 10.95 * MHZ, 4.94 * MHZ)
    assert g10 == pytest.approx(21.0 * MHZ, rel=1e-15)
    assert g20 == pytest.approx(4.94 * MHZ, rel=1e-15)
    assert g21 == pytest.approx((10.05 + 10.95 + 4.94) * MHZ, rel=1e-15)


def test_coherence_rates_reject_negative():
    with pytest.raises(ValueError):
        coherence_rates(-1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        coherence_rates(1.0, 0.0, float("nan"), 0.0)


def test_atom_properties(reflection_atom):
    assert reflection_atom.gamma10 == pytest.approx(21.0 * MHZ, rel=1e-15)
    assert reflection_atom.gamma20 == pytest.approx(4.94 * MHZ, rel=1e-15)
    assert reflection_atom.omega21 == pytest.approx(hz_to_angular(2.15e9), rel=1e-12)


def test_atom_from_coherence_round_trip(reflection_atom):
    rebuilt = ThreeLevelAtom.from_coherence(
        omega10=reflection_atom.omega10,
        anharmonicity=reflection_atom.anharmonicity,
        Gamma10=reflection_atom.Gamma10,
        gamma10=reflection_atom.gamma10,
        gamma20=reflection_atom.gamma20,
        Gamma21=reflection_atom.Gamma21,
    )
    assert rebuilt.gphi1 == pytest.approx(reflection_atom.gphi1, rel=1e-12)
    assert rebuilt.gphi2 == pytest.approx(reflection_atom.gphi2, rel=1e-12)


def test_atom_from_coherence_rejects_negative_dephasing():
    with pytest.raises(ValueError):
        ThreeLevelAtom.from_coherence(1e9, 1e8, Gamma10=10.0, gamma10=4.0, gamma20=0.0)


def test_atom_validation():
    with pytest.raises(ValueError):
        ThreeLevelAtom(omega10=0.0, anharmonicity=1.0, Gamma10=1.0)
    with pytest.raises(ValueError):
        ThreeLevelAtom(omega10=1.0, anharmonicity=-1.0, Gamma10=1.0)
    with pytest.raises(ValueError):
        ThreeLevelAtom(omega10=1.0, anharmonicity=1.0, Gamma10=-1.0)


def test_drive_condition_validation():
    with pytest.raises(ValueError):
        DriveCondition(Omega_p=-1.0)
    with pytest.raises(ValueError):
        DriveCondition(Delta_p=float("inf"))


# ---------------------------------------------------------------------------
# Reflection
# ---------------------------------------------------------------------------


def test_reflection_radiatively_limited_full():
    # Gamma10 = 2*gamma10 with the control off gives r = -1 exactly
    r = reflection_coefficient(Gamma10=2.0, gamma10=1.0, gamma20=0.0,
                               Omega_c=0.0, Delta_p=0.0, Delta_c=0.0)
    assert r == -1.0 + 0.0j


def test_reflection_far_detuned_vanishes(reflection_atom):
    dp = 1e6 * reflection_atom.gamma10
    for sign in (1.0, -1.0):
        r = reflection_coefficient(
            Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
            gamma20=reflection_atom.gamma20, Omega_c=0.0,
            Delta_p=sign * dp, Delta_c=0.0)
        assert abs(r) < 1e-5


def test_reflection_operating_point(reflection_atom):
    # frozen against the density-matrix solver at Omega_p/2pi = 10 kHz
    r_on = reflection_coefficient(
        Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
        gamma20=reflection_atom.gamma20, Omega_c=6.1 * MHZ, Delta_p=0.0, Delta_c=0.0)
    r_off = reflection_coefficient(
        Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
        gamma20=reflection_atom.gamma20, Omega_c=0.0, Delta_p=0.0, Delta_c=0.0)
    assert r_on.real == pytest.approx(-0.4391888006723136, rel=1e-12)
    assert r_on.imag == pytest.approx(0.0, abs=1e-15)
    assert r_off.real == pytest.approx(-0.4785714285714286, rel=1e-12)
    # switching the control on reduces resonant reflection
    assert abs(r_on) < abs(r_off)


def test_reflection_perfect_transparency_is_exact_zero():
    # gamma20 = 0 on two-photon resonance with the control on
    r = reflection_coefficient(Gamma10=2.0, gamma10=1.5, gamma20=0.0,
                               Omega_c=3.0, Delta_p=0.0, Delta_c=0.0)
    assert r == 0.0 + 0.0j


def test_reflection_singular_raises():
    with pytest.raises(SingularModelError):
        reflection_coefficient(Gamma10=1.0, gamma10=0.0, gamma20=1.0,
                               Omega_c=0.0, Delta_p=0.0, Delta_c=0.0)


def test_reflection_vector_matches_scalar(reflection_atom):
    dp = np.linspace(-40.0, 40.0, 17) * MHZ
    dc = -0.25 * dp
    grid = reflection_coefficient(
        Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
        gamma20=reflection_atom.gamma20, Omega_c=6.1 * MHZ, Delta_p=dp, Delta_c=dc)
    for i in range(dp.size):
        one = reflection_coefficient(
            Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
            gamma20=reflection_atom.gamma20, Omega_c=6.1 * MHZ,
            Delta_p=float(dp[i]), Delta_c=float(dc[i]))
        assert grid[i] == pytest.approx(one, rel=1e-14)


def test_reflection_wrapper_matches_kernel(reflection_atom):
    drive = DriveCondition(Delta_p=2.0 * MHZ, Delta_c=-1.0 * MHZ,
                           Omega_p=0.01 * MHZ, Omega_c=6.1 * MHZ)
    direct = reflection_coefficient(
        Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
        gamma20=reflection_atom.gamma20, Omega_c=drive.Omega_c,
        Delta_p=drive.Delta_p, Delta_c=drive.Delta_c)
    assert reflection(reflection_atom, drive) == direct


# ---------------------------------------------------------------------------
# Transmission
# ---------------------------------------------------------------------------


def test_transmission_full_extinction():
    t = 1.0 + reflection_coefficient(Gamma10=2.0, gamma10=1.0, gamma20=0.0,
                                     Omega_c=0.0, Delta_p=0.0, Delta_c=0.0)
    assert t == 0.0 + 0.0j


def test_transmission_far_detuned_approaches_one(reflection_atom):
    drive = DriveCondition(Delta_p=1e6 * reflection_atom.gamma10)
    assert abs(transmission(reflection_atom, drive) - 1.0) < 1e-5


def test_transmission_operating_point(reflection_atom):
    drive = DriveCondition(Omega_c=6.1 * MHZ)
    t = transmission(reflection_atom, drive)
    assert t.real == pytest.approx(0.5608111993276864, rel=1e-12)
    assert t.imag == pytest.approx(0.0, abs=1e-15)


def test_flux_sweep_matches_transmission_at_zero_offset(reflection_atom):
    t_flux = transmission_flux_sweep(reflection_atom, Delta_p=0.0, delta=0.0,
                                     Omega_c=6.1 * MHZ)
    t_plain = transmission(reflection_atom, DriveCondition(Omega_c=6.1 * MHZ))
    assert t_flux == t_plain


def test_flux_sweep_control_off_is_two_level(reflection_atom):
    # with the control off the offset delta cannot matter
    dp = np.linspace(-30.0, 30.0, 11) * MHZ
    for delta in (0.0, 4.0 * MHZ, -11.0 * MHZ):
        t = transmission_flux_coefficient(
            Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
            gamma20=reflection_atom.gamma20, Omega_c=0.0, Delta_p=dp, delta=delta)
        expected = 1.0 - reflection_atom.Gamma10 / (
            2.0 * (reflection_atom.gamma10 - 1j * dp))
        assert np.allclose(t, expected, rtol=1e-14, atol=0.0)


def test_flux_sweep_asymmetry_with_control_offset(reflection_atom):
    # nonzero delta makes |t(Delta_p)| asymmetric around zero
    dp = 3.0 * MHZ
    kw = dict(Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
              gamma20=reflection_atom.gamma20, Omega_c=6.1 * MHZ, delta=4.0 * MHZ)
    left = abs(transmission_flux_coefficient(Delta_p=-dp, **kw))
    right = abs(transmission_flux_coefficient(Delta_p=dp, **kw))
    assert abs(left - right) > 1e-3


def test_flux_sweep_vector_matches_scalar(reflection_atom):
    dp = np.linspace(-20.0, 20.0, 9) * MHZ
    grid = transmission_flux_coefficient(
        Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
        gamma20=reflection_atom.gamma20, Omega_c=16.0 * MHZ, Delta_p=dp,
        delta=4.0 * MHZ)
    for i in range(dp.size):
        one = transmission_flux_coefficient(
            Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
            gamma20=reflection_atom.gamma20, Omega_c=16.0 * MHZ,
            Delta_p=float(dp[i]), delta=4.0 * MHZ)
        assert grid[i] == pytest.approx(one, rel=1e-14)


# ---------------------------------------------------------------------------
# Transparency linewidth and dip decomposition
# ---------------------------------------------------------------------------


def test_eit_linewidth_trivial_limits():
    assert eit_linewidth(2.0, 0.7, 0.0) == 0.7
    # pure power broadening: gamma20 = 0, Omega_c**2 = 4*gamma10*x
    x = 0.31
    gamma10 = 2.4
    assert eit_linewidth(gamma10, 0.0, math.sqrt(4.0 * gamma10 * x)) == pytest.approx(x, rel=1e-15)


def test_eit_linewidth_device_value(reflection_atom):
    width = eit_linewidth(reflection_atom.gamma10, reflection_atom.gamma20, 6.1 * MHZ)
    assert width / MHZ == pytest.approx(5.38297619047619, rel=1e-12)


def test_eit_linewidth_validation():
    with pytest.raises(ValueError):
        eit_linewidth(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        eit_linewidth(1.0, -1.0, 1.0)


def test_dip_shape_reproduces_squared_reflection(reflection_atom):
    # |r(Delta_c)|^2 at probe resonance is exactly baseline minus a Lorentzian
    shape = dip_shape(reflection_atom.Gamma10, reflection_atom.gamma10,
                      reflection_atom.gamma20, 6.1 * MHZ)
    assert shape.hwhm == eit_linewidth(reflection_atom.gamma10,
                                       reflection_atom.gamma20, 6.1 * MHZ)
    for dc in np.array([0.0, 0.3, -1.7, 4.0, 25.0]) * MHZ:
        r = reflection_coefficient(
            Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
            gamma20=reflection_atom.gamma20, Omega_c=6.1 * MHZ,
            Delta_p=0.0, Delta_c=float(dc))
        predicted = shape.baseline - shape.depth * shape.hwhm**2 / (dc**2 + shape.hwhm**2)
        assert abs(r) ** 2 == pytest.approx(predicted, rel=1e-12)


def test_dip_shape_pole_form_matches_reflection(reflection_atom):
    # r(Delta_c) = -amplitude + window / (hwhm - i*Delta_c)
    shape = dip_shape(reflection_atom.Gamma10, reflection_atom.gamma10,
                      reflection_atom.gamma20, 6.1 * MHZ)
    for dc in np.array([0.0, -2.2, 7.9]) * MHZ:
        r = reflection_coefficient(
            Gamma10=reflection_atom.Gamma10, gamma10=reflection_atom.gamma10,
            gamma20=reflection_atom.gamma20, Omega_c=6.1 * MHZ,
            Delta_p=0.0, Delta_c=float(dc))
        pole_form = -shape.amplitude + shape.window / (shape.hwhm - 1j * dc)
        assert r == pytest.approx(pole_form, rel=1e-12)


# ---------------------------------------------------------------------------
# Group delay
# ---------------------------------------------------------------------------


def test_group_delay_undefined_at_extinction():
    atom = ThreeLevelAtom(omega10=1e9, anharmonicity=1e8, Gamma10=2.0e6, gphi1=0.0)
    with pytest.raises(UndefinedPhaseError):
        group_delay(atom, DriveCondition())


def test_group_delay_frozen_values(reflection_atom):
    tau_61 = group_delay(reflection_atom, DriveCondition(Omega_c=6.1 * MHZ))
    tau_12 = group_delay(reflection_atom, DriveCondition(Omega_c=12.0 * MHZ))
    assert tau_61 == pytest.approx(-3.3705020203230713e-09, rel=1e-12)
    assert tau_12 == pytest.approx(1.473321725733695e-09, rel=1e-12)
    # a weak control leaves fast (negative) delay, a developed window slows the probe
    assert tau_61 < 0.0 < tau_12


def test_group_delay_finite_difference_matches_analytic(reflection_atom):
    h = 1e-4 * reflection_atom.gamma10
    rng = np.random.Generator(np.random.Philox(7))
    for _ in range(25):
        drive = DriveCondition(
            Delta_p=float(rng.uniform(-20, 20)) * MHZ,
            Delta_c=float(rng.uniform(-20, 20)) * MHZ,
            Omega_c=float(rng.uniform(1.0, 30.0)) * MHZ,
        )
        analytic = group_delay(reflection_atom, drive)
        numeric = group_delay(reflection_atom, drive, h=h)
        assert numeric == pytest.approx(analytic, rel=1e-6)


def test_group_delay_ideal_transparency_limit(reflection_atom):
    # gamma20 = 0 at the two-photon point: exact limit 2*Gamma10/Omega_c**2
    atom = ThreeLevelAtom(
        omega10=reflection_atom.omega10, anharmonicity=reflection_atom.anharmonicity,
        Gamma10=reflection_atom.Gamma10, Gamma21=0.0,
        gphi1=reflection_atom.gphi1, gphi2=0.0)
    drive = DriveCondition(Omega_c=10.0 * MHZ)
    assert group_delay(atom, drive) == 2.0 * atom.Gamma10 / drive.Omega_c**2
    assert group_delay(atom, drive) > 0.0


def test_group_delay_fd_step_validation(reflection_atom):
    with pytest.raises(ValueError):
        group_delay(reflection_atom, DriveCondition(Omega_c=6.1 * MHZ), h=0.0)
