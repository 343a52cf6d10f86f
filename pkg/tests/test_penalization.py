"""Tests for the spliced, clamped reaction term and its antiderivative."""

import numpy as np
import pytest

from mpcert import (
    ConstantPotential,
    ExpDecayPotential,
    ExpThresholdNonlinearity,
    GaussianWellPotential,
    PowerNonlinearity,
    ProblemSpec,
)
from mpcert.penalization import PenalizedNonlinearity, penalty_ratio


def make_spec(**kw):
    defaults = dict(
        dim=3,
        potential=ConstantPotential(1.0),
        nonlinearity=PowerNonlinearity(c1=1.0, g1=3.0),
        q=3.0, p=3.0, theta=3.0, a1=1.0,
        splice_radius=1.0, lam=1.0, bump_radius=0.8, v_infty=1.0,
    )
    defaults.update(kw)
    return ProblemSpec(**defaults)


SPEC_A = make_spec()
SPEC_B = make_spec(nonlinearity=PowerNonlinearity(c1=1.0, g1=3.0, c2=-1.0, g2=5.0))
SPEC_C = make_spec(potential=GaussianWellPotential(level=1.0, depth=2.0, width=1.0),
                   nonlinearity=PowerNonlinearity(c1=1.0, g1=3.0, c2=0.5, g2=4.0),
                   splice_radius=2.0, v_infty=0.0)
SPEC_D = make_spec(odd=True)
SPEC_E = make_spec(nonlinearity=ExpThresholdNonlinearity(c1=1.0, p=3.0, a=1.0, q=1.0),
                   potential=ExpDecayPotential(amplitude=5.0, rate=0.5),
                   mode="exponential", q=1.0, a=1.0, mu=0.5, lam=5.0, v_infty=5.0)
ALL_SPECS = [SPEC_A, SPEC_B, SPEC_C, SPEC_D, SPEC_E]


def test_penalty_ratio():
    assert penalty_ratio(3.0) == pytest.approx(6.0, rel=1e-15)
    assert penalty_ratio(4.0) == pytest.approx(4.0, rel=1e-15)
    assert penalty_ratio(6.0) == pytest.approx(3.0, rel=1e-15)
    with pytest.raises(ValueError):
        penalty_ratio(2.0)


def test_clamp_branches_pure_power():
    pen = PenalizedNonlinearity(SPEC_A)
    # switch point of 6 t^2 = t is t = 1/6
    assert float(pen.g(2.0, 0.1)) == pytest.approx(0.01, rel=1e-14)
    assert float(pen.g(2.0, 0.5)) == pytest.approx(0.5 / 6.0, rel=1e-14)
    assert float(pen.g_prime(2.0, 0.1)) == pytest.approx(0.2, rel=1e-14)
    assert float(pen.g_prime(2.0, 0.5)) == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert float(pen.g(2.0, -0.3)) == 0.0


def test_clamp_lower_branch_sign_changing():
    pen = PenalizedNonlinearity(SPEC_B)
    # f(1.2) = 1.44 - 2.0736, so k f = -3.8016 < -V s = -1.2
    assert float(pen.f_tilde(2.0, 1.2)) == pytest.approx(-0.2, rel=1e-14)
    assert float(pen.g_prime(2.0, 1.2)) == pytest.approx(-1.0 / 6.0, rel=1e-14)


def test_antiderivative_frozen_value():
    pen = PenalizedNonlinearity(SPEC_A)
    # middle branch up to 1/6 contributes (1/6)^3 / 3, the upper clamp
    # contributes (1 - 1/36) / 12 from 1/6 to 1
    expected = 1.0 / 648.0 + 35.0 / 432.0
    assert float(pen.G(2.0, 1.0)) == pytest.approx(expected, rel=1e-12)
    assert float(pen.G(2.0, 1.0)) == pytest.approx(pen.G_reference(2.0, 1.0),
                                                   rel=1e-10)


def test_continuity_at_switch_point():
    pen = PenalizedNonlinearity(SPEC_A)
    c = 1.0 / 6.0
    below = float(pen.f_tilde(2.0, c * (1.0 - 1e-10)))
    above = float(pen.f_tilde(2.0, c * (1.0 + 1e-10)))
    assert abs(below - above) < 1e-9


def test_zero_potential_clamps_to_zero():
    spec = make_spec(potential=ConstantPotential(0.0), v_infty=0.0)
    pen = PenalizedNonlinearity(spec)
    s = np.linspace(0.1, 3.0, 7)
    assert np.all(pen.f_tilde(np.full_like(s, 2.0), s) == 0.0)
    assert np.all(pen.G(np.full_like(s, 2.0), s) == 0.0)
    # inside the splice ball the original term survives
    assert float(pen.g(0.5, 1.0)) == pytest.approx(1.0, rel=1e-14)


def test_splice_is_bitwise_inside():
    rng = np.random.default_rng(3)
    for spec in ALL_SPECS:
        pen = PenalizedNonlinearity(spec)
        r = rng.uniform(0.0, spec.splice_radius, 64)
        s = rng.uniform(-2.0, 4.0, 64)
        assert np.all(pen.g(r, s) == np.asarray(spec.f(r, s)))
        assert np.all(pen.G(r, s) == np.asarray(spec.F(r, s)))


def test_clamp_properties_random():
    rng = np.random.default_rng(11)
    n = 2000
    for spec in ALL_SPECS:
        pen = PenalizedNonlinearity(spec)
        grid = pen.on_grid(np.linspace(0.0, 4.0, 41))
        r = rng.uniform(0.0, 4.0, n)
        s = np.where(rng.random(n) < 0.5,
                     rng.uniform(0.0, 4.0, n),
                     10.0 ** rng.uniform(-8, 0.5, n))
        if spec.odd:
            s *= rng.choice([-1.0, 1.0], n)
        gv = pen.g(r, s)
        fv = np.asarray(spec.f(r, s), dtype=float)
        assert np.all(np.abs(gv) <= np.abs(fv) * (1.0 + 1e-12) + 1e-300)
        out = r > spec.splice_radius
        v = np.asarray(spec.V(r), dtype=float)
        cap = v * np.abs(s) / pen.k
        assert np.all(np.abs(gv[out]) <= cap[out] * (1.0 + 1e-12) + 1e-300)
        Gv = pen.G(r, s)
        capG = v * s**2 / (2.0 * pen.k)
        assert np.all(np.abs(Gv[out]) <= capG[out] * (1.0 + 1e-8) + 1e-300)


def test_antiderivative_derivative_consistency():
    rng = np.random.default_rng(5)
    for spec in ALL_SPECS:
        pen = PenalizedNonlinearity(spec)
        r = rng.uniform(spec.splice_radius * 1.01, 4.0, 40)
        s = rng.uniform(0.05, 3.0, 40)
        if spec.odd:
            s *= rng.choice([-1.0, 1.0], 40)
        h = 1e-6 * np.maximum(0.5, np.abs(s))
        fd = (pen.G(r, s + h) - pen.G(r, s - h)) / (2.0 * h)
        gv = pen.g(r, s)
        assert np.all(np.abs(fd - gv) <= 1e-4 * np.maximum(1.0, np.abs(gv)))


def test_antiderivative_matches_quadrature():
    rng = np.random.default_rng(7)
    for spec in (SPEC_A, SPEC_B, SPEC_C, SPEC_E):
        pen = PenalizedNonlinearity(spec)
        for _ in range(6):
            r = float(rng.uniform(spec.splice_radius * 1.05, 4.0))
            s = float(rng.uniform(0.1, 3.5))
            table = float(pen.G(r, s))
            ref = pen.G_reference(r, s)
            assert table == pytest.approx(ref, rel=1e-9, abs=1e-13)


def test_odd_mode_symmetries_exact():
    pen = PenalizedNonlinearity(SPEC_D)
    rng = np.random.default_rng(9)
    r = rng.uniform(0.0, 4.0, 200)
    s = rng.uniform(0.01, 3.0, 200)
    assert np.all(pen.g(r, -s) == -pen.g(r, s))
    assert np.all(pen.G(r, -s) == pen.G(r, s))
    assert np.all(pen.g_prime(r, -s) == pen.g_prime(r, s))


def test_grid_binding_matches_pointwise():
    for spec in ALL_SPECS:
        pen = PenalizedNonlinearity(spec)
        r = np.linspace(0.0, 4.0, 101)
        grid = pen.on_grid(r)
        rng = np.random.default_rng(13)
        u = rng.uniform(-1.0, 3.0, r.size)
        assert np.allclose(grid.G(u), pen.G(r, u), rtol=1e-13, atol=1e-300)
        assert np.all(grid.g(u) == pen.g(r, u))
        assert np.all(grid.g_prime(u) == pen.g_prime(r, u))
