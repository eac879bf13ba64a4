"""Parameter records, preset registry, and per-plant closed-form oracles."""

import math

import numpy as np
import pytest

from iiorbit import plants
from iiorbit.core import ParameterError
from iiorbit.odesim import FieldEvaluationError
from iiorbit.plants import (
    CartPendLinearParams,
    CartPendNonlinearParams,
    DcAcParams,
    IwpParams,
    cartpend_singularity_margin,
    iwp_energy,
    make_inline,
    make_preset,
    preset_params,
)


class TestParameterRecords:
    def test_iwp_restoring_coefficient(self):
        p = IwpParams(m=1.962, b=10.0, k=-1.6, gamma1=2.0, gamma2=1.0)
        # 1 + bk = -15 exactly, so a = 1.962/15
        assert p.a == 1.962 / 15.0
        assert abs(p.a - 0.1308) < 1e-15

    @pytest.mark.parametrize(
        "k,expected",
        [
            (-1.4, 1.962 / 13.0),
            (-1.6, 1.962 / 15.0),
            (-1.8, 1.962 / 17.0),
            (-2.0, 1.962 / 19.0),
        ],
    )
    def test_iwp_slope_sweep_values(self, k, expected):
        p = IwpParams(m=1.962, b=10.0, k=k, gamma1=2.0, gamma2=1.0)
        assert abs(p.a - expected) < 1e-15

    def test_iwp_rejects_shallow_slope(self):
        with pytest.raises(ParameterError, match="k must satisfy"):
            IwpParams(m=1.962, b=10.0, k=-0.05, gamma1=2.0, gamma2=1.0)

    def test_iwp_rejects_nonpositive_gains(self):
        with pytest.raises(ParameterError):
            IwpParams(m=1.962, b=10.0, k=-1.6, gamma1=0.0, gamma2=1.0)
        with pytest.raises(ParameterError):
            IwpParams(m=-1.0, b=10.0, k=-1.6, gamma1=2.0, gamma2=1.0)

    def test_cartpend_linear_rejects_shallow_slope(self):
        with pytest.raises(ParameterError, match="k must satisfy"):
            CartPendLinearParams(a1=9.8, a2=1.0, k=-0.9, gamma1=2.0, gamma2=2.0)

    def test_cartpend_linear_cone_half_width(self):
        p = CartPendLinearParams(a1=9.8, a2=1.0, k=-4.0, gamma1=2.0, gamma2=2.0)
        assert p.beta_star == math.acos(0.25)

    def test_cartpend_nonlinear_rejects_nonpositive_a(self):
        with pytest.raises(ParameterError, match="a must be positive"):
            CartPendNonlinearParams(
                a1=9.8, a2=1.0, a=0.0, a0=0.0, gamma1=1.0, gamma2=1.0
            )
        with pytest.raises(ParameterError):
            CartPendNonlinearParams(
                a1=9.8, a2=1.0, a=-2.0, a0=0.0, gamma1=1.0, gamma2=1.0
            )

    def test_dcac_rejects_nonpositive_fields(self):
        good = dict(R=10.0, C=1e-3, L=1e-3, E=24.0, A=12.0, omega=100 * math.pi,
                    gamma=0.01)
        for field in good:
            bad = dict(good)
            bad[field] = 0.0
            with pytest.raises(ParameterError, match="must be positive"):
                DcAcParams(**bad)


class TestPresetRegistry:
    def test_all_presets_listed(self):
        assert plants.PRESETS == (
            "cartpend-lin-default",
            "cartpend-nl-default",
            "dcac-default",
            "iwp-default",
            "lti-identity",
        )

    def test_unknown_preset_raises(self):
        with pytest.raises(KeyError, match="unknown preset"):
            make_preset("no-such-thing")
        with pytest.raises(KeyError, match="unknown preset"):
            preset_params("no-such-thing")

    def test_unknown_inline_kind_raises(self):
        with pytest.raises(KeyError, match="unknown bundle kind"):
            make_inline("pendulum-on-a-train")

    def test_override_rebuilds_derived_values(self):
        bundle = make_preset("iwp-default", k=-1.8)
        assert abs(bundle.info["a"] - 1.962 / 17.0) < 1e-15

    def test_override_runs_validation(self):
        with pytest.raises(ParameterError, match="k must satisfy"):
            make_preset("iwp-default", k=-0.05)

    def test_unknown_override_field_raises(self):
        with pytest.raises(ParameterError, match="unknown parameter"):
            make_preset("iwp-default", mass=2.0)

    def test_inline_matches_preset(self):
        inline = make_inline("iwp", m=1.962, b=10.0, k=-1.6, gamma1=2.0, gamma2=1.0)
        preset = make_preset("iwp-default")
        assert inline.info["a"] == preset.info["a"]
        x = np.array([0.4, -0.3, 0.2, 0.1])
        assert np.allclose(inline.manifold.phi(x), preset.manifold.phi(x))


class TestIwpBundle:
    def test_energy_helper(self):
        p = IwpParams(m=1.962, b=10.0, k=-1.6, gamma1=2.0, gamma2=1.0)
        assert iwp_energy(p, 0.0, 0.0) == -p.a
        assert abs(iwp_energy(p, math.pi / 2, 1.0) - 0.5) < 1e-15
        # energy helper agrees with the bundle's recorded first integral
        bundle = plants.make_iwp(p)
        xi = np.array([0.7, -0.4])
        assert abs(iwp_energy(p, *xi) - bundle.target.first_integral(xi)) < 1e-15

    def test_target_is_pendulum(self):
        bundle = make_preset("iwp-default")
        a = bundle.info["a"]
        for s in np.linspace(-3.0, 3.0, 11):
            xdd = bundle.target.alpha(np.array([s, 0.0]))[1]
            assert abs(xdd + a * math.sin(s)) < 1e-15


class TestCartPendLinearBundle:
    def test_potential_matches_log_closed_form(self):
        # the bundle tabulates the on-manifold potential by quadrature; the
        # integral also has an elementary antiderivative to compare against
        bundle = make_preset("cartpend-lin-default")
        a1, a2, k = bundle.info["a1"], bundle.info["a2"], bundle.info["k"]
        ka2 = k * a2

        def exact(s):
            return (a1 / ka2) * math.log(
                abs((1.0 + ka2 * math.cos(s)) / (1.0 + ka2))
            )

        s_max = bundle.info["beta_star"] - 0.1
        for s in np.linspace(-s_max, s_max, 61):
            got = bundle.target.first_integral(np.array([s, 0.0]))
            assert abs(got - exact(s)) < 1e-6, f"s={s}: {got} vs {exact(s)}"
        assert abs(bundle.target.first_integral(np.array([0.0, 0.0]))) < 1e-12

    def test_target_linearization_at_origin(self):
        bundle = make_preset("cartpend-lin-default")
        a1, a2, k = bundle.info["a1"], bundle.info["a2"], bundle.info["k"]
        h = 1e-7
        slope = (
            bundle.target.alpha(np.array([h, 0.0]))[1]
            - bundle.target.alpha(np.array([-h, 0.0]))[1]
        ) / (2 * h)
        assert abs(slope - a1 / (1.0 + k * a2)) < 1e-6
        assert abs(slope + 9.8 / 3.0) < 1e-6

    def test_control_raises_outside_cone(self):
        bundle = make_preset("cartpend-lin-default")
        beta_star = bundle.info["beta_star"]
        x = np.array([beta_star + 0.01, 0.0, 0.0, 0.0])
        with pytest.raises(FieldEvaluationError, match="admissible cone"):
            bundle.controller.v(x, np.zeros(2))
        # and stays finite just inside
        x_in = np.array([beta_star - 0.01, 0.0, 0.0, 0.0])
        assert np.all(np.isfinite(bundle.controller.v(x_in, np.zeros(2))))

    def test_singularity_margin(self):
        bundle = make_preset("cartpend-lin-default")
        assert abs(cartpend_singularity_margin(bundle, np.zeros(4)) - 3.0) < 1e-15
        at_edge = cartpend_singularity_margin(
            bundle, np.array([bundle.info["beta_star"], 0, 0, 0])
        )
        assert at_edge < 1e-12

    def test_singularity_margin_rejects_other_bundles(self):
        for name in ("iwp-default", "cartpend-nl-default", "dcac-default"):
            with pytest.raises(ValueError, match="undefined"):
                cartpend_singularity_margin(make_preset(name), np.zeros(4))


class TestCartPendNonlinearBundle:
    def test_slaving_curve_flattens_denominator(self):
        # 1 + a2 k'(s) cos(s) must collapse to the constant -a for every s
        bundle = make_preset("cartpend-nl-default")
        kprime = bundle.info["kprime"]
        a2 = 1.0
        for s in np.linspace(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3, 101):
            assert abs(1.0 + a2 * kprime(s) * math.cos(s) + 2.0) < 1e-12

    def test_slaving_curve_through_offset(self):
        bundle = make_preset("cartpend-nl-default")
        assert bundle.info["kfun"](0.0) == 0.0
        shifted = make_inline(
            "cartpend-nonlinear", a1=9.8, a2=1.0, a=2.0, a0=0.7, gamma1=1.0,
            gamma2=1.0,
        )
        assert shifted.info["kfun"](0.0) == 0.7

    def test_slaving_curve_derivative_consistency(self):
        bundle = make_preset("cartpend-nl-default")
        kfun, kprime, ksecond = (
            bundle.info["kfun"], bundle.info["kprime"], bundle.info["ksecond"],
        )
        h = 1e-6
        for s in (-1.2, -0.5, 0.0, 0.3, 1.1):
            fd1 = (kfun(s + h) - kfun(s - h)) / (2 * h)
            fd2 = (kprime(s + h) - kprime(s - h)) / (2 * h)
            assert abs(fd1 - kprime(s)) < 1e-7 * max(1.0, abs(kprime(s)))
            assert abs(fd2 - ksecond(s)) < 1e-5 * max(1.0, abs(ksecond(s)))

    def test_angle_domain_enforced(self):
        bundle = make_preset("cartpend-nl-default")
        for s in (math.pi / 2, math.pi / 2 + 0.1, -math.pi / 2):
            with pytest.raises(FieldEvaluationError, match="outside"):
                bundle.info["kfun"](s)
        with pytest.raises(FieldEvaluationError):
            bundle.immersion.pi(np.array([1.6, 0.0]))


class TestDcAcBundle:
    def test_on_orbit_duty_cycle_magnitude(self):
        # with z = 0 and the state on the target circle, the commanded duty
        # cycle reduces to a rotation-invariant vector of known magnitude
        bundle = make_preset("dcac-default")
        p = preset_params("dcac-default")
        expected = (p.A / p.E) * math.hypot(
            1.0 - p.L * p.C * p.omega**2, p.L * p.omega / p.R
        )
        assert abs(expected - 0.4509256539391283) < 1e-12
        for theta in np.linspace(0.0, 2 * math.pi, 9):
            xi = p.A * np.array([math.cos(theta), math.sin(theta)])
            u = bundle.controller.v(bundle.immersion.pi(xi), np.zeros(2))
            assert abs(np.linalg.norm(u) - expected) < 1e-12

    def test_duty_cycle_within_limit_on_orbit(self):
        bundle = make_preset("dcac-default")
        assert bundle.info["u_limit"] == 1.0
        xi = np.array([12.0, 0.0])
        u = bundle.controller.v(bundle.immersion.pi(xi), np.zeros(2))
        assert np.max(np.abs(u)) < 1.0

    def test_target_circle_is_invariant(self):
        bundle = make_preset("dcac-default")
        A = bundle.info["A"]
        for theta in (0.1, 1.7, 3.0, 5.5):
            xi = A * np.array([math.cos(theta), math.sin(theta)])
            radial = float(xi @ bundle.target.alpha(xi))
            assert abs(radial) < 1e-9 * A * A

    def test_no_first_integral_recorded(self):
        bundle = make_preset("dcac-default")
        assert bundle.target.first_integral is None
