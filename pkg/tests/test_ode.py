"""Characteristic functions, shooting traces, and picture equivalence."""

import math

import numpy as np
import pytest

from liouville import (INF, ConditionU, GridFunction, Impedance,
                       ImpedanceProblem, IntegrationError, Potential,
                       SchrodingerProblem, build_rho, compute_c0,
                       forward_transform, oscillation_count, shoot_backward,
                       shoot_forward, wronskian)

N = 2048
FREE = SchrodingerProblem(Potential(GridFunction.zeros(N)))


def q_two_mode(n=N):
    return Impedance(GridFunction.from_callable(
        lambda x: 0.4 * np.sin(2 * np.pi * x) - 0.2 * np.sin(4 * np.pi * x),
        n))


def w_free_dirichlet(lam):
    if lam > 0:
        s = math.sqrt(lam)
        return math.sin(s) / s
    if lam < 0:
        s = math.sqrt(-lam)
        return math.sinh(s) / s
    return 1.0


def w_free(lam, a, b):
    """Closed form for the zero potential under general boundary data."""
    if lam == 0:
        y1, dy1, integ = 1.0, 0.0, 1.0
    elif lam > 0:
        s = math.sqrt(lam)
        y1, dy1, integ = math.cos(s), -s * math.sin(s), math.sin(s) / s
    else:
        t = math.sqrt(-lam)
        y1, dy1, integ = math.cosh(t), t * math.sinh(t), math.sinh(t) / t
    if a == INF:
        y, dy = integ, y1
    else:
        y, dy = y1 + a * integ, dy1 + a * y1
    if b == INF:
        return y
    return dy + b * y


class TestClosedFormValues:
    @pytest.mark.parametrize("lam", [-100.0, -3.7, 0.0, 2.3, 7.3, 91.0])
    def test_dirichlet_free(self, lam):
        assert wronskian(FREE, lam) == pytest.approx(w_free_dirichlet(lam),
                                                     rel=1e-8, abs=1e-12)

    @pytest.mark.parametrize("a,b", [(INF, 0.7), (INF, 0.0), (1.0, -0.5),
                                     (0.3, INF)])
    @pytest.mark.parametrize("lam", [-20.0, 0.0, 5.1, 60.0])
    def test_general_boundaries_free(self, a, b, lam):
        assert wronskian(FREE, lam, a=a, b=b) == pytest.approx(
            w_free(lam, a, b), rel=1e-8, abs=1e-12)

    def test_lambda_derivative_free(self):
        lam = 7.3
        s = math.sqrt(lam)
        exact = (s * math.cos(s) - math.sin(s)) / (2.0 * s ** 3)
        w, dw = wronskian(FREE, lam, deriv=True)
        assert w == pytest.approx(w_free_dirichlet(lam), rel=1e-11)
        assert dw == pytest.approx(exact, rel=1e-9)

    def test_lambda_derivative_matches_differences(self):
        prob = ImpedanceProblem(q_two_mode(), ConditionU.exponential(0.5, 1.0))
        lam, d = 13.7, 1e-5
        w, dw = wronskian(prob, lam, b=0.7, deriv=True)
        fd = (wronskian(prob, lam + d, b=0.7)
              - wronskian(prob, lam - d, b=0.7)) / (2.0 * d)
        assert dw == pytest.approx(fd, rel=1e-7)


class TestDeepNegativeLambda:
    def test_moderately_deep_is_plain(self):
        lam = -3000.0
        s = math.sqrt(-lam)
        assert wronskian(FREE, lam) == pytest.approx(math.sinh(s) / s,
                                                     rel=3e-6)

    def test_overflow_requires_scaled_form(self):
        # exp(sqrt(-lam)) passes the floating range, so the plain form must
        # refuse while the scaled form stays finite and accurate in the log.
        free = SchrodingerProblem(Potential(GridFunction.zeros(8192)))
        lam = -1.0e6
        with pytest.raises(IntegrationError):
            wronskian(free, lam)
        m, ls = wronskian(free, lam, scaled=True)
        t = math.sqrt(-lam)
        assert math.isfinite(m) and math.isfinite(ls)
        assert abs(math.log(abs(m)) + ls - (t - math.log(2.0 * t))) < 2e-2


class TestTraces:
    def test_forward_free_closed_form(self):
        lam = 7.3
        s = math.sqrt(lam)
        tr = shoot_forward(FREE, lam)
        x = tr.y.x
        assert np.max(np.abs(tr.y.values - np.sin(s * x) / s)) < 1e-12
        assert np.max(np.abs(tr.dy.values - np.cos(s * x))) < 1e-12

    def test_forward_custom_initial_data(self):
        lam = 5.5
        s = math.sqrt(lam)
        tr = shoot_forward(FREE, lam, y0=1.0, dy0=0.3)
        x = tr.y.x
        exact = np.cos(s * x) + 0.3 * np.sin(s * x) / s
        assert np.max(np.abs(tr.y.values - exact)) < 1e-12

    def test_backward_encodes_right_boundary(self):
        lam = 7.3
        s = math.sqrt(lam)
        tb = shoot_backward(FREE, lam)
        x = tb.y.x
        assert tb.y.values[-1] == 0.0
        assert tb.dy.values[-1] == -1.0
        assert np.max(np.abs(tb.y.values - np.sin(s * (1 - x)) / s)) < 1e-12
        tr = shoot_backward(FREE, lam, b=0.7)
        assert tr.y.values[-1] == 1.0
        assert tr.dy.values[-1] == -0.7

    @pytest.mark.parametrize("b", [INF, 0.7])
    def test_cross_wronskian_is_constant(self, b):
        prob = SchrodingerProblem(forward_transform(q_two_mode()))
        lam = 11.0
        yf = shoot_forward(prob, lam)
        yb = shoot_backward(prob, lam, b=b)
        W = yf.y.values * yb.dy.values - yf.dy.values * yb.y.values
        assert W.std() < 1e-13 * (1.0 + np.abs(W).max())
        assert wronskian(prob, lam, b=b) == pytest.approx(-W.mean(),
                                                          rel=1e-10)

    def test_weighted_cross_wronskian_impedance(self):
        q = Impedance(GridFunction.from_callable(
            lambda x: np.sin(np.pi * x), N))
        prob = ImpedanceProblem(q)
        lam = 9.0
        yf = shoot_forward(prob, lam)
        yb = shoot_backward(prob, lam)
        profile = build_rho(q)
        weight = profile.rho.values ** 2
        W = weight * (yf.y.values * yb.dy.values - yf.dy.values * yb.y.values)
        assert W.std() < 1e-13 * (1.0 + np.abs(W).max())
        assert wronskian(prob, lam) == pytest.approx(
            -W.mean() / profile.rho1, rel=1e-10)

    def test_trace_overflow_raises(self):
        with pytest.raises(IntegrationError):
            shoot_forward(FREE, -2.0e6)


class TestOscillation:
    def test_zero_counts(self):
        for k in range(5):
            lam = ((k + 0.5) * math.pi) ** 2
            assert oscillation_count(FREE, lam) == k

    def test_deep_negative_has_no_zeros(self):
        assert oscillation_count(FREE, -50.0) == 0

    def test_counts_step_at_eigenvalues(self):
        prob = ImpedanceProblem(q_two_mode())
        lams = np.linspace(1.0, 250.0, 40)
        counts = [oscillation_count(prob, lam) for lam in lams]
        assert counts == sorted(counts)
        assert counts[-1] >= 4


class TestPictureEquivalence:
    @pytest.mark.parametrize("b", [INF, 1.0])
    def test_characteristic_functions_agree(self, b):
        q = q_two_mode()
        cfg = ConditionU.exponential(0.5, 1.0)
        imp = ImpedanceProblem(q, cfg)
        sch = SchrodingerProblem(forward_transform(q, cfg))
        c0 = compute_c0(q, cfg)
        for lam in (-8.0, 0.0, 7.3, 44.4, 130.0):
            assert wronskian(imp, lam, b=b) == pytest.approx(
                wronskian(sch, lam - c0, b=b), rel=1e-9, abs=1e-11)

    def test_endpoint_weight_enters(self):
        q = Impedance(GridFunction.from_callable(
            lambda x: np.sin(np.pi * x), N))
        imp = ImpedanceProblem(q)
        sch = SchrodingerProblem(forward_transform(q))
        c0 = compute_c0(q, ConditionU.zero())
        for lam in (3.0, 25.0):
            assert wronskian(imp, lam) == pytest.approx(
                wronskian(sch, lam - c0), rel=1e-9, abs=1e-11)


class TestRefinement:
    def test_fourth_order_convergence(self):
        lam = 11.0
        cfg = ConditionU.exponential(0.5, 1.0)
        ref = wronskian(ImpedanceProblem(q_two_mode(8192), cfg), lam, b=0.7)
        errs = [abs(wronskian(ImpedanceProblem(q_two_mode(n), cfg), lam,
                              b=0.7) - ref)
                for n in (256, 512, 1024)]
        assert errs[-1] < 1e-10
        for coarse, fine in zip(errs, errs[1:]):
            assert 11.0 < coarse / fine < 23.0
