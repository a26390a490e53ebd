"""Grid calculus: quadrature, derivatives, sequence norms, symmetry."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville import (FourierRep, GridFunction, GridMismatchError,
                       SequenceData, cumulative_integral, differentiate,
                       inner_product, integral, l2_norm, resample, seq_norm,
                       sup_norm, symmetry_defect, symmetry_project)


def gf(fn, n=512):
    return GridFunction.from_callable(fn, n)


class TestGridFunction:
    def test_node_count(self):
        f = GridFunction(np.zeros(257))
        assert f.n == 256
        assert f.x[0] == 0.0 and f.x[-1] == 1.0

    def test_rejects_tiny_grids(self):
        with pytest.raises(ValueError):
            GridFunction(np.zeros(4))

    def test_rejects_non_finite(self):
        v = np.zeros(257)
        v[3] = np.inf
        with pytest.raises(ValueError):
            GridFunction(v)

    def test_values_immutable(self):
        f = GridFunction(np.zeros(257))
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_arithmetic(self):
        f = gf(lambda x: x)
        g = gf(lambda x: 1.0 - x)
        assert np.allclose((f + g).values, 1.0)
        assert np.allclose((f - f).values, 0.0)
        assert np.allclose((2.0 * f).values, 2.0 * f.values)
        assert np.allclose((-f).values, -f.values)
        assert np.allclose((1.0 - f).values, g.values)

    def test_mismatched_grids_raise(self):
        with pytest.raises(GridMismatchError):
            gf(lambda x: x, 256) + gf(lambda x: x, 512)

    def test_reflected(self):
        f = gf(lambda x: x ** 2)
        r = f.reflected()
        assert np.allclose(r.values, (1.0 - f.x) ** 2)


class TestQuadrature:
    def test_cubics_exact(self):
        for k in range(4):
            f = gf(lambda x, k=k: x ** k)
            assert integral(f) == pytest.approx(1.0 / (k + 1), abs=1e-15)

    def test_odd_cell_count_still_cubic_exact(self):
        f = gf(lambda x: x ** 3, n=501)
        assert integral(f) == pytest.approx(0.25, abs=1e-14)

    def test_smooth_fourth_order(self):
        exact = math.e - 1.0
        errs = [abs(integral(gf(np.exp, n)) - exact) for n in (64, 128)]
        assert errs[1] <= errs[0] / 12.0
        assert abs(integral(gf(np.exp, 2048)) - exact) < 1e-14

    def test_trig(self):
        assert integral(gf(lambda x: np.sin(2 * np.pi * x))) == \
            pytest.approx(0.0, abs=1e-13)
        assert integral(gf(lambda x: np.cos(np.pi * x) ** 2)) == \
            pytest.approx(0.5, abs=1e-13)

    def test_norm_and_inner_product(self):
        f = gf(lambda x: np.sqrt(2.0) * np.sin(np.pi * x))
        g = gf(lambda x: np.sqrt(2.0) * np.sin(2 * np.pi * x))
        assert l2_norm(f) == pytest.approx(1.0, abs=1e-12)
        assert inner_product(f, g) == pytest.approx(0.0, abs=1e-12)

    def test_sup_norm(self):
        assert sup_norm(gf(lambda x: -3.0 + 0.0 * x)) == 3.0


class TestCalculus:
    def test_derivative_exact_on_quartics(self):
        f = gf(lambda x: x ** 4)
        df = differentiate(f)
        assert np.max(np.abs(df.values - 4.0 * f.x ** 3)) < 1e-11

    def test_derivative_fourth_order(self):
        def err(n):
            f = gf(lambda x: np.sin(2 * np.pi * x), n)
            return np.max(np.abs(differentiate(f).values
                                 - 2 * np.pi * np.cos(2 * np.pi * f.x)))
        assert err(512) <= err(256) / 12.0
        assert err(256) < 1e-6

    def test_cumulative_integral(self):
        def err(n):
            f = gf(lambda x: np.cos(2 * np.pi * x), n)
            exact = np.sin(2 * np.pi * f.x) / (2 * np.pi)
            return np.max(np.abs(cumulative_integral(f).values - exact))
        assert err(512) <= err(256) / 12.0
        assert err(512) < 1e-9
        assert cumulative_integral(gf(lambda x: x)).values[0] == 0.0

    def test_fundamental_theorem(self):
        f = gf(lambda x: np.exp(x) * np.sin(3 * x))
        back = differentiate(cumulative_integral(f))
        assert np.max(np.abs(back.values - f.values)) < 1e-8


class TestSequences:
    def test_seq_norm_closed_form(self):
        assert seq_norm(SequenceData([1.0])) == pytest.approx(math.sqrt(2.0))
        assert seq_norm(SequenceData([1.0], alpha=1.0)) == \
            pytest.approx(2.0 * math.pi * math.sqrt(2.0))
        assert seq_norm(SequenceData([], alpha=1.0)) == 0.0

    def test_seq_norm_weight_grows_with_index(self):
        lone = [seq_norm(SequenceData(np.eye(4)[k], alpha=1.0))
                for k in range(4)]
        assert lone == sorted(lone)

    def test_entries_immutable(self):
        s = SequenceData([1.0, 2.0])
        with pytest.raises(ValueError):
            s.entries[0] = 5.0


class TestSymmetry:
    def test_projection_classes(self):
        odd = gf(lambda x: np.sin(2 * np.pi * x))
        even = gf(lambda x: np.cos(2 * np.pi * x))
        assert symmetry_defect(odd, "odd") < 1e-14
        assert symmetry_defect(even, "even") < 1e-14
        assert symmetry_defect(odd, "even") == pytest.approx(l2_norm(odd),
                                                             rel=1e-12)

    def test_projections_decompose(self):
        f = gf(lambda x: np.exp(x))
        total = symmetry_project(f, "odd") + symmetry_project(f, "even")
        assert np.allclose(total.values, f.values)

    def test_unknown_parity(self):
        with pytest.raises(ValueError):
            symmetry_project(gf(lambda x: x), "sideways")


class TestResample:
    def test_roundtrip_smooth(self):
        f = gf(lambda x: np.sin(2 * np.pi * x), 1024)
        g = resample(resample(f, 512), 1024)
        assert np.max(np.abs(g.values - f.values)) < 1e-10

    def test_identity_fastpath(self):
        f = gf(lambda x: x)
        assert resample(f, f.n) is f


class TestFourierRep:
    def test_sine_basis(self):
        f = FourierRep("sine", [0.0, 1.0]).evaluate(256)
        assert np.allclose(f.values, np.sin(2 * np.pi * f.x))

    def test_full_basis_mean(self):
        f = FourierRep("full", [0.25, 1.0, -0.5]).evaluate(512)
        assert integral(f) == pytest.approx(0.25, abs=1e-12)

    def test_unknown_basis(self):
        with pytest.raises(ValueError):
            FourierRep("hexagonal", [1.0])


coeffs = st.lists(st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False),
                  min_size=1, max_size=5)


@st.composite
def waves(draw):
    return FourierRep("sine", draw(coeffs)).evaluate(256)


class TestProperties:
    @given(waves(), waves(), st.floats(-3.0, 3.0))
    @settings(deadline=None)
    def test_integral_linear(self, f, g, c):
        lhs = integral(f + g * c)
        assert lhs == pytest.approx(integral(f) + c * integral(g),
                                    abs=1e-10 * (1 + abs(c)))

    @given(waves())
    @settings(deadline=None)
    def test_integral_bounded_by_sup(self, f):
        assert abs(integral(f)) <= sup_norm(f) + 1e-12

    @given(waves(), waves())
    @settings(deadline=None)
    def test_inner_product_symmetric(self, f, g):
        assert inner_product(f, g) == pytest.approx(inner_product(g, f),
                                                    abs=1e-12)

    @given(waves())
    @settings(deadline=None)
    def test_norm_consistent(self, f):
        assert l2_norm(f) ** 2 == pytest.approx(inner_product(f, f),
                                                abs=1e-12)

    @given(waves(), st.sampled_from(["odd", "even"]))
    @settings(deadline=None)
    def test_projection_idempotent(self, f, parity):
        p = symmetry_project(f, parity)
        again = symmetry_project(p, parity)
        assert np.allclose(again.values, p.values)
        assert symmetry_defect(p, parity) < 1e-12

    @given(waves())
    @settings(deadline=None)
    def test_parity_parts_orthogonal(self, f):
        odd = symmetry_project(f, "odd")
        even = symmetry_project(f, "even")
        assert inner_product(odd, even) == pytest.approx(0.0, abs=1e-10)
