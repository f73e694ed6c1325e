import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fsscomp import CONSTANTS, FrequencyGrid, QDotParams, eval_phi, marginal, normalize, overlap
from fsscomp.errors import DegenerateInputError, GridCoverageWarning, GridMismatchError, ParameterError
from fsscomp.spectra import DEFAULT_N, DEFAULT_SPAN_GAMMAS, SpectralAmplitude, lorentzian_amplitude

from conftest import HBAR, closed_form_overlap, params_for_ratio


def time_domain_overlap(S, Gamma):
    """<H|V> as a direct emission-time integral (independent of any grid)."""
    s = S / HBAR
    T = 60.0 / Gamma

    def part(f):
        return integrate.dblquad(
            lambda t2, t1: 2 * Gamma**2 * math.exp(-Gamma * (t1 + t2)) * f(s * (t2 - t1)),
            0, T, lambda t1: t1, lambda t1: T, epsabs=1e-12,
        )[0]

    return complex(part(math.cos), part(math.sin))


class TestConstants:
    def test_hbar_value(self):
        assert CONSTANTS.hbar == HBAR

    def test_round_trip(self):
        assert CONSTANTS.rate_to_energy(CONSTANTS.energy_to_rate(3.7)) == pytest.approx(3.7, rel=1e-15)

    def test_one_microvolt(self):
        assert CONSTANTS.energy_to_rate(1.0) == pytest.approx(1.519267, rel=1e-6)


class TestQDotParams:
    def test_derived_lines(self):
        p = QDotParams(omega0=100.0, omegaH2=40.0, S=HBAR * 2, Gamma=1.0)
        assert p.split_rate == pytest.approx(2.0)
        assert p.omegaH1 == 60.0
        assert p.omegaV2 == pytest.approx(38.0)
        assert p.omegaV1 == pytest.approx(62.0)
        h, v = p.line_centers("H"), p.line_centers("V")
        assert sum(h) == pytest.approx(100.0) and sum(v) == pytest.approx(100.0)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan])
    def test_gamma_must_be_positive(self, bad):
        with pytest.raises(ParameterError):
            QDotParams(1.0, 1.0, 1.0, bad)

    def test_path_name(self):
        with pytest.raises(ParameterError):
            QDotParams.typical().line_centers("D")


class TestGrid:
    def test_power_of_two(self):
        with pytest.raises(ParameterError):
            FrequencyGrid(0, 0, 10.0, 100)
        with pytest.raises(ParameterError):
            FrequencyGrid(0, 0, -1.0, 64)

    def test_default_spacing_quarter_gamma(self):
        g = FrequencyGrid.default(QDotParams.typical(Gamma=2.0))
        assert g.n == DEFAULT_N and g.dw == pytest.approx(2.0 * DEFAULT_SPAN_GAMMAS / DEFAULT_N)
        assert g.dw == pytest.approx(0.5)

    def test_axis_contains_center(self):
        g = FrequencyGrid(5.0, -3.0, 16.0, 64)
        assert np.any(g.axis1 == 5.0) and np.any(g.axis2 == -3.0)
        np.testing.assert_allclose(g.offsets(1, 5.0), g.axis1 - 5.0, atol=1e-12)

    def test_for_exact_step(self):
        p = QDotParams.typical(S=1.0)
        g = FrequencyGrid.for_exact_step(p, 64.0, 256)
        steps = p.split_rate / g.dw
        assert abs(steps - round(steps)) < 1e-9
        assert g.span == pytest.approx(64.0, rel=0.05)


class TestEvalPhi:
    def test_s_zero_paths_identical(self, small_grid):
        p = QDotParams.typical(S=0.0)
        g = FrequencyGrid.default(p, 64.0, 256)
        np.testing.assert_array_equal(eval_phi("H", g, p).values, eval_phi("V", g, p).values)

    def test_peak_location(self, small_params):
        g = FrequencyGrid.default(small_params, 64.0, 512)
        phi = eval_phi("H", g, small_params)
        i, j = np.unravel_index(np.argmax(np.abs(phi.values)), phi.values.shape)
        assert abs(g.axis2[j] - small_params.omegaH2) <= g.dw
        assert abs(g.axis1[i] - small_params.omegaH1) <= g.dw

    def test_prefactor_at_line_center(self):
        p = QDotParams(omega0=10.0, omegaH2=4.0, S=0.0, Gamma=1.0)
        g = FrequencyGrid(6.0, 4.0, 32.0, 64)
        phi = eval_phi("H", g, p)
        i = j = 32  # nodes at the centers
        expected = (math.sqrt(2) / (2 * math.pi)) / (1j) / (0.5j)
        assert phi.values[i, j] == pytest.approx(expected)

    def test_raw_norm_deficit_default_grid(self):
        # tail estimate: photon 2 HWHM G/2, photon 1 HWHM 3G/2 -> 1 - norm ~ 2*(0.5+1.5)G/(pi*span/2)... ~1.9e-3
        p = QDotParams.typical()
        g = FrequencyGrid.default(p)
        deficit = 1 - eval_phi("H", g, p).norm2()
        assert 0 < deficit <= 2e-3
        assert deficit == pytest.approx(6 / (math.pi * DEFAULT_SPAN_GAMMAS), rel=0.05)

    def test_norm_tends_to_one(self):
        p = QDotParams.typical()
        d = [1 - eval_phi("H", FrequencyGrid.default(p, s, 512), p).norm2() for s in (32, 64, 128)]
        assert d[0] > d[1] > d[2] > 0

    def test_coverage_warning(self):
        p = QDotParams.typical()
        with pytest.warns(GridCoverageWarning):
            phi = eval_phi("H", FrequencyGrid.default(p, 4.0, 16), p)
        assert "grid-too-narrow" in phi.notes

    def test_no_warning_on_default(self, small_params, small_grid):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            eval_phi("V", small_grid, small_params)

    def test_periodic_matches_alias_sum(self):
        p = QDotParams(omega0=0.0, omegaH2=0.0, S=0.0, Gamma=1.0)
        g = FrequencyGrid(0.0, 0.0, 16.0, 16)
        per = eval_phi("H", g, p, periodic=True).values
        # brute alias sum over |m| <= M on each axis
        d1 = g.axis1[:, None]
        d2 = g.axis2[None, :]
        acc1 = np.zeros((16, 16), complex)
        acc2 = np.zeros((1, 16), complex)
        M = 4000
        for m in range(-M, M + 1):
            acc1 += 1 / (d1 + d2 + m * g.span + 1j)
            acc2 += 1 / (d2 + m * g.span + 0.5j)
        brute = (math.sqrt(2) / (2 * math.pi)) * acc1 * acc2
        np.testing.assert_allclose(per, brute, rtol=0, atol=2e-4 * np.abs(brute).max())


class TestOverlap:
    def test_time_domain_oracle_s1(self):
        ref = time_domain_overlap(1.0, 1.0)
        assert ref == pytest.approx(closed_form_overlap(1.0, 1.0), abs=1e-9)
        assert ref.real == pytest.approx(0.302282, abs=1e-6)
        assert ref.imag == pytest.approx(0.459247, abs=1e-6)
        assert abs(ref) == pytest.approx(0.549801, abs=1e-6)

    @pytest.mark.parametrize("ratio", [0.0, 0.7, 2.5])
    def test_grid_matches_closed_form(self, ratio):
        p = params_for_ratio(ratio)
        g = FrequencyGrid.default(p, 256.0, 1024)
        o = overlap(normalize(eval_phi("H", g, p)), normalize(eval_phi("V", g, p)))
        ref = closed_form_overlap(p.S, p.Gamma)
        assert abs(o.real - ref.real) < 3e-3 and abs(o.imag - ref.imag) < 3e-3

    def test_conjugate_symmetry(self, small_params, small_grid):
        a = eval_phi("H", small_grid, small_params)
        b = eval_phi("V", small_grid, small_params)
        assert overlap(a, b) == pytest.approx(np.conj(overlap(b, a)), abs=1e-15)

    def test_grid_mismatch(self, small_params, small_grid):
        other = FrequencyGrid.default(small_params, 64.0, 256)
        with pytest.raises(GridMismatchError):
            overlap(eval_phi("H", small_grid, small_params), eval_phi("H", other, small_params))

    def test_modulus_decreases_with_s(self):
        vals = []
        for S in (0.0, 0.3, 0.8, 1.5):
            p = QDotParams.typical(S=S)
            g = FrequencyGrid.default(p, 64.0, 256)
            vals.append(abs(overlap(normalize(eval_phi("H", g, p)), normalize(eval_phi("V", g, p)))))
        assert all(x > y for x, y in zip(vals, vals[1:]))


class TestNormalizeMarginal:
    def test_normalize(self, small_params, small_grid):
        a = normalize(eval_phi("H", small_grid, small_params))
        assert a.norm2() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(normalize(a).values, a.values, rtol=1e-14, atol=0)

    def test_zero(self, small_grid):
        with pytest.raises(DegenerateInputError):
            normalize(SpectralAmplitude(small_grid, np.zeros((512, 512))))

    def test_values_read_only(self, small_params, small_grid):
        a = eval_phi("H", small_grid, small_params)
        with pytest.raises(ValueError):
            a.values[0, 0] = 1.0

    @pytest.mark.parametrize("axis", [1, 2])
    def test_marginal_sums_to_norm(self, small_params, small_grid, axis):
        a = eval_phi("V", small_grid, small_params)
        assert marginal(a, axis).sum() * small_grid.dw == pytest.approx(a.norm2(), rel=1e-9)

    def test_marginal_axis(self, small_params, small_grid):
        with pytest.raises(ParameterError):
            marginal(eval_phi("H", small_grid, small_params), 3)

    def test_photon2_peaks_split_by_s(self):
        p = params_for_ratio(2.0)
        g = FrequencyGrid.default(p, 64.0, 512)
        pk = [g.axis2[np.argmax(marginal(eval_phi(k, g, p), 2))] for k in "HV"]
        assert pk[0] - pk[1] == pytest.approx(p.split_rate, abs=g.dw)


class TestLorentzian:
    def test_marginal_is_lorentzian(self):
        g = FrequencyGrid(0.0, 0.0, 512.0, 4096)
        a = lorentzian_amplitude(g, 1.0, -2.0, 1.5, 0.5)
        m = marginal(a, 1)
        ref = (1.5 / math.pi) / ((g.axis1 - 1.0) ** 2 + 1.5**2)
        np.testing.assert_allclose(m, ref / (ref.sum() * g.dw), rtol=1e-3)

    def test_widths_positive(self, small_grid):
        with pytest.raises(ParameterError):
            lorentzian_amplitude(small_grid, 0, 0, 0.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(
    S=st.floats(0.0, 4.0),
    Gamma=st.floats(0.3, 3.0),
)
def test_overlap_bounded_and_hermitian(S, Gamma):
    p = QDotParams.typical(S=S, Gamma=Gamma)
    g = FrequencyGrid.default(p, 64.0, 128)
    a = normalize(eval_phi("H", g, p))
    b = normalize(eval_phi("V", g, p))
    o = overlap(a, b)
    assert abs(o) <= 1 + 1e-12
    assert o == pytest.approx(np.conj(overlap(b, a)), abs=1e-14)
    ref = closed_form_overlap(S, Gamma)
    assert abs(o - ref) < 0.05  # coarse grid; tight check is on finer grids above
