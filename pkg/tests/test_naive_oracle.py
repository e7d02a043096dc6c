import math
import time

import numpy as np
import pytest

from conftest import EXTENDED_PRECISION, random_kappas
from errors import OverflowRange, SizeLimit
from naive_oracle import (
    BENCH_MAX_N,
    BenchmarkReport,
    assemble,
    benchmark,
    guarded_exponents,
    naive_log_derivatives,
    naive_log_tau,
    naive_potential,
    naive_tau,
)
from spectra_gen import poschl_teller_spectrum
from spectral_core import Shifts, SpectralInput, validate
from tau_engine import build_expansion, eval_potential, eval_tau

needs_extended = pytest.mark.skipif(not EXTENDED_PRECISION, reason="np.longdouble 与 double 相同")


def _random_spectrum(rng, n):
    kappas = random_kappas(rng, n, 0.3, 3.0, 0.05)
    if rng.random() < 0.5:
        return validate(SpectralInput(kappas))
    shifts = tuple(float(v) for v in rng.uniform(-1.0, 1.0, n))
    return validate(SpectralInput(kappas, Shifts(shifts)))


class TestAssemble:
    def test_single_level(self, pt1):
        assert np.allclose(assemble(pt1, 0.0).entries, [[2.0]])

    def test_two_levels_against_expansion(self):
        s = validate(poschl_teller_spectrum(2))
        m = assemble(s, 0.0).entries
        k, x = s.kappa_array, s.shift_array
        assert m[0, 0] == pytest.approx(2.0 * math.cosh(k[0] * x[0]))
        assert m[0, 1] == pytest.approx(2.0 * math.sqrt(2.0) / 3.0 * math.exp(k[1] * x[1]))
        log_tau, _, _ = eval_tau(build_expansion(s), 0.0)
        assert np.linalg.det(m) == pytest.approx(2.0 * math.exp(log_tau), rel=1e-12)

    def test_overflow(self, pt4):
        with pytest.raises(OverflowRange) as info:
            assemble(pt4, 1000.0)
        assert info.value.detail["index"] >= 1

    def test_guarded_exponents_shape(self, pt4):
        assert guarded_exponents(pt4, 0.5).shape == (4,)
        assert guarded_exponents(pt4, np.linspace(-1, 1, 7)).shape == (7, 4)


class TestNaiveTau:
    def test_single_level(self, pt1):
        assert naive_tau(pt1, 0.0) == pytest.approx(2.0)

    def test_two_levels(self):
        s = validate(poschl_teller_spectrum(2))
        log_tau, _, _ = eval_tau(build_expansion(s), 0.0)
        assert naive_tau(s, 0.0) == pytest.approx(2.0 * math.exp(log_tau), rel=1e-12)

    def test_size_limit(self):
        with pytest.raises(SizeLimit):
            naive_tau(validate(poschl_teller_spectrum(13)), 0.0)

    def test_log_tau_matches_det(self, pt4):
        for x in (-1.5, 0.0, 0.8):
            assert naive_log_tau(pt4, x) == pytest.approx(math.log(naive_tau(pt4, x)), abs=1e-10)

    def test_laplace_matches_lu(self, rng):
        s = _random_spectrum(rng, 5)
        for x in (-0.7, 0.4):
            assert naive_log_tau(s, x, "laplace") == pytest.approx(naive_log_tau(s, x, "lu"), abs=1e-9)

    def test_unknown_method(self, pt4):
        with pytest.raises(ValueError):
            naive_log_tau(pt4, 0.0, method="qr")


class TestExpansionEquivalence:
    def test_log_difference_is_linear(self, rng):
        tolerance = 1e-9 if EXTENDED_PRECISION else 1e-6
        for _ in range(50):
            n = int(rng.integers(1, 9))
            s = _random_spectrum(rng, n)
            expansion = build_expansion(s)
            xs = np.sort(rng.uniform(-3.0, 3.0, 5))
            diffs = np.array([naive_log_tau(s, x) - eval_tau(expansion, x)[0] for x in xs])
            for i in range(3):
                x0, x1, x2 = xs[i:i + 3]
                d0, d1, d2 = diffs[i:i + 3]
                interpolated = d0 + (d2 - d0) * (x1 - x0) / (x2 - x0)
                assert abs(d1 - interpolated) < tolerance

    def test_log_derivatives_agree(self, rng):
        tolerance = 1e-8 if EXTENDED_PRECISION else 1e-5
        for _ in range(50):
            n = int(rng.integers(1, 9))
            s = _random_spectrum(rng, n)
            expansion = build_expansion(s)
            for x in rng.uniform(-3.0, 3.0, 5):
                _, d1, d2 = eval_tau(expansion, x)
                naive_d1, naive_d2 = naive_log_derivatives(s, x)
                assert naive_d1 == pytest.approx(d1, abs=tolerance * max(1.0, abs(d1)))
                assert naive_d2 == pytest.approx(d2 - d1 * d1, abs=tolerance * max(1.0, abs(d2 - d1 * d1)))

    def test_log_derivatives_single_level(self, pt1):
        d1, d2 = naive_log_derivatives(pt1, 0.7)
        assert d1 == pytest.approx(math.tanh(0.7), abs=1e-14)
        assert d2 == pytest.approx(1.0 / math.cosh(0.7) ** 2, abs=1e-14)


class TestNaivePotential:
    @needs_extended
    def test_example_depth(self, pt4):
        assert naive_potential(pt4, 0.0, h=1e-4) == pytest.approx(-20.0, abs=5e-6)

    def test_single_level(self, pt1):
        assert naive_potential(pt1, 0.0, h=1e-4) == pytest.approx(-2.0, abs=5e-7)

    def test_richardson_improves(self, pt4):
        plain = abs(naive_potential(pt4, 0.3, h=1e-2) - eval_potential(build_expansion(pt4), 0.3))
        refined = abs(naive_potential(pt4, 0.3, h=1e-2, richardson=True) - eval_potential(build_expansion(pt4), 0.3))
        assert refined < plain / 10

    @needs_extended
    def test_agrees_with_expansion(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 5))
            s = validate(SpectralInput(random_kappas(rng, n, 0.5, 3.0, 0.4)))
            expansion = build_expansion(s)
            for x in rng.uniform(-2.0, 2.0, 3):
                assert naive_potential(s, x, h=1e-4) == pytest.approx(eval_potential(expansion, x), abs=1e-5)

    @needs_extended
    def test_laplace_route(self, pt4):
        assert naive_potential(pt4, 0.0, h=1e-3, richardson=True, method="laplace") == pytest.approx(-20.0, abs=1e-6)

    @pytest.mark.parametrize("h", [1e-6, 0.1])
    def test_step_range(self, pt4, h):
        with pytest.raises(ValueError):
            naive_potential(pt4, 0.0, h=h)


class TestBenchmark:
    def test_structure(self):
        report = benchmark(range(1, 11), points=4)
        assert [row.terms for row in report.rows] == [2 ** (n - 1) for n in range(1, 11)]
        for row in report.rows:
            assert row.expansion_ns > 0
            assert row.naive_lu_ns is not None
            assert (row.naive_laplace_ns is None) == (row.n > 8)

    def test_csv(self):
        text = benchmark([1, 2], points=3).to_csv()
        lines = text.splitlines()
        assert lines[0] == ",".join(BenchmarkReport.HEADER)
        assert [line.split(",")[-1] for line in lines[1:]] == ["1", "2"]

    def test_naive_agrees_at_eight(self):
        report = benchmark([8], points=200)
        tolerance = 1e-6 if EXTENDED_PRECISION else 1e-3
        assert report.rows[0].max_disagreement < tolerance

    def test_disagreement_does_not_depend_on_step(self):
        coarse = benchmark([5], points=10, h=1e-2).rows[0].max_disagreement
        fine = benchmark([5], points=10, h=1e-5).rows[0].max_disagreement
        assert coarse == pytest.approx(fine, abs=1e-12)

    def test_large_n_expansion_only(self):
        start = time.perf_counter()
        report = benchmark([20], points=100)
        row = report.rows[0]
        assert row.terms == 524_288
        assert row.naive_lu_ns is None and row.naive_laplace_ns is None
        assert time.perf_counter() - start < 60.0

    def test_size_limit(self):
        with pytest.raises(SizeLimit):
            benchmark([BENCH_MAX_N + 1], points=2)

    def test_points_must_be_positive(self):
        with pytest.raises(ValueError):
            benchmark([2], points=0)
