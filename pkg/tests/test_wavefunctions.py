import math

import numpy as np
import pytest
from scipy.integrate import simpson

from conftest import random_kappas
from errors import IndexOutOfRange, OverflowRange
from spectra_gen import poschl_teller_spectrum
from spectral_core import Constants, SpectralInput, validate
from wavefunctions import (
    WavefunctionSet,
    eval_psi,
    matrix_A,
    psi_vector,
    schrodinger_residual,
    sign_changes,
)


class TestMatrixA:
    def test_far_right_is_identity(self, single_level):
        assert np.allclose(matrix_A(single_level, 40.0), [[1.0]], atol=1e-30)

    def test_origin(self, single_level):
        assert matrix_A(single_level, 0.0) == pytest.approx(np.array([[2.0]]))

    def test_symmetric(self, pt4):
        a = matrix_A(pt4, 0.37)
        assert np.array_equal(a, a.T)

    def test_overflow(self, pt4):
        with pytest.raises(OverflowRange):
            matrix_A(pt4, -1000.0)


class TestEvalPsi:
    def test_single_level_closed_form(self, single_level):
        assert eval_psi(single_level, 1, 0.0) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-14)
        for x in (-2.5, 0.4, 3.0):
            assert eval_psi(single_level, 1, x) == pytest.approx(1.0 / (math.sqrt(2.0) * math.cosh(x)), rel=1e-12)

    @pytest.mark.parametrize("n", [0, 5, 1.5])
    def test_index_out_of_range(self, pt4, n):
        with pytest.raises(IndexOutOfRange):
            eval_psi(pt4, n, 0.0)

    def test_vector_matches_scalar(self, pt4):
        values = psi_vector(pt4, 0.6)
        for n in range(1, 5):
            assert values[n - 1] == pytest.approx(eval_psi(pt4, n, 0.6), rel=1e-14)

    def test_jost_asymptotics(self, pt4):
        wavefunctions = WavefunctionSet(pt4)
        for n, (kappa, c_n) in enumerate(zip(pt4.kappas, wavefunctions.norming), start=1):
            x = 30.0 / kappa
            assert wavefunctions.evaluate(n, x) * math.exp(kappa * x) == pytest.approx(c_n, rel=1e-4)


class TestWavefunctionSet:
    @staticmethod
    def _gram(spectrum):
        half = 40.0 / spectrum.kappas[0]
        xs = np.linspace(-half, half, 32001)
        psi = WavefunctionSet(spectrum).sample(xs)
        return np.array([[simpson(psi[:, i] * psi[:, j], x=xs) for j in range(spectrum.n)]
                         for i in range(spectrum.n)])

    @pytest.mark.parametrize("n", range(1, 7))
    def test_orthonormal_poschl_teller(self, n):
        spectrum = validate(poschl_teller_spectrum(n))
        assert np.allclose(self._gram(spectrum), np.eye(n), atol=1e-5)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_orthonormal_random(self, rng, n):
        for _ in range(3):
            spectrum = validate(SpectralInput(tuple(random_kappas(rng, n, 0.5, 2.5, 0.2))))
            assert np.allclose(self._gram(spectrum), np.eye(n), atol=1e-5)

    def test_single_level_normalized(self, single_level):
        xs = np.linspace(-40.0, 40.0, 8001)
        psi = WavefunctionSet(single_level).sample(xs)[:, 0]
        assert simpson(psi * psi, x=xs) == pytest.approx(1.0, abs=1e-6)

    def test_node_counts_follow_decay_ordering(self, pt4):
        xs = np.linspace(-15.0, 15.0, 3001)
        psi = WavefunctionSet(pt4).sample(xs)
        # κ 最大的态最深、无节点
        nodes = [sign_changes(psi[:, n], floor=1e-12) for n in range(4)]
        assert nodes == [3, 2, 1, 0]

    def test_sample_matches_pointwise(self, pt4):
        xs = np.linspace(-3.0, 3.0, 13)
        batch = WavefunctionSet(pt4).sample(xs)
        for x, row in zip(xs, batch):
            pointwise = psi_vector(pt4, x)
            # 奇态在 x=0 处只剩舍入噪声，绝对容差按 max|Ψ| 取
            assert np.allclose(row, pointwise, rtol=1e-12, atol=1e-13 * np.max(np.abs(pointwise)))

    def test_to_csv(self, pt4):
        text = WavefunctionSet(pt4).to_csv(np.linspace(-1, 1, 3))
        lines = text.splitlines()
        assert lines[0] == "x,psi_1,psi_2,psi_3,psi_4"
        assert len(lines) == 4

    def test_norming_matches_input(self):
        s = validate(SpectralInput((0.5, 1.2), Constants((0.8, 2.5))))
        assert WavefunctionSet(s).norming == pytest.approx([0.8, 2.5], rel=1e-12)


class TestSchrodingerResidual:
    def test_single_level(self, single_level):
        for x in np.linspace(-3.0, 3.0, 13):
            assert schrodinger_residual(single_level, 1, x) < 1e-6

    def test_example_spectrum(self, pt4):
        wavefunctions = WavefunctionSet(pt4)
        for n in range(1, 5):
            for x in np.linspace(-3.0, 3.0, 9):
                assert wavefunctions.residual(n, x) < 1e-5

    def test_far_tail(self, pt4):
        assert WavefunctionSet(pt4).residual(1, 60.0) < 1e-12


class TestSignChanges:
    def test_counts(self):
        assert sign_changes([1.0, -1.0, 2.0]) == 2
        assert sign_changes([1.0, 1e-20, 1.0], floor=1e-15) == 0
        assert sign_changes([]) == 0
