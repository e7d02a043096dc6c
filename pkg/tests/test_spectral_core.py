import json
import math

import numpy as np
import pytest

from conftest import random_kappas
from errors import (
    DegenerateGap,
    EmptySpectrum,
    LengthMismatch,
    NonAscendingSpectrum,
    NonPositiveConstant,
    NonPositiveKappa,
    NonPositiveNorming,
    OverflowShift,
    ReconstructionError,
)
from spectral_core import (
    Constants,
    Shifts,
    SpectralInput,
    SymmetricMode,
    ValidatedSpectrum,
    load_spectral_input,
    norming_constants,
    pair_log_ratios,
    validate,
)


class TestValidate:
    def test_single_level_symmetric(self):
        s = validate(SpectralInput((1.0,)))
        assert s.shifts == (0.0,)

    def test_two_levels_symmetric(self):
        s = validate(SpectralInput((1.0, 2.0), SymmetricMode()))
        assert s.shifts[0] == pytest.approx(math.log(3) / 2, abs=1e-14)
        assert s.shifts[1] == pytest.approx(math.log(3) / 4, abs=1e-14)

    def test_constants_mode(self):
        s = validate(SpectralInput((1.0,), Constants((math.sqrt(2.0),))))
        assert s.shifts[0] == pytest.approx(0.0, abs=1e-15)

    def test_shifts_pass_through(self):
        s = validate(SpectralInput((1.0, 3.0), Shifts((0.5, -2.0))))
        assert s.shifts == (0.5, -2.0)

    def test_energies(self):
        s = validate(SpectralInput((1.0, 2.0), c_phys=0.5))
        assert np.allclose(s.energies, [-0.5, -2.0])

    @pytest.mark.parametrize("kappas, error", [
        ((), EmptySpectrum),
        ((2.0, 1.0), NonAscendingSpectrum),
        ((1.0, 1.0), NonAscendingSpectrum),
        ((-1.0, 2.0), NonPositiveKappa),
        ((0.0,), NonPositiveKappa),
        ((float("nan"),), NonPositiveKappa),
        ((1.0, 1.0 + 1e-12), DegenerateGap),
    ])
    def test_rejects_bad_kappas(self, kappas, error):
        with pytest.raises(error):
            validate(SpectralInput(kappas))

    def test_gap_threshold_is_configurable(self):
        spectral_input = SpectralInput((1.0, 1.001))
        validate(spectral_input)
        with pytest.raises(DegenerateGap):
            validate(spectral_input, gap_rel=1e-3)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            validate(SpectralInput((1.0, 2.0), Constants((1.0,))))
        with pytest.raises(LengthMismatch):
            validate(SpectralInput((1.0, 2.0), Shifts((0.0, 0.0, 0.0))))

    def test_non_positive_norming(self):
        with pytest.raises(NonPositiveNorming):
            validate(SpectralInput((1.0, 2.0), Constants((1.0, 0.0))))

    def test_extreme_constants_stay_finite(self):
        big = validate(SpectralInput((1.0,), Constants((1e200,))))
        assert big.shifts[0] == pytest.approx(460.1704450085292, rel=1e-14)
        small = validate(SpectralInput((1.0,), Constants((1e-200,))))
        assert small.shifts[0] == pytest.approx(math.log(1e-200) - 0.5 * math.log(2.0), rel=1e-14)
        assert all(math.isfinite(x) for x in big.shifts + small.shifts)

    def test_unrepresentable_shift_is_rejected(self):
        with pytest.raises(NonPositiveNorming):
            validate(SpectralInput((1e-310,), Constants((1e200,))), gap_rel=0.0)

    def test_non_positive_constant(self):
        with pytest.raises(NonPositiveConstant):
            validate(SpectralInput((1.0,), c_phys=0.0))

    def test_errors_are_value_errors_with_codes(self):
        with pytest.raises(ValueError) as info:
            validate(SpectralInput((2.0, 1.0)))
        payload = info.value.to_dict()
        assert payload["error"] == "NonAscendingSpectrum"
        assert "message" in payload["detail"]


class TestNormingConstants:
    def test_single_level(self):
        s = ValidatedSpectrum((1.0,), (0.0,))
        assert norming_constants(s)[0] == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_two_level_symmetric(self):
        s = validate(SpectralInput((1.0, 2.0)))
        c = norming_constants(s)
        assert c ** 2 / (2.0 * s.kappa_array) == pytest.approx([3.0, 3.0], rel=1e-13)

    def test_round_trip(self):
        constants = (0.7, 3.1, 12.5)
        s = validate(SpectralInput((0.5, 1.5, 2.25), Constants(constants)))
        assert norming_constants(s) == pytest.approx(constants, rel=1e-12)

    def test_overflow(self):
        s = ValidatedSpectrum((1.0,), (400.0,))
        with pytest.raises(OverflowShift):
            norming_constants(s)


class TestSymmetricShiftProperties:
    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_weighted_sum_matches_pair_logs(self, rng, n):
        for _ in range(10):
            k = np.array(random_kappas(rng, n))
            s = validate(SpectralInput(tuple(k)))
            c = pair_log_ratios(k)
            expected = float(np.sum(np.triu(c, 1)))
            assert float(np.dot(k, s.shift_array)) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("scale", [0.01, 0.5, 3.0, 250.0])
    def test_scaling_kappas_scales_shifts_inversely(self, rng, scale):
        for n in range(1, 7):
            k = random_kappas(rng, n)
            base = validate(SpectralInput(tuple(k)))
            scaled = validate(SpectralInput(tuple(scale * v for v in k)))
            assert scaled.shift_array == pytest.approx(base.shift_array / scale, rel=1e-12, abs=1e-12)

    def test_validate_norming_round_trip_is_idempotent(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 9))
            k = random_kappas(rng, n)
            first = validate(SpectralInput(tuple(k)))
            again = validate(SpectralInput(tuple(k), Constants(tuple(norming_constants(first)))))
            assert again.shift_array == pytest.approx(first.shift_array, rel=1e-12, abs=1e-12)
            assert norming_constants(again) == pytest.approx(norming_constants(first), rel=1e-12)


class TestSpectralInputIO:
    def test_json_round_trip(self):
        original = SpectralInput((1.0, 2.5), Constants((1.5, 2.0)), c_phys=0.25)
        restored = SpectralInput.from_json(original.to_json())
        assert restored == original

    def test_symmetric_default(self):
        restored = SpectralInput.from_json(json.dumps({"kappas": [1, 2]}))
        assert isinstance(restored.norming, SymmetricMode)
        assert restored.c_phys == 1.0

    def test_unknown_mode(self):
        with pytest.raises(ReconstructionError):
            SpectralInput.from_dict({"kappas": [1], "norming": {"mode": "bogus"}})

    def test_missing_kappas(self):
        with pytest.raises(ReconstructionError):
            SpectralInput.from_dict({"norming": {"mode": "symmetric"}})

    def test_bad_json(self):
        with pytest.raises(ReconstructionError):
            SpectralInput.from_json("{not json")

    def test_load_file(self, tmp_path):
        path = tmp_path / "spectrum.json"
        path.write_text(json.dumps({"kappas": [1.0, 3.0], "norming": {"mode": "shifts", "values": [0, 1]}}))
        spectral_input = load_spectral_input(path)
        assert spectral_input.kappas == (1.0, 3.0)
        assert spectral_input.norming == Shifts((0.0, 1.0))
