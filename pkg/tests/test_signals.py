import numpy as np
import pytest

from subnyq import (BandPlacementError, SystemConfig, add_awgn, band_bins,
                    derive_params, dump_bandset_csv, extract_X2W, gen_fullband,
                    gen_multiband, make_tone, support_from_bands,
                    support_from_rows)
from subnyq.signals import DenseSignal


def make_dp(**kw):
    base = dict(f_max_hz=1e9, L=31, M=2, p=2, q_prime=5, W=4,
                band_max_width_hz=4e6)
    base.update(kw)
    return derive_params(SystemConfig(**base))


class TestGenMultiband:
    def test_spectrum_zero_outside_bands(self):
        dp = make_dp()
        rng = np.random.default_rng(0)
        x, band_set, _ = gen_multiband(4, dp, rng)
        spectrum = np.fft.fft(x.samples)
        occupied = np.zeros(dp.n_dense, dtype=bool)
        n_b = band_bins(dp)
        for b in band_set.bands:
            m0 = round((b.f_center_hz - b.width_hz / 2) / dp.delta_f)
            occupied[m0:m0 + n_b] = True
            occupied[(-np.arange(m0, m0 + n_b)) % dp.n_dense] = True
        leak = np.abs(spectrum[~occupied]).max()
        assert leak <= 1e-10 * np.abs(spectrum).max()

    def test_band_energies_equal(self):
        dp = make_dp()
        x, band_set, _ = gen_multiband(6, dp, np.random.default_rng(1))
        spectrum = np.fft.fft(x.samples)
        n_b = band_bins(dp)
        energies = []
        for b in band_set.bands:
            m0 = round((b.f_center_hz - b.width_hz / 2) / dp.delta_f)
            energies.append(np.sum(np.abs(spectrum[m0:m0 + n_b]) ** 2))
        assert np.ptp(energies) <= 1e-12 * energies[0]

    def test_real_samples(self):
        dp = make_dp()
        x, _, _ = gen_multiband(4, dp, np.random.default_rng(2))
        assert x.samples.dtype == np.float64

    def test_support_bounds(self):
        dp = make_dp(p=4, q_prime=9)
        assert dp.f_p_prime >= dp.band_max_width_hz
        rng = np.random.default_rng(3)
        for _ in range(50):
            _, _, support = gen_multiband(10, dp, rng)
            assert len(support) <= 20

    def test_support_matches_row_energy_oracle(self):
        dp = make_dp()
        rng = np.random.default_rng(4)
        for _ in range(100):
            x, band_set, support = gen_multiband(4, dp, rng)
            rows = support_from_rows(extract_X2W(x, dp), dp)
            assert rows.indices == support.indices
            geo = support_from_bands(band_set, dp)
            assert geo.indices == support.indices

    def test_rejects_odd_band_count(self):
        dp = make_dp()
        with pytest.raises(ValueError):
            gen_multiband(3, dp, np.random.default_rng(0))

    def test_placement_failure_reported(self):
        dp = make_dp(W=1, q_prime=3, L=7, p=1)  # tiny grid
        with pytest.raises(BandPlacementError):
            gen_multiband(40, dp, np.random.default_rng(0))


class TestNoise:
    def test_exact_zero_db(self):
        dp = make_dp()
        x, _, _ = gen_multiband(4, dp, np.random.default_rng(5))
        noisy = add_awgn(x, 0.0, np.random.default_rng(6))
        n = noisy.samples - x.samples
        assert np.sum(x.samples**2) / np.sum(n**2) == pytest.approx(1.0)

    def test_exact_three_db(self):
        dp = make_dp()
        x, _, _ = gen_multiband(4, dp, np.random.default_rng(7))
        noisy = add_awgn(x, 3.0, np.random.default_rng(8))
        n = noisy.samples - x.samples
        assert np.sum(x.samples**2) / np.sum(n**2) == pytest.approx(
            1.9953, abs=1e-3)

    def test_no_noise_sentinels(self):
        dp = make_dp()
        x, _, _ = gen_multiband(4, dp, np.random.default_rng(9))
        for snr in (None, np.inf):
            out = add_awgn(x, snr, np.random.default_rng(10))
            assert np.array_equal(out.samples, x.samples)

    def test_zero_signal_rejected(self):
        dp = make_dp()
        silent = DenseSignal(np.zeros(dp.n_dense), dp.dense_rate)
        with pytest.raises(ValueError):
            add_awgn(silent, 10.0, np.random.default_rng(0))


class TestExtract:
    def test_zero_signal(self):
        dp = make_dp()
        x = DenseSignal(np.zeros(dp.n_dense), dp.dense_rate)
        assert np.all(extract_X2W(x, dp) == 0)

    def test_shape(self):
        dp = make_dp()
        x, _, _ = gen_multiband(4, dp, np.random.default_rng(11))
        assert extract_X2W(x, dp).shape == (dp.N, 2 * dp.W)

    def test_single_tone_single_row(self):
        dp = make_dp()
        k_star = 3
        tone_bin = dp.w_offset + dp.W - 2 * dp.W * k_star
        x = make_tone(dp, tone_bin)
        x2w = extract_X2W(x, dp)
        energy = np.sum(np.abs(x2w) ** 2, axis=1)
        hot = np.nonzero(energy > 1e-12 * energy.sum())[0] + dp.N1
        # the tone and its mirror each light exactly one row
        assert k_star in hot
        assert len(hot) == 2

    def test_out_of_band_tone_rejected(self):
        dp = make_dp()
        with pytest.raises(ValueError, match="Nyquist"):
            make_tone(dp, dp.nyq_bin + 5)


class TestFullband:
    def test_covers_every_row(self):
        dp = make_dp(W=3)
        x = gen_fullband(dp, np.random.default_rng(12))
        energy = np.sum(np.abs(extract_X2W(x, dp)) ** 2, axis=1)
        assert np.all(energy > 0)


class TestDump:
    def test_bandset_csv(self, tmp_path):
        dp = make_dp()
        _, band_set, _ = gen_multiband(4, dp, np.random.default_rng(13))
        path = tmp_path / "bands.csv"
        dump_bandset_csv(band_set, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "f_center_hz,width_hz,energy"
        assert len(lines) == 1 + len(band_set.bands)
