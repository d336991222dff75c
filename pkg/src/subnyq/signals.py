"""Sparse multiband test signals on the dense grid, plus calibrated noise.

Bands are synthesized directly in the frequency domain as contiguous runs of
grid bins filled with complex Gaussian values, so band edges and therefore
the ground-truth support are exact.  Mirror bins are filled Hermitian to
keep the time samples real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandPlacementError
from .params import DerivedParams, SupportSet, support_from_bands

_MAX_PLACEMENT_ATTEMPTS = 2000


@dataclass(frozen=True)
class Band:
    """One positive-frequency band; the conjugate mirror is implied."""

    f_center_hz: float
    width_hz: float
    energy: float


@dataclass(frozen=True)
class BandSet:
    bands: tuple

    def two_sided_intervals(self):
        """Closed [lo, hi] spans of occupied bin centers, mirrors included."""
        out = []
        for b in self.bands:
            lo = b.f_center_hz - b.width_hz / 2.0
            hi = b.f_center_hz + b.width_hz / 2.0
            out.append((lo, hi))
            out.append((-hi, -lo))
        return out


@dataclass(frozen=True)
class DenseSignal:
    """Real samples on the dense simulation grid."""

    samples: np.ndarray
    rate_hz: float

    def __len__(self):
        return self.samples.shape[0]


def band_bins(dp: DerivedParams) -> int:
    """Grid bins per band: as close to the band width as fits under it."""
    return max(1, int(math.floor(dp.band_max_width_hz / dp.delta_f)))


def gen_multiband(k_b: int, dp: DerivedParams, rng,
                  energy: float = 1.0):
    """Draw a sparse multiband signal; returns (signal, bands, support).

    k_b counts bands on the two-sided spectrum, so k_b/2 positive-frequency
    placements are drawn uniformly with rejection, keeping one empty guard
    bin between bands and away from DC and +-f_max.  Each band's bins get
    i.i.d. complex Gaussian values normalized to exactly `energy` per side.
    """
    if k_b < 2 or k_b % 2:
        raise ValueError(f"k_b must be a positive even integer, got {k_b}")
    n_bands = k_b // 2
    n_b = band_bins(dp)
    lo_start, hi_start = 2, dp.nyq_bin - 1 - n_b  # guard from DC and +f_max
    if hi_start < lo_start:
        raise BandPlacementError(
            f"band of {n_b} bins cannot fit below the Nyquist bin {dp.nyq_bin}"
        )
    starts = []
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        cand = int(rng.integers(lo_start, hi_start + 1))
        if all(cand + n_b < s or s + n_b < cand for s in starts):
            starts.append(cand)
            if len(starts) == n_bands:
                break
    else:
        raise BandPlacementError(
            f"could not place {n_bands} bands of {n_b} bins after "
            f"{_MAX_PLACEMENT_ATTEMPTS} attempts"
        )
    spectrum = np.zeros(dp.n_dense, dtype=complex)
    bands = []
    for m0 in sorted(starts):
        vals = rng.standard_normal(n_b) + 1j * rng.standard_normal(n_b)
        vals *= math.sqrt(energy) / np.linalg.norm(vals)
        spectrum[m0:m0 + n_b] = vals
        spectrum[(-np.arange(m0, m0 + n_b)) % dp.n_dense] = np.conj(vals)
        bands.append(Band(
            f_center_hz=(m0 + (n_b - 1) / 2.0) * dp.delta_f,
            width_hz=(n_b - 1) * dp.delta_f,
            energy=energy,
        ))
    band_set = BandSet(bands=tuple(bands))
    support = support_from_bands(band_set, dp)
    x = np.fft.ifft(spectrum)
    rms = float(np.sqrt(np.mean(np.abs(x) ** 2)))
    assert np.abs(x.imag).max() <= 1e-12 * max(rms, 1e-300), \
        "Hermitian synthesis must yield a real signal"
    return DenseSignal(samples=x.real, rate_hz=dp.dense_rate), band_set, support


def gen_fullband(dp: DerivedParams, rng) -> DenseSignal:
    """Random content on every Nyquist-range bin (no sparsity).

    Harder input than a sparse draw for pipeline-vs-model checks: it
    exercises every column of the sensing matrices at once.
    """
    spectrum = np.zeros(dp.n_dense, dtype=complex)
    bins = np.arange(1, dp.nyq_bin)
    vals = rng.standard_normal(bins.size) + 1j * rng.standard_normal(bins.size)
    spectrum[bins] = vals
    spectrum[-bins % dp.n_dense] = np.conj(vals)
    return DenseSignal(samples=np.fft.ifft(spectrum).real, rate_hz=dp.dense_rate)


def make_tone(dp: DerivedParams, signed_bin: int, amplitude: float = 1.0) -> DenseSignal:
    """Real two-sided tone at one grid bin; rejects out-of-Nyquist bins."""
    if abs(signed_bin) >= dp.nyq_bin:
        raise ValueError(
            f"tone bin {signed_bin} lies outside the Nyquist range "
            f"(+-{dp.nyq_bin} bins); out-of-band content is not modeled"
        )
    spectrum = np.zeros(dp.n_dense, dtype=complex)
    spectrum[signed_bin % dp.n_dense] = amplitude
    spectrum[(-signed_bin) % dp.n_dense] = amplitude
    x = np.fft.ifft(spectrum)
    return DenseSignal(samples=x.real, rate_hz=dp.dense_rate)


def add_awgn(x: DenseSignal, snr_db: float | None, rng) -> DenseSignal:
    """Add white Gaussian noise at an exact per-realization energy ratio.

    None (or +inf) means no noise.  The noise is scaled so that
    ||x||^2 / ||n||^2 equals 10^(snr_db/10) exactly.
    """
    if snr_db is None or snr_db == math.inf:
        return DenseSignal(samples=x.samples.copy(), rate_hz=x.rate_hz)
    sig_norm = float(np.linalg.norm(x.samples))
    if sig_norm == 0.0:
        raise ValueError("cannot set an SNR on an all-zero signal")
    noise = rng.standard_normal(x.samples.shape[0])
    noise *= sig_norm / (float(np.linalg.norm(noise)) * 10.0 ** (snr_db / 20.0))
    return DenseSignal(samples=x.samples + noise, rate_hz=x.rate_hz)


def extract_X2W(x: DenseSignal, dp: DerivedParams) -> np.ndarray:
    """Ground-truth subband matrix, N x 2W.

    Row k - N1, column j holds the dense DFT of the samples at bin
    (w_offset + j) - 2W*k, reduced modulo n_dense.  The scale is the raw
    (unnormalized) DFT value; the acquisition calibration is chosen so the
    measured matrix matches D @ X2W at this scale.
    """
    spectrum = np.fft.fft(np.asarray(x.samples))
    ks = np.arange(dp.N1, dp.N2 + 1, dtype=np.int64)
    js = np.arange(2 * dp.W, dtype=np.int64)
    bins = (dp.w_offset + js[None, :] - 2 * dp.W * ks[:, None]) % dp.n_dense
    return spectrum[bins]


def support_from_rows(x2w: np.ndarray, dp: DerivedParams,
                      rel_tol: float = 1e-12) -> SupportSet:
    """Row-energy support of a subband matrix (oracle for the band geometry)."""
    energy = np.sum(np.abs(x2w) ** 2, axis=1)
    total = float(energy.sum())
    if total == 0.0:
        return SupportSet.from_iterable([], dp)
    rows = np.nonzero(energy > rel_tol * total)[0]
    return SupportSet.from_iterable(rows + dp.N1, dp)


def dump_bandset_csv(band_set: BandSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("f_center_hz,width_hz,energy\n")
        for b in band_set.bands:
            fh.write(f"{b.f_center_hz!r},{b.width_hz!r},{b.energy!r}\n")
