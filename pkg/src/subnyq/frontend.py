"""Dense-grid simulation of the analog front end and digital channelizer.

Each channel mixes the input with its chip waveform, low-pass filters by
zeroing dense FFT bins outside the passband (circular over the observation
window), and decimates in time, which folds the filtered spectrum onto the
ADC band.  The channelizer is a DFT-block partition of the decimated
samples: on the finite window that is exactly the ideal
modulate/filter/decimate chain.  A fixed calibration scalar (the decimation
factor) makes the measured matrix equal the sensing-model prediction, not
merely proportional to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prseq import pr_waveform_dense
from .sensing import FilterResponse, SensingModel
from .signals import DenseSignal


@dataclass(frozen=True)
class MeasurementSet:
    """Channelized measurements, Mq' x 2W.

    Row order is (channel i) * q' + (branch u); column j corresponds to
    absolute bin w_offset + j.  `calibration` is the scalar already applied
    so that Z equals the model prediction.
    """

    Z: np.ndarray
    calibration: float
    w_indices: np.ndarray


def _passband_index(dp) -> np.ndarray:
    half = dp.lpf_half_bins
    return np.arange(-half, half) % dp.n_dense


def channel_output(x: DenseSignal, chips: np.ndarray, lpf: FilterResponse,
                   dp) -> np.ndarray:
    """One channel of the front end: mix, filter, decimate.

    Returns the 2Wq' complex ADC samples for the observation window.
    """
    samples = np.asarray(x.samples)
    if samples.shape[0] != dp.n_dense:
        raise ValueError(
            f"signal length {samples.shape[0]} != dense window {dp.n_dense}"
        )
    mixed = samples * pr_waveform_dense(chips, dp)
    spectrum = np.fft.fft(mixed)
    half = dp.lpf_half_bins
    filtered = np.zeros_like(spectrum)
    idx = _passband_index(dp)
    filtered[idx] = lpf.value_at(np.arange(-half, half)) * spectrum[idx]
    y = np.fft.ifft(filtered)
    return y[::dp.decim]


def channelize(y_tilde: np.ndarray, dp) -> np.ndarray:
    """Split the ADC samples into q' branches of 2W spectral samples.

    Branch u holds the DFT bins starting at (w_offset + u*2W) mod 2Wq',
    i.e. the u-th splitting-interval slice of the sampled band.
    """
    y_tilde = np.asarray(y_tilde)
    n_adc = dp.n_adc
    if y_tilde.shape[0] != n_adc:
        raise ValueError(f"expected {n_adc} ADC samples, got {y_tilde.shape[0]}")
    spectrum = np.fft.fft(y_tilde)
    two_w = 2 * dp.W
    u = np.arange(dp.q_prime, dtype=np.int64)
    j = np.arange(two_w, dtype=np.int64)
    bins = (dp.w_offset + u[:, None] * two_w + j[None, :]) % n_adc
    return spectrum[bins]


def _folded_rows(x_samples: np.ndarray, chips: np.ndarray, lpf: FilterResponse,
                 dp) -> np.ndarray:
    """Calibrated channel rows without the intermediate time-domain hop.

    The DFT of the decimated samples is 1/decim times the fold of the
    filtered spectrum over the ADC band, so the calibrated rows are the fold
    itself.  Algebraically identical to
    decim * channelize(channel_output(...)).
    """
    mixed = x_samples * pr_waveform_dense(chips, dp)
    spectrum = np.fft.fft(mixed)
    half = dp.lpf_half_bins
    idx = _passband_index(dp)
    passband = lpf.value_at(np.arange(-half, half)) * spectrum[idx]
    n_adc = dp.n_adc
    # fold: ADC bin b accumulates filtered bins congruent to it mod 2Wq';
    # the passband is exactly p ADC bands wide, so reshape-and-sum folds it
    reps = (2 * half) // n_adc  # = p images
    fold_rolled = passband.reshape(reps, n_adc).sum(axis=0)
    fold = np.roll(fold_rolled, (-half) % n_adc)
    two_w = 2 * dp.W
    u = np.arange(dp.q_prime, dtype=np.int64)
    j = np.arange(two_w, dtype=np.int64)
    bins = (dp.w_offset + u[:, None] * two_w + j[None, :]) % n_adc
    return fold[bins]


def acquire(x: DenseSignal, bank, lpf: FilterResponse, dp) -> MeasurementSet:
    """Run every channel and stack the calibrated measurement matrix."""
    samples = np.asarray(x.samples)
    if samples.shape[0] != dp.n_dense:
        raise ValueError(
            f"signal length {samples.shape[0]} != dense window {dp.n_dense}"
        )
    q = dp.q_prime
    z = np.empty((dp.M * q, 2 * dp.W), dtype=complex)
    for i in range(dp.M):
        z[i * q:(i + 1) * q, :] = _folded_rows(samples, bank.chips[i], lpf, dp)
    w_indices = np.arange(dp.w_offset, dp.w_offset + 2 * dp.W, dtype=np.int64)
    return MeasurementSet(Z=z, calibration=float(dp.decim), w_indices=w_indices)


def model_predict(model: SensingModel, x2w: np.ndarray) -> np.ndarray:
    """Sensing-model prediction: D @ X2W, or B[w_j] @ X2W[:, j] per bin."""
    x2w = np.asarray(x2w)
    if x2w.shape[0] != model.n_cols:
        raise ValueError(
            f"X2W has {x2w.shape[0]} rows, model expects {model.n_cols}"
        )
    if model.per_bin is None:
        return model.D @ x2w
    if x2w.shape[1] != model.per_bin.shape[0]:
        raise ValueError(
            f"X2W has {x2w.shape[1]} columns, model has "
            f"{model.per_bin.shape[0]} per-bin matrices"
        )
    return np.einsum("jmk,kj->mj", model.per_bin, x2w)


def relative_model_error(x: DenseSignal, bank, lpf: FilterResponse, dp,
                         model: SensingModel | None = None) -> float:
    """Frobenius mismatch between the simulated pipeline and the model."""
    from .sensing import make_sensing_model
    from .signals import extract_X2W

    if model is None:
        model = make_sensing_model(bank, lpf, dp)
    measured = acquire(x, bank, lpf, dp).Z
    predicted = model_predict(model, extract_X2W(x, dp))
    ref = float(np.linalg.norm(predicted))
    if ref == 0.0:
        return float(np.linalg.norm(measured))
    return float(np.linalg.norm(measured - predicted)) / ref


def dump_measurements_csv(ms: MeasurementSet, dp, path) -> None:
    """CSV dump `row_i,row_u,col_j,re,im` (channel index zero-based)."""
    q = dp.q_prime
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row_i,row_u,col_j,re,im\n")
        for row in range(ms.Z.shape[0]):
            i, u = divmod(row, q)
            for col in range(ms.Z.shape[1]):
                v = ms.Z[row, col]
                fh.write(f"{i},{u},{col},{v.real!r},{v.imag!r}\n")
