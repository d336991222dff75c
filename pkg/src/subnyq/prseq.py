"""Periodic +-1 pseudo-random chip sequences and their Fourier coefficients.

Chips come from maximum-length LFSR sequences; each analog channel gets the
same primitive polynomial with a different nonzero start state.  Fourier
coefficients are defined on the dense simulation grid (DFT of one waveform
period divided by the period length), which makes the closed-form sensing
matrices agree with the time-domain simulation to machine precision.  The
continuous-time coefficients (sinc envelope instead of the discrete Dirichlet
one) are available as an alternate mode but nothing in the package uses them
by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_BANK_STREAM = 11  # RNG substream tag for channel start states

# Primitive polynomials over GF(2): bit j of the mask is the coefficient of
# x^j, constant term included, leading x^degree implicit.  All verified to
# give the full 2^degree - 1 period.
PRIMITIVE_TAPS = {
    3: 0b0000_0011,        # x^3 + x + 1
    4: 0b0000_0011,        # x^4 + x + 1
    5: 0b0000_0101,        # x^5 + x^2 + 1
    6: 0b0000_0011,        # x^6 + x + 1
    7: 0b0000_1001,        # x^7 + x^3 + 1
    8: 0b0001_1101,        # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b0001_0001,        # x^9 + x^4 + 1
    10: 0b0000_1001,       # x^10 + x^3 + 1
    11: 0b0000_0101,       # x^11 + x^2 + 1
}


def taps_for_length(L: int) -> tuple:
    """(degree, taps) for chip count L = 2^degree - 1, degrees 3..11."""
    degree = (L + 1).bit_length() - 1
    if 2**degree - 1 != L or degree not in PRIMITIVE_TAPS:
        raise ValueError(
            f"L={L} is not 2^d - 1 for a tabulated degree d in "
            f"{sorted(PRIMITIVE_TAPS)}"
        )
    return degree, PRIMITIVE_TAPS[degree]


def mseq(degree: int, taps: int, init_state: int) -> np.ndarray:
    """Full-period maximum-length sequence as +-1 chips.

    The LFSR shifts right; the output bit is the LSB of the state and the
    feedback bit (parity of state AND taps) enters at the top.  Binary 1 maps
    to +1 and 0 to -1.  Rejects a zero start state and any taps whose cycle is
    shorter than 2^degree - 1.
    """
    if degree < 2:
        raise ValueError("degree must be >= 2")
    if init_state == 0:
        raise ValueError("init_state must be nonzero")
    if not 0 < init_state < 2**degree:
        raise ValueError(f"init_state must fit in {degree} bits")
    period = 2**degree - 1
    state = init_state
    seen = set()
    bits = np.empty(period, dtype=np.int64)
    for n in range(period):
        if state in seen:
            raise ValueError(
                f"taps {taps:#x} are not primitive for degree {degree}: "
                f"state cycle shorter than {period}"
            )
        seen.add(state)
        bits[n] = state & 1
        feedback = bin(state & taps).count("1") & 1
        state = (state >> 1) | (feedback << (degree - 1))
    if state != init_state:
        raise ValueError(
            f"taps {taps:#x} are not primitive for degree {degree}: "
            f"state does not return after {period} steps"
        )
    return 2 * bits - 1


def pr_waveform_dense(chips: np.ndarray, dp, n_periods: int | None = None) -> np.ndarray:
    """Piecewise-constant chip waveform on the dense grid.

    Each chip spans 2*q' dense samples; one period is 2*q'*L samples.  The
    default period count fills the observation window exactly (n_dense
    samples).
    """
    chips = np.asarray(chips, dtype=np.float64)
    if chips.shape != (dp.L,):
        raise ValueError(f"expected {dp.L} chips, got shape {chips.shape}")
    if n_periods is None:
        n_periods = 2 * dp.W * dp.p
    one_period = np.repeat(chips, 2 * dp.q_prime)
    return np.tile(one_period, n_periods)


def fourier_coeffs(chips: np.ndarray, dp, l_max: int) -> np.ndarray:
    """Dense-grid Fourier coefficients c_l for l in [-l_max, l_max].

    c_l = (1/n_per) * sum_n p_dense[n] * exp(-2j*pi*l*n/n_per) with
    n_per = 2*q'*L, evaluated in closed form as the chip DFT times the
    geometric sum of one chip's worth of dense samples.
    """
    chips = np.asarray(chips, dtype=np.float64)
    L = chips.shape[0]
    q = dp.q_prime
    n_per = 2 * q * L
    if not l_max < q * L:
        raise ValueError(f"l_max={l_max} must stay below the fold-over q'*L={q * L}")
    ls = np.arange(-l_max, l_max + 1)
    # chip-level DFT at fractional frequencies l/L; arguments reduced mod L
    # so harmonics at exact chip-rate multiples come out exactly zero below
    phase_idx = np.outer(np.arange(L), ls) % L
    chip_dft = chips @ np.exp(-2j * np.pi * phase_idx / L)
    # per-chip hold factor: sum_{m=0}^{2q'-1} exp(-2j*pi*l*m/n_per)
    numer = 1.0 - np.exp(-2j * np.pi * (ls % L) / L)
    denom = 1.0 - np.exp(-2j * np.pi * (ls % n_per) / n_per)
    hold = np.divide(numer, denom, out=np.full(ls.shape, 2.0 * q, dtype=complex),
                     where=ls % n_per != 0)
    return chip_dft * hold / n_per


def fourier_coeffs_continuous(chips: np.ndarray, l_max: int) -> np.ndarray:
    """Continuous-time Fourier series coefficients (sinc envelope).

    Alternate mode; differs from the dense-grid definition by O(1/q')
    Dirichlet-vs-sinc terms and is not used by the matrix model.
    """
    chips = np.asarray(chips, dtype=np.float64)
    L = chips.shape[0]
    ls = np.arange(-l_max, l_max + 1)
    phases = np.exp(-1j * np.pi * np.outer(2 * np.arange(L) + 1, ls) / L)
    return (chips @ phases) * np.sinc(ls / L) / L


@dataclass(frozen=True)
class PRBank:
    """Chip matrix (M x L) and per-channel Fourier coefficients.

    coeffs[i] holds c_{i,l} for l in [-l_max, l_max]; rows are distinct
    shifts of the same maximum-length sequence.
    """

    chips: np.ndarray
    coeffs: np.ndarray
    l_max: int
    start_states: tuple

    @property
    def n_channels(self) -> int:
        return self.chips.shape[0]

    def coeff(self, i: int, l: int):
        """c_{i,l}; raises when |l| exceeds the tabulated margin."""
        l = int(l)
        if abs(l) > self.l_max:
            raise ValueError(
                f"picked index l={l} outside tabulated range +-{self.l_max}; "
                "bank built with too small a margin"
            )
        return self.coeffs[i, l + self.l_max]

    def coeff_rows(self, ls: np.ndarray) -> np.ndarray:
        """coeffs[:, ls] for an array of signed indices, bounds-checked."""
        ls = np.asarray(ls, dtype=np.int64)
        if ls.size and (np.abs(ls) > self.l_max).any():
            bad = int(np.abs(ls).max())
            raise ValueError(
                f"picked index |l|={bad} outside tabulated range +-{self.l_max}"
            )
        return self.coeffs[:, ls + self.l_max]


def default_l_max(dp) -> int:
    """Margin covering every index the picking rule can reach."""
    return dp.L0 + dp.q0_prime + dp.p * dp.q_prime


def build_pr_bank(dp, seed: int, l_max: int | None = None,
                  coeff_mode: str = "discrete") -> PRBank:
    """Bank of M distinct m-sequence channels with tabulated coefficients."""
    degree, taps = taps_for_length(dp.L)
    if l_max is None:
        l_max = default_l_max(dp)
    rng = np.random.default_rng([int(seed), _BANK_STREAM])
    states = rng.choice(dp.L, size=dp.M, replace=False) + 1  # nonzero, < 2^degree
    chips = np.stack([mseq(degree, taps, int(s)) for s in states])
    if coeff_mode == "discrete":
        coeffs = np.stack([fourier_coeffs(row, dp, l_max) for row in chips])
    elif coeff_mode == "continuous":
        coeffs = np.stack([fourier_coeffs_continuous(row, l_max) for row in chips])
    else:
        raise ValueError(f"unknown coeff_mode {coeff_mode!r}")
    return PRBank(chips=chips, coeffs=coeffs, l_max=int(l_max),
                  start_states=tuple(int(s) for s in states))


def dump_chips_csv(bank: PRBank, path) -> None:
    """One CSV row of chip values per channel, for cross checks."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in bank.chips:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
