"""Sensing matrices, analog filter models, and rank certification.

The flat-filter matrix D collects the picked PR coefficients; with a
frequency-selective filter each observed bin w gets its own matrix B[w]
whose entries are the D entries weighted by the filter value at the
image-shifted query frequency.  Query frequencies always land inside the
filter passband; anything else is a window/shift bug and raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoprimalityError
from .indexing import (WindowContext, context_from_params, expansion_terms,
                       gamma, picking_index)

_LPF_STREAM = 23  # RNG substream tag for the random passband draw


@dataclass(frozen=True)
class FilterResponse:
    """Low-pass response sampled on the delta_f grid.

    `values[j]` is the response at signed bin j - half_bins, covering
    [-W_LPF/2, W_LPF/2).  The passband magnitude never drops below g_min.
    With the half-open band convention the leftmost bin has no mirror
    partner inside the band; it is drawn real so the response stays as close
    to a real impulse response as the convention allows.
    """

    kind: str
    values: np.ndarray
    half_bins: int
    g_min: float
    seed: int

    def value_at(self, signed_bins: np.ndarray) -> np.ndarray:
        """Response at signed bin indices; raises on out-of-passband query."""
        bins = np.asarray(signed_bins, dtype=np.int64)
        if bins.size and (bins.min() < -self.half_bins or bins.max() >= self.half_bins):
            raise ValueError(
                "filter queried outside its passband: bins "
                f"[{bins.min()}, {bins.max()}] vs +-{self.half_bins}"
            )
        return self.values[bins + self.half_bins]


def build_lpf(kind: str, dp, seed: int = 0, g_min_frac: float = 0.05) -> FilterResponse:
    """Construct the passband response on the bin grid.

    ideal: constant 1.  random: independent complex Gaussian per positive
    bin, mirrored Hermitian, with any bin of magnitude below g_min (a
    fraction of the draw RMS) redrawn; deterministic given the seed.
    """
    half = dp.lpf_half_bins
    if kind == "ideal":
        values = np.ones(2 * half, dtype=complex)
        return FilterResponse(kind=kind, values=values, half_bins=half,
                              g_min=1.0, seed=int(seed))
    if kind != "random":
        raise ValueError(f"unknown filter kind {kind!r}")
    rng = np.random.default_rng([int(seed), _LPF_STREAM])
    pos = (rng.standard_normal(half - 1) + 1j * rng.standard_normal(half - 1))
    pos /= math.sqrt(2.0)
    dc = complex(rng.standard_normal())
    edge = complex(rng.standard_normal())  # bin -half: no mirror inside band
    values = np.zeros(2 * half, dtype=complex)
    values[0] = edge
    values[half] = dc
    values[half + 1:] = pos
    values[1:half] = np.conj(pos[::-1])
    rms = float(np.sqrt(np.mean(np.abs(values) ** 2)))
    g_min = g_min_frac * rms
    # redraw the independent slots until every magnitude clears the floor
    for _ in range(256):
        low_pos = np.abs(values[half + 1:]) < g_min
        low_dc = abs(values[half]) < g_min
        low_edge = abs(values[0]) < g_min
        if not (low_pos.any() or low_dc or low_edge):
            break
        n_low = int(low_pos.sum())
        if n_low:
            redraw = (rng.standard_normal(n_low) + 1j * rng.standard_normal(n_low))
            values[half + 1:][low_pos] = redraw / math.sqrt(2.0)
            values[1:half][low_pos[::-1]] = np.conj(values[half + 1:][low_pos][::-1])
        if low_dc:
            values[half] = complex(rng.standard_normal())
        if low_edge:
            values[0] = complex(rng.standard_normal())
    else:
        raise RuntimeError("filter redraw loop failed to clear the magnitude floor")
    return FilterResponse(kind=kind, values=values, half_bins=half,
                          g_min=g_min, seed=int(seed))


@dataclass(frozen=True)
class SensingModel:
    """Flat matrix D plus optional per-bin matrices for a non-flat filter.

    Row order is (channel i) * q' + (digital branch u); column c maps to
    subband index k = N1 + c.  per_bin is None for an ideal filter, in which
    case every B[w] equals D.
    """

    D: np.ndarray
    per_bin: np.ndarray | None
    w_indices: np.ndarray
    N1: int
    q_prime: int

    @property
    def n_rows(self) -> int:
        return self.D.shape[0]

    @property
    def n_cols(self) -> int:
        return self.D.shape[1]

    def bin_matrix(self, j: int) -> np.ndarray:
        return self.D if self.per_bin is None else self.per_bin[j]


def _extended_picks(bank, dp, ctx: WindowContext):
    """Picking indices and filter shifts over k+u in [N1, N2 + q' - 1]."""
    ks = np.arange(dp.N1, dp.N2 + dp.q_prime, dtype=np.int64)
    i_vals = picking_index(ks, ctx)
    g_vals = ks - ctx.p * i_vals
    return ks, i_vals, g_vals


def build_D(bank, dp, ctx: WindowContext | None = None) -> np.ndarray:
    """Flat-filter sensing matrix, Mq' x Lp."""
    if ctx is None:
        ctx = context_from_params(dp)
    if not ctx.coprime:
        raise CoprimalityError(
            "build_D uses the unique-picking rule; use build_D_fold for "
            "non-coprime (p, q')"
        )
    _, i_vals, _ = _extended_picks(bank, dp, ctx)
    picked = bank.coeff_rows(i_vals)  # (M, N + q' - 1)
    q, n = dp.q_prime, dp.N
    d = np.empty((dp.M * q, n), dtype=complex)
    for u in range(q):
        d[u::q, :] = picked[:, u:u + n]
    return d


def build_D_fold(bank, dp, r1: int | None = None, r2: int | None = None) -> np.ndarray:
    """Sensing matrix by direct fold summation; valid for any gcd(p, q').

    Each entry sums c_{i,l} over every (r, l) with r*q' + l*p equal to the
    subband index.  For coprime parameters exactly one term survives and the
    result equals build_D; otherwise columns collide or vanish, which is
    precisely the rank pathology the spark experiments chart.
    """
    if r1 is None or r2 is None:
        r2 = dp.p // 2
        r1 = r2 - dp.p + 1
    ctx_like = WindowContext(R1=r1, R2=r2, p=dp.p, q_prime=dp.q_prime, q_inv=None)
    q, n = dp.q_prime, dp.N
    d = np.zeros((dp.M * q, n), dtype=complex)
    for v_off, v in enumerate(range(dp.N1, dp.N2 + q)):
        total = np.zeros(dp.M, dtype=complex)
        for _, l in expansion_terms(ctx_like, v):
            total += bank.coeff_rows(np.array([l]))[:, 0]
        k_lo = max(0, v_off - (q - 1))
        k_hi = min(n - 1, v_off)
        for k in range(k_lo, k_hi + 1):
            u = v_off - k
            d[np.arange(dp.M) * q + u, k] = total
    return d


def build_Bw(bank, lpf: FilterResponse, dp, ctx: WindowContext | None = None) -> np.ndarray:
    """Per-bin sensing matrices, stacked (2W, Mq', N).

    Entry [j, (i,u), k] = d_{i,k+u} * G(w_j*delta_f - gamma'(k,u)*f_p'),
    with w_j the j-th window bin.  All query bins are asserted inside the
    passband.
    """
    if ctx is None:
        ctx = context_from_params(dp)
    _, i_vals, g_vals = _extended_picks(bank, dp, ctx)
    picked = bank.coeff_rows(i_vals)  # (M, N + q' - 1)
    q, n, two_w = dp.q_prime, dp.N, 2 * dp.W
    u_arr = np.arange(q, dtype=np.int64)
    # gamma'(k, u) = gamma(k + u) - u, in window-bin units of 2W
    gp = g_vals[np.newaxis, :] * 1  # (1, N + q' - 1)
    shifts = np.empty((q, n), dtype=np.int64)
    for u in u_arr:
        shifts[u] = (g_vals[u:u + n] - u) * two_w
    query = dp.w_offset + np.arange(two_w)[:, None, None] - shifts[None, :, :]
    gains = lpf.value_at(query)  # (2W, q', N)
    out = np.empty((two_w, dp.M * q, n), dtype=complex)
    for u in range(q):
        out[:, u::q, :] = picked[None, :, u:u + n] * gains[:, u, None, :]
    return out


def make_sensing_model(bank, lpf: FilterResponse, dp,
                       ctx: WindowContext | None = None) -> SensingModel:
    """Bundle D (and B[w] for a non-flat filter) with the window bins."""
    if ctx is None:
        ctx = context_from_params(dp)
    d = build_D(bank, dp, ctx)
    per_bin = None if lpf.kind == "ideal" else build_Bw(bank, lpf, dp, ctx)
    w_indices = np.arange(dp.w_offset, dp.w_offset + 2 * dp.W, dtype=np.int64)
    return SensingModel(D=d, per_bin=per_bin, w_indices=w_indices,
                        N1=dp.N1, q_prime=dp.q_prime)


def has_identical_columns(p: int, q_prime: int, bank, dp) -> bool:
    """Exact duplicate-column scan of the flat sensing matrix.

    Guaranteed True for coprime p > q'; expected False for q' > p with
    m-sequence banks.
    """
    d = build_D(bank, dp)
    unique_cols = np.unique(d.T, axis=0)
    return unique_cols.shape[0] < d.shape[1]


def column_independence_rate(model, trials: int, rng, tol: float = 1e-8) -> float:
    """Fraction of random Mq'-column selections that are full rank.

    `model` may be a SensingModel or a bare matrix.  Rank is certified by
    the smallest-to-largest singular value ratio exceeding tol.
    """
    d = getattr(model, "D", model)
    n_rows, n_cols = d.shape
    if n_cols < n_rows:
        raise ValueError(f"need at least {n_rows} columns, matrix has {n_cols}")
    ok = 0
    for _ in range(trials):
        cols = rng.choice(n_cols, size=n_rows, replace=False)
        s = np.linalg.svd(d[:, cols], compute_uv=False)
        if s[0] > 0 and s[-1] / s[0] > tol:
            ok += 1
    return ok / trials


def dump_matrix_csv(matrix: np.ndarray, dp, path) -> None:
    """CSV dump `row_i,row_u,col_k,re,im` (channel index zero-based)."""
    q = dp.q_prime
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row_i,row_u,col_k,re,im\n")
        for row in range(matrix.shape[0]):
            i, u = divmod(row, q)
            for col in range(matrix.shape[1]):
                v = matrix[row, col]
                fh.write(f"{i},{u},{dp.N1 + col},{v.real!r},{v.imag!r}\n")
