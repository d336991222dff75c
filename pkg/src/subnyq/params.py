"""System configuration and every rate/index constant derived from it.

All frequencies are stored in Hz as floats; every bin-level quantity
(decimation factor, dense sample count, window offset) is derived once in
exact integer arithmetic so that downstream index math never drifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

LPF_KINDS = ("ideal", "random")

# Serialized config schema: key name -> parser.
_CONFIG_SCHEMA = {
    "f_max_hz": float,
    "L": int,
    "M": int,
    "p": int,
    "q_prime": int,
    "W": int,
    "band_max_width_hz": float,
    "lpf_kind": str,
    "master_seed": int,
}


@dataclass(frozen=True)
class SystemConfig:
    """User-facing knobs of the acquisition system.

    f_max_hz: maximum input frequency; the Nyquist rate is twice this.
    L: chips per pseudo-random period (odd).
    M: number of analog channels.
    p: aliasing parameter; 1 keeps the ADC in the anti-aliasing regime.
    q_prime: channel-trading parameter (odd); filter bandwidth = q' * f_p.
    W: half-length of the per-channel frequency window (2W bins/channel).
    band_max_width_hz: maximum width of one narrow band in the input.
    lpf_kind: "ideal" (flat passband) or "random" (irregular passband).
    master_seed: root of every RNG stream in the system.
    """

    f_max_hz: float
    L: int
    M: int
    p: int
    q_prime: int
    W: int
    band_max_width_hz: float
    lpf_kind: str = "ideal"
    master_seed: int = 0

    def __post_init__(self):
        if self.L <= 0 or self.L % 2 == 0:
            raise ConfigError(f"L must be a positive odd integer, got {self.L}")
        if self.q_prime <= 0 or self.q_prime % 2 == 0:
            raise ConfigError(
                f"q_prime must be a positive odd integer, got {self.q_prime}"
            )
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.W < 1:
            raise ConfigError(f"W must be >= 1, got {self.W}")
        if not self.f_max_hz > 0:
            raise ConfigError(f"f_max_hz must be positive, got {self.f_max_hz}")
        if not self.band_max_width_hz > 0:
            raise ConfigError(
                f"band_max_width_hz must be positive, got {self.band_max_width_hz}"
            )
        if self.lpf_kind not in LPF_KINDS:
            raise ConfigError(
                f"lpf_kind must be one of {LPF_KINDS}, got {self.lpf_kind!r}"
            )
        if self.master_seed < 0 or self.master_seed > 2**64 - 1:
            raise ConfigError("master_seed must fit in an unsigned 64-bit integer")

    @property
    def lossless_capable(self) -> bool:
        """True when (p, q') admits a lossless system: coprime and q' > p.

        Configs violating this are still constructible; sweep harnesses need
        them to chart where the sensing matrix loses rank.
        """
        return math.gcd(self.p, self.q_prime) == 1 and self.q_prime > self.p


@dataclass(frozen=True)
class DerivedParams:
    """Every constant the rest of the system needs, derived once.

    Frequencies are floats; counts and bin indices are exact integers.
    """

    # echoes of the driving integers
    L: int
    M: int
    p: int
    q_prime: int
    W: int
    f_max_hz: float
    band_max_width_hz: float

    # rates
    f_nyq: float        # Nyquist rate, 2 * f_max
    f_c: float          # chip speed, = f_nyq
    f_p: float          # PR repetition rate, f_c / L
    f_p_prime: float    # least common shifting interval, f_p / p
    f_s_prime: float    # per-channel ADC rate, q' * f_p / p
    w_lpf: float        # analog filter bandwidth, q' * f_p
    f_s_total: float    # M * f_s_prime

    # half-lengths
    L0: int             # (L - 1) / 2
    q0_prime: int       # (q' - 1) / 2

    # aliasing window
    R1: int
    R2: int
    f0: float           # window start, (R2 - p/2) * f_s_prime

    # subband range
    N1: int
    N2: int
    N: int              # N2 - N1 + 1 == L * p

    # dense simulation grid
    decim: int          # dense-to-ADC decimation factor, 2 * L * p
    dense_rate: float   # 2 * q' * f_nyq
    n_dense: int        # dense samples per observation window, 4 * W * q' * L * p
    T_o: float          # observation window, 2W / f_p_prime
    delta_f: float      # frequency-bin spacing, 1 / T_o
    w_offset: int       # first bin index of the per-channel window

    # convenience bin constants
    lpf_half_bins: int  # passband half-width in delta_f bins, W * p * q'
    nyq_bin: int        # bin index of f_max, W * L * p
    n_adc: int          # ADC samples per window per channel, 2 * W * q'

    def window_bins(self) -> range:
        """Absolute bin indices of the per-channel frequency window."""
        return range(self.w_offset, self.w_offset + 2 * self.W)


def canonical_window(p: int, q_prime: int, f_s_prime: float):
    """Pick the aliasing window: returns (R1, R2, f0).

    Only R2 - R1 and the offset of f0 are pinned by the fold-count argument;
    the absolute R2 is a free choice.  R2 = floor(p/2) makes f0 = -f_s'/2 for
    odd p and f0 = 0 for even p, so the first window bin index f0 * T_o is an
    integer in both cases.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    r2 = p // 2
    r1 = r2 - p + 1
    f0 = (r2 - p / 2.0) * f_s_prime
    return r1, r2, f0


def subband_range(r2: int, p: int, q_prime: int, L: int):
    """Smallest/largest subband index intersecting the Nyquist band.

    Returns (N1, N2, N) with N = N2 - N1 + 1 = L * p.  Both (q' + L) and
    (q' - L) are even, so the halved products below stay integral for any p.
    """
    n1 = r2 * q_prime - (q_prime + L) * p // 2 + 1
    n2 = r2 * q_prime - (q_prime - L) * p // 2
    return n1, n2, n2 - n1 + 1


def derive_params(cfg: SystemConfig) -> DerivedParams:
    """Expand a SystemConfig into the full derived-constant record."""
    L, M, p, q = cfg.L, cfg.M, cfg.p, cfg.q_prime
    W = cfg.W
    f_nyq = 2.0 * cfg.f_max_hz
    f_c = f_nyq
    f_p = f_c / L
    f_p_prime = f_p / p
    f_s_prime = q * f_p / p
    w_lpf = q * f_p
    r1, r2, f0 = canonical_window(p, q, f_s_prime)
    n1, n2, n = subband_range(r2, p, q, L)
    assert n == L * p, "subband count must equal L*p"
    assert r2 - r1 == p - 1
    # w_offset = f0 * T_o, evaluated in exact integers: (2*R2 - p) * q' * W
    w_offset = (2 * r2 - p) * q * W
    t_o = 2 * W / f_p_prime
    return DerivedParams(
        L=L,
        M=M,
        p=p,
        q_prime=q,
        W=W,
        f_max_hz=cfg.f_max_hz,
        band_max_width_hz=cfg.band_max_width_hz,
        f_nyq=f_nyq,
        f_c=f_c,
        f_p=f_p,
        f_p_prime=f_p_prime,
        f_s_prime=f_s_prime,
        w_lpf=w_lpf,
        f_s_total=M * f_s_prime,
        L0=(L - 1) // 2,
        q0_prime=(q - 1) // 2,
        R1=r1,
        R2=r2,
        f0=f0,
        N1=n1,
        N2=n2,
        N=n,
        decim=2 * L * p,
        dense_rate=2 * q * f_nyq,
        n_dense=4 * W * q * L * p,
        T_o=t_o,
        delta_f=1.0 / t_o,
        w_offset=w_offset,
        lpf_half_bins=W * p * q,
        nyq_bin=W * L * p,
        n_adc=2 * W * q,
    )


def sampling_efficiency(k_b: int, band_width_hz: float, k: int, f_i_hz: float) -> float:
    """Fraction of the acquired bandwidth actually occupied by signal.

    k_b bands of width band_width_hz land in k recovered subbands of width
    f_i_hz; the ratio k_b*B / (k*f_I) never exceeds 1 for consistent inputs.
    """
    if k_b < 1 or k < k_b:
        raise ValueError(f"need k >= k_b >= 1, got k={k}, k_b={k_b}")
    if band_width_hz <= 0 or f_i_hz <= 0:
        raise ValueError("band width and splitting interval must be positive")
    occupancy = k_b * band_width_hz
    acquired = k * f_i_hz
    if acquired < occupancy:
        raise ValueError(
            "inconsistent inputs: k*f_I < k_b*B would give efficiency > 1"
        )
    return occupancy / acquired


def max_aliasing_param(f_p_hz: float, band_width_hz: float) -> int:
    """Largest aliasing parameter keeping one band within two subbands."""
    if band_width_hz <= 0:
        raise ValueError("band width must be positive")
    return int(math.floor(f_p_hz / band_width_hz))


@dataclass(frozen=True)
class SupportSet:
    """Sorted, distinct subband indices k in [N1, N2]."""

    indices: tuple

    @classmethod
    def from_iterable(cls, ks, dp: DerivedParams | None = None) -> "SupportSet":
        idx = tuple(sorted(set(int(k) for k in ks)))
        if dp is not None:
            for k in idx:
                if k < dp.N1 or k > dp.N2:
                    raise ValueError(
                        f"support index {k} outside subband range "
                        f"[{dp.N1}, {dp.N2}]"
                    )
        return cls(idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, k):
        return int(k) in set(self.indices)

    def issubset(self, other) -> bool:
        return set(self.indices) <= set(other)


def bin_to_subband(bin_index: int, dp: DerivedParams) -> int:
    """Map a signed dense-grid bin to the subband index whose window holds it.

    Subband k observes bins w_offset + j - 2W*k for j in [0, 2W).
    """
    two_w = 2 * dp.W
    return -((int(bin_index) - dp.w_offset) // two_w)


def support_from_bands(bands, dp: DerivedParams) -> SupportSet:
    """Subband indices intersected by a collection of band intervals.

    `bands` is either an object exposing `two_sided_intervals()` (mirror
    images included) or an iterable of (f_lo, f_hz) pairs already covering
    both spectral sides.  A subband counts as occupied when it contains at
    least one spectral grid bin of the band, which on this grid is exactly
    interval intersection because subband edges sit on bin boundaries.
    """
    if hasattr(bands, "two_sided_intervals"):
        intervals = bands.two_sided_intervals()
    else:
        intervals = list(bands)
    ks = set()
    snap = 1e-9  # guard against float fuzz on on-grid endpoints
    for lo, hi in intervals:
        if lo < -dp.f_max_hz - snap * dp.delta_f or hi > dp.f_max_hz + snap * dp.delta_f:
            raise ValueError(
                f"band [{lo}, {hi}] exceeds the Nyquist range +-{dp.f_max_hz}"
            )
        m_lo = math.ceil(lo / dp.delta_f - snap)
        m_hi = math.floor(hi / dp.delta_f + snap)
        if m_lo > m_hi:
            continue  # no grid bin inside: nothing to observe
        k_a = bin_to_subband(m_hi, dp)
        k_b = bin_to_subband(m_lo, dp)
        ks.update(range(min(k_a, k_b), max(k_a, k_b) + 1))
    return SupportSet.from_iterable(ks, dp)


def format_config_text(cfg: SystemConfig) -> str:
    """Render a config as `key = value` lines."""
    lines = []
    for name in _CONFIG_SCHEMA:
        value = getattr(cfg, name)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> SystemConfig:
    """Parse `key = value` lines; unknown or missing keys are rejected."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONFIG_SCHEMA[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r}") from exc
    missing = [k for k in _CONFIG_SCHEMA if k not in values]
    if missing:
        raise ConfigError(f"missing config keys: {missing}")
    return SystemConfig(**values)


def read_config(path) -> SystemConfig:
    return parse_config_text(Path(path).read_text())


def write_config(cfg: SystemConfig, path) -> None:
    Path(path).write_text(format_config_text(cfg))


def config_echo(cfg: SystemConfig) -> dict:
    """Flat dict of the config fields, for CSV row echoes."""
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
