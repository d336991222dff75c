"""Modular index maps tying aliased ADC output bins back to input subbands.

After the mixer shifts the spectrum in steps of f_p and the ADC folds it in
steps of f_s' = q'*f_p/p, every observed subband index k decomposes uniquely
(for coprime p, q') as k = r*q' + l*p with r confined to the aliasing window.
`picking_index` recovers l (which PR Fourier coefficient weights the subband)
and `gamma` recovers r*q' (which image of the analog filter it passed
through).  `brute_force_expansion` solves the same decomposition by direct
enumeration and serves as the independent oracle for both.

All arithmetic is integer-exact; `%` is the non-negative residue, which is
what the maps need for negative k and R1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoprimalityError


@dataclass(frozen=True)
class WindowContext:
    """Aliasing-window constants plus the inverse of q' modulo p.

    q_inv is None when gcd(p, q') != 1; operations that need it raise
    CoprimalityError in that case.
    """

    R1: int
    R2: int
    p: int
    q_prime: int
    q_inv: int | None

    def __post_init__(self):
        if self.R2 - self.R1 != self.p - 1:
            raise ValueError("window must satisfy R2 - R1 = p - 1")
        if self.q_inv is not None:
            assert (self.q_inv * self.q_prime) % self.p == (1 % self.p)

    @property
    def coprime(self) -> bool:
        return self.q_inv is not None


def make_window_context(p: int, q_prime: int, r2: int | None = None) -> WindowContext:
    """Build the context with the canonical window (R2 = floor(p/2))."""
    if p < 1 or q_prime < 1:
        raise ValueError("p and q_prime must be positive")
    if r2 is None:
        r2 = p // 2
    r1 = r2 - p + 1
    if math.gcd(p, q_prime) == 1:
        q_inv = pow(q_prime, -1, p) if p > 1 else 0
    else:
        q_inv = None
    return WindowContext(R1=r1, R2=r2, p=p, q_prime=q_prime, q_inv=q_inv)


def context_from_params(dp) -> WindowContext:
    return make_window_context(dp.p, dp.q_prime, r2=dp.R2)


def _require_coprime(ctx: WindowContext, op: str):
    if not ctx.coprime:
        raise CoprimalityError(
            f"{op} undefined: gcd(p={ctx.p}, q'={ctx.q_prime}) != 1"
        )


def rho(r_prime: int, ctx: WindowContext) -> int:
    """Residue of (r' + R1) * q' modulo p."""
    return ((r_prime + ctx.R1) * ctx.q_prime) % ctx.p


def mu(r_prime: int, ctx: WindowContext) -> int:
    """Quotient of (r' + R1) * q' by p (floor division)."""
    return ((r_prime + ctx.R1) * ctx.q_prime) // ctx.p


def rho_inv(v: int, ctx: WindowContext) -> int:
    """Inverse of rho on the residue system: (v * q'^-1 - R1) mod p."""
    _require_coprime(ctx, "rho_inv")
    return (v * ctx.q_inv - ctx.R1) % ctx.p


def picking_index(k, ctx: WindowContext):
    """Which PR Fourier coefficient weights subband k.

    Accepts an int or an integer ndarray.  The division by p is exact by
    construction; a failed divisibility check means an index bug upstream,
    so it is asserted rather than rounded.
    """
    _require_coprime(ctx, "picking_index")
    p, q, r1, q_inv = ctx.p, ctx.q_prime, ctx.R1, ctx.q_inv
    if isinstance(k, np.ndarray):
        karr = k.astype(np.int64)
        num = karr - q * (((q_inv * karr - r1) % p) + r1)
        rem = num % p
        assert not rem.any(), "picking index division must be exact"
        return num // p
    num = int(k) - q * (((q_inv * int(k) - r1) % p) + r1)
    assert num % p == 0, "picking index division must be exact"
    return num // p


def gamma(k, ctx: WindowContext):
    """Filter-image shift of subband k, in units of the splitting interval.

    Always a member of {r*q' : r in [R1, R2]} and congruent to k mod p.
    """
    arr_or_int = picking_index(k, ctx)
    return k - ctx.p * arr_or_int


def gamma_prime(k, u: int, ctx: WindowContext):
    """Filter shift seen by digital channel u for subband k."""
    return gamma(k + u, ctx) - u


def sensing_coeff(i: int, k: int, bank, ctx: WindowContext) -> complex:
    """Sensing coefficient d_{i,k}: the picked PR Fourier coefficient."""
    return bank.coeff(i, picking_index(k, ctx))


def expansion_terms(ctx: WindowContext, k: int) -> list:
    """All (r, l) with r in [R1, R2] and r*q' + l*p = k.

    Solved by scanning the p admissible r values and keeping exact divisors;
    this bounds |l| by (|k| + max|r|*q')/p + 1 and never touches modular
    inverses, so it is independent of `picking_index`.
    """
    out = []
    for r in range(ctx.R1, ctx.R2 + 1):
        rem = k - r * ctx.q_prime
        if rem % ctx.p == 0:
            out.append((r, rem // ctx.p))
    return out


def brute_force_expansion(ctx: WindowContext, k_range) -> dict:
    """Map each k in k_range to its unique (r, l) decomposition.

    Raises CoprimalityError when any k admits zero or multiple pairs, which
    happens exactly when gcd(p, q') != 1.
    """
    result = {}
    for k in k_range:
        terms = expansion_terms(ctx, int(k))
        if len(terms) != 1:
            raise CoprimalityError(
                f"k={k} has {len(terms)} (r, l) decompositions; "
                f"p={ctx.p} and q'={ctx.q_prime} are not coprime"
            )
        result[int(k)] = terms[0]
    return result
