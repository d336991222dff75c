import math

import numpy as np
import pytest

from subnyq import (CoprimalityError, brute_force_expansion, derive_params,
                    expansion_terms, gamma, gamma_prime, make_window_context,
                    mu, picking_index, rho, rho_inv, sensing_coeff,
                    subband_range, SystemConfig)
from subnyq.prseq import build_pr_bank


def coprime_pairs(limit=12):
    out = []
    for p in range(1, limit + 1):
        for q in range(1, limit + 1, 2):
            if math.gcd(p, q) == 1:
                out.append((p, q))
    return out


def extended_range(p, q, L=31):
    ctx = make_window_context(p, q)
    n1, n2, _ = subband_range(ctx.R2, p, q, L)
    return ctx, range(n1, n2 + q)


class TestResidueHelpers:
    def test_p1_everything_collapses(self):
        ctx = make_window_context(1, 7)
        for k in (-9, 0, 4):
            assert rho_inv(k, ctx) == 0
            assert picking_index(k, ctx) == k
            assert gamma(k, ctx) == 0
            assert gamma_prime(k, 3, ctx) == -3

    def test_frozen_p2_q3(self):
        ctx = make_window_context(2, 3)
        assert (ctx.R1, ctx.R2) == (0, 1)
        assert [rho(r, ctx) for r in (0, 1)] == [0, 1]
        assert [rho_inv(v, ctx) for v in (0, 1)] == [0, 1]
        assert [picking_index(k, ctx) for k in range(4)] == [0, -1, 1, 0]
        assert [gamma(k, ctx) for k in range(4)] == [0, 3, 0, 3]
        assert gamma_prime(0, 1, ctx) == 2

    def test_rho_round_trip_all_coprime(self):
        for p, q in coprime_pairs():
            ctx = make_window_context(p, q)
            for v in range(p):
                assert rho(rho_inv(v, ctx), ctx) == v

    def test_rho_inv_requires_coprime(self):
        ctx = make_window_context(3, 9)
        with pytest.raises(CoprimalityError):
            rho_inv(1, ctx)
        with pytest.raises(CoprimalityError):
            picking_index(1, ctx)
        with pytest.raises(CoprimalityError):
            gamma(1, ctx)


class TestOracleEquivalence:
    def test_picking_and_gamma_match_enumeration(self):
        # executable form of the unique-decomposition claim
        for p, q in coprime_pairs():
            ctx, ks = extended_range(p, q)
            decomp = brute_force_expansion(ctx, ks)
            for k in ks:
                r, l = decomp[k]
                assert picking_index(k, ctx) == l, (p, q, k)
                assert gamma(k, ctx) == r * q, (p, q, k)

    def test_gamma_lands_on_window_shifts(self):
        for p, q in coprime_pairs():
            ctx, ks = extended_range(p, q)
            shifts = {r * q for r in range(ctx.R1, ctx.R2 + 1)}
            for k in ks:
                g = gamma(k, ctx)
                assert g in shifts
                assert g % p == k % p

    def test_quotient_identity(self):
        # mu(rho_inv(k)) = ((rho_inv(k) + R1) q' - (k mod p)) / p, exactly
        for p, q in coprime_pairs():
            ctx, ks = extended_range(p, q, L=7)
            for k in ks:
                lhs = mu(rho_inv(k % p, ctx), ctx)
                num = (rho_inv(k % p, ctx) + ctx.R1) * q - (k % p)
                assert num % p == 0
                assert lhs == num // p

    def test_floor_form_equals_picking_index(self):
        for p, q in coprime_pairs():
            ctx, ks = extended_range(p, q, L=7)
            for k in ks:
                alt = (k // p) - mu(rho_inv(k % p, ctx), ctx)
                assert alt == picking_index(k, ctx)

    def test_vectorized_matches_scalar(self):
        ctx = make_window_context(4, 19)
        ks = np.arange(-300, 300)
        vec = picking_index(ks, ctx)
        assert all(vec[i] == picking_index(int(k), ctx) for i, k in enumerate(ks))


class TestBruteForce:
    def test_frozen_case(self):
        ctx = make_window_context(2, 3)
        assert brute_force_expansion(ctx, [1]) == {1: (1, -1)}

    def test_p1_single_row(self):
        ctx = make_window_context(1, 7)
        out = brute_force_expansion(ctx, range(-5, 6))
        for k, (r, l) in out.items():
            assert r == 0 and l == k

    def test_non_coprime_reports_violation(self):
        ctx = make_window_context(3, 9)
        with pytest.raises(CoprimalityError, match="not coprime"):
            brute_force_expansion(ctx, [1])
        # unreachable index has zero decompositions
        assert expansion_terms(ctx, 1) == []
        # reachable index has several
        assert len(expansion_terms(ctx, 9)) > 1

    def test_duplicate_shift_structure_when_p_exceeds_q(self):
        # for coprime p > q' there is a column index whose whole q'-row
        # window of picks repeats q' columns later
        for p, q in [(5, 3), (7, 5), (9, 7), (11, 3)]:
            ctx = make_window_context(p, q)
            found = False
            for k_star in range(-4 * p * q, 4 * p * q):
                if all(picking_index(k_star + u + q, ctx) ==
                       picking_index(k_star + u, ctx) for u in range(q)):
                    found = True
                    break
            assert found, (p, q)


class TestSensingCoeff:
    def make_bank(self, p, q, L=31):
        cfg = SystemConfig(f_max_hz=1e9, L=L, M=2, p=p, q_prime=q, W=4,
                           band_max_width_hz=4e6)
        dp = derive_params(cfg)
        return dp, build_pr_bank(dp, seed=9)

    def test_identity_picking_when_p1(self):
        dp, bank = self.make_bank(1, 5)
        ctx = make_window_context(1, 5)
        for k in (-7, 0, 11):
            assert sensing_coeff(0, k, bank, ctx) == bank.coeff(0, k)

    def test_frozen_pick(self):
        dp, bank = self.make_bank(2, 3)
        ctx = make_window_context(2, 3)
        assert sensing_coeff(1, 1, bank, ctx) == bank.coeff(1, -1)

    def test_conjugate_pairing(self):
        dp, bank = self.make_bank(3, 7)
        ctx = make_window_context(3, 7)
        ks = range(dp.N1, dp.N2)
        by_pick = {}
        for k in ks:
            by_pick.setdefault(picking_index(k, ctx), k)
        pairs = [(k1, k2) for l, k1 in by_pick.items()
                 for l2, k2 in by_pick.items() if l == -l2 and l > 0]
        assert pairs
        for k1, k2 in pairs:
            assert sensing_coeff(0, k1, bank, ctx) == pytest.approx(
                np.conj(sensing_coeff(0, k2, bank, ctx)))

    def test_out_of_margin_pick_raises(self):
        dp, bank = self.make_bank(2, 3)
        with pytest.raises(ValueError, match="outside tabulated range"):
            bank.coeff(0, bank.l_max + 1)
