from itertools import combinations

import numpy as np
import pytest

from subnyq import (SensingModel, SystemConfig, build_lpf, dcs_somp,
                    derive_params, make_sensing_model, reconstruct_X,
                    support_success)
from subnyq.prseq import build_pr_bank


def small_model(p=1, q=3, L=7, M=2, W=4, lpf="ideal", seed=1):
    cfg = SystemConfig(f_max_hz=1e9, L=L, M=M, p=p, q_prime=q, W=W,
                       band_max_width_hz=2e6, lpf_kind=lpf, master_seed=seed)
    dp = derive_params(cfg)
    bank = build_pr_bank(dp, seed=seed)
    filt = build_lpf(lpf, dp, seed=seed)
    return dp, make_sensing_model(bank, filt, dp)


def per_bin_twin(model):
    """Same flat matrix presented through the per-bin code path."""
    stack = np.repeat(model.D[None, :, :], model.w_indices.size, axis=0)
    return SensingModel(D=model.D, per_bin=stack, w_indices=model.w_indices,
                        N1=model.N1, q_prime=model.q_prime)


def sparse_rows(model, cols, n_bins, rng):
    x = np.zeros((model.n_cols, n_bins), complex)
    x[list(cols), :] = (rng.standard_normal((len(cols), n_bins))
                        + 1j * rng.standard_normal((len(cols), n_bins)))
    return x


class TestSelection:
    def test_zero_input_tie_break(self):
        dp, model = small_model()
        z = np.zeros((model.n_rows, 2 * dp.W), complex)
        res = dcs_somp(z, model, 3)
        assert res.selection_order == tuple(dp.N1 + i for i in range(3))
        assert res.residual_norms == [0.0, 0.0, 0.0]

    def test_single_active_row_found_first(self):
        dp, model = small_model()
        rng = np.random.default_rng(2)
        for k0 in range(model.n_cols):
            z = model.D @ sparse_rows(model, [k0], 2 * dp.W, rng)
            res = dcs_somp(z, model, 1)
            assert res.selection_order[0] == dp.N1 + k0
            assert res.residual_norms[-1] <= 1e-10

    def test_exhaustive_two_sparse(self):
        dp, model = small_model()
        rng = np.random.default_rng(3)
        for cols in combinations(range(model.n_cols), 2):
            z = model.D @ sparse_rows(model, cols, 2 * dp.W, rng)
            res = dcs_somp(z, model, 2)
            got = set(res.selection_order)
            assert {dp.N1 + c for c in cols} <= got
            assert res.residual_norms[-1] <= 1e-8 * np.linalg.norm(z)

    def test_selections_distinct(self):
        dp, model = small_model(p=2, q=5, L=31)
        rng = np.random.default_rng(4)
        z = model.D @ sparse_rows(model, [3, 9, 20], 2 * dp.W, rng)
        z += 0.05 * rng.standard_normal(z.shape)
        res = dcs_somp(z, model, 6)
        assert len(set(res.selection_order)) == 6

    def test_residuals_non_increasing(self):
        for lpf in ("ideal", "random"):
            dp, model = small_model(p=2, q=5, L=31, lpf=lpf)
            rng = np.random.default_rng(5)
            z = model.D @ sparse_rows(model, [3, 9, 20], 2 * dp.W, rng)
            z += 0.1 * rng.standard_normal(z.shape)
            res = dcs_somp(z, model, 8)
            diffs = np.diff(res.residual_norms)
            assert np.all(diffs <= 1e-9 * res.residual_norms[0])

    def test_iteration_bounds_enforced(self):
        dp, model = small_model()
        z = np.zeros((model.n_rows, 2 * dp.W), complex)
        with pytest.raises(ValueError):
            dcs_somp(z, model, 0)
        with pytest.raises(ValueError):
            dcs_somp(z, model, min(model.n_rows, model.n_cols) + 1)


class TestEquivalences:
    def test_flat_equals_per_bin_path(self):
        dp, model = small_model(p=2, q=5, L=31)
        twin = per_bin_twin(model)
        rng = np.random.default_rng(6)
        for trial in range(10):
            k = int(rng.integers(2, 6))
            cols = rng.choice(model.n_cols, size=k, replace=False)
            z = model.D @ sparse_rows(model, cols, 2 * dp.W, rng)
            z += 0.02 * rng.standard_normal(z.shape)
            a = dcs_somp(z, model, k)
            b = dcs_somp(z, twin, k)
            assert a.selection_order == b.selection_order
            assert np.allclose(a.residual_norms, b.residual_norms, rtol=1e-9)
            assert np.allclose(a.X_hat, b.X_hat, rtol=1e-8, atol=1e-12)

    def test_column_permutation_equivariance(self):
        dp, model = small_model(p=2, q=5, L=31, lpf="random")
        rng = np.random.default_rng(7)
        x = sparse_rows(model, [4, 17], 2 * dp.W, rng)
        z = np.einsum("jmk,kj->mj", model.per_bin, x)
        perm = rng.permutation(2 * dp.W)
        permuted = SensingModel(D=model.D, per_bin=model.per_bin[perm],
                                w_indices=model.w_indices[perm],
                                N1=model.N1, q_prime=model.q_prime)
        a = dcs_somp(z, model, 2)
        b = dcs_somp(z[:, perm], permuted, 2)
        assert a.selection_order == b.selection_order
        assert set(a.support_hat) == set(b.support_hat)

    def test_scale_invariance_of_selection(self):
        dp, model = small_model(p=2, q=5, L=31)
        rng = np.random.default_rng(8)
        z = model.D @ sparse_rows(model, [2, 30], 2 * dp.W, rng)
        z += 0.05 * rng.standard_normal(z.shape)
        a = dcs_somp(z, model, 4)
        b = dcs_somp(z * 5.7, model, 4)
        assert a.selection_order == b.selection_order


class TestRankDeficiency:
    def test_duplicate_columns_warn_but_complete(self):
        dp, model = small_model()
        d = model.D.copy()
        d[:, 1] = d[:, 0]
        dup = SensingModel(D=d, per_bin=None, w_indices=model.w_indices,
                           N1=model.N1, q_prime=model.q_prime)
        z = np.outer(d[:, 0], np.ones(2 * dp.W))
        res = dcs_somp(z, dup, 2)
        assert res.condition_warning
        assert res.selection_order == (dp.N1, dp.N1 + 1)

    def test_duplicate_columns_per_bin_path(self):
        dp, model = small_model()
        d = model.D.copy()
        d[:, 1] = d[:, 0]
        stack = np.repeat(d[None, :, :], 2 * dp.W, axis=0)
        dup = SensingModel(D=d, per_bin=stack, w_indices=model.w_indices,
                           N1=model.N1, q_prime=model.q_prime)
        z = np.outer(d[:, 0], np.ones(2 * dp.W))
        res = dcs_somp(z, dup, 2)
        assert res.condition_warning


class TestReconstruct:
    def test_exact_support_recovers_rows(self):
        for lpf in ("ideal", "random"):
            dp, model = small_model(p=2, q=5, L=31, lpf=lpf)
            rng = np.random.default_rng(9)
            cols = [5, 22, 40]
            x = sparse_rows(model, cols, 2 * dp.W, rng)
            if model.per_bin is None:
                z = model.D @ x
            else:
                z = np.einsum("jmk,kj->mj", model.per_bin, x)
            out = reconstruct_X([dp.N1 + c for c in cols], z, model)
            assert np.linalg.norm(out - x) <= 1e-8 * np.linalg.norm(x)

    def test_empty_support(self):
        dp, model = small_model()
        z = np.ones((model.n_rows, 2 * dp.W), complex)
        assert np.all(reconstruct_X([], z, model) == 0)

    def test_full_support_when_overdetermined(self):
        dp, model = small_model(p=1, q=5, L=7, M=2)  # Mq' = 10 > N = 7
        rng = np.random.default_rng(10)
        x = sparse_rows(model, range(model.n_cols), 2 * dp.W, rng)
        z = model.D @ x
        out = reconstruct_X(range(dp.N1, dp.N2 + 1), z, model)
        assert np.linalg.norm(out - x) <= 1e-8 * np.linalg.norm(x)

    def test_oversized_support_rejected(self):
        dp, model = small_model()
        z = np.zeros((model.n_rows, 2 * dp.W), complex)
        too_big = range(dp.N1, dp.N1 + model.n_rows + 1)
        with pytest.raises(ValueError, match="exceeds"):
            reconstruct_X(too_big, z, model)


class TestSuccess:
    def test_subset(self):
        assert support_success({3, 5}, {1, 3, 5, 9})

    def test_missing_index(self):
        assert not support_success({3, 5}, {3})

    def test_vacuous(self):
        assert support_success(set(), {1})

    def test_x_hat_rows_sorted(self):
        dp, model = small_model(p=2, q=5, L=31)
        rng = np.random.default_rng(11)
        x = sparse_rows(model, [40, 5], 2 * dp.W, rng)
        z = model.D @ x
        res = dcs_somp(z, model, 2)
        assert res.support_hat.indices == tuple(sorted(res.selection_order))
        for row, k in zip(res.X_hat, res.support_hat):
            assert np.linalg.norm(row - x[k - dp.N1]) <= 1e-8 * np.linalg.norm(x)