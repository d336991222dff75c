"""Greedy simultaneous sparse recovery over one or many sensing matrices.

The solver scores each candidate subband by its aggregate correlation with
the per-bin residuals, normalized by aggregate column energy, so with a flat
model it collapses to textbook simultaneous OMP.  Ties break toward the
smallest index for reproducibility.  Rank-deficient least-squares
subproblems fall back to a minimum-norm solve and set a warning flag; a
trial is never aborted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import SupportSet
from .sensing import SensingModel

_SCORE_EPS = 1e-30


@dataclass
class RecoveryResult:
    support_hat: SupportSet
    X_hat: np.ndarray              # |support| x 2W, rows in sorted-support order
    residual_norms: list
    iterations: int
    selection_order: tuple         # absolute subband indices, selection order
    condition_warning: bool


def _solve_flat(d_sel: np.ndarray, z: np.ndarray):
    """Least-squares coefficients for a common matrix; returns (coef, warn)."""
    coef, _, rank, _ = np.linalg.lstsq(d_sel, z, rcond=None)
    return coef, rank < d_sel.shape[1]


def _solve_per_bin(b_sel: np.ndarray, z: np.ndarray):
    """Per-bin least squares, batched over bins.

    b_sel: (2W, Mq', s); z: (Mq', 2W).  Returns (coef (2W, s), warn).
    Normal equations solve the well-conditioned bulk; exact singularity
    (duplicate selected columns) falls back to lstsq per bin.
    """
    bh = b_sel.conj().transpose(0, 2, 1)
    gram = bh @ b_sel
    rhs = bh @ z.T[:, :, None]
    try:
        coef = np.linalg.solve(gram, rhs)[:, :, 0]
        return coef, False
    except np.linalg.LinAlgError:
        n_bins, _, s = b_sel.shape
        coef = np.empty((n_bins, s), dtype=complex)
        for j in range(n_bins):
            coef[j] = np.linalg.lstsq(b_sel[j], z[:, j], rcond=None)[0]
        return coef, True


def dcs_somp(z: np.ndarray, model: SensingModel, iterations: int) -> RecoveryResult:
    """Greedy joint support recovery over the measurement columns.

    Per iteration: score(k) = sum_j |<b_k[w_j], r_j>|^2 normalized by the
    aggregate energy of column k across bins, over unselected k; take the
    argmax (smallest index on ties); refresh every residual by projecting
    its column onto the selected submatrix.
    """
    z = np.asarray(z, dtype=complex)
    n_rows, n_bins = z.shape
    n_cols = model.n_cols
    if iterations < 1 or iterations > min(n_rows, n_cols):
        raise ValueError(
            f"iterations must lie in [1, min(Mq'={n_rows}, N={n_cols})]"
        )
    flat = model.per_bin is None
    if flat:
        d = model.D
        if not np.isfinite(d).all():
            raise ValueError("sensing matrix contains non-finite entries")
        denom = n_bins * np.sum(np.abs(d) ** 2, axis=0)
    else:
        b = model.per_bin
        if not np.isfinite(b).all():
            raise ValueError("sensing matrices contain non-finite entries")
        bh = b.conj().transpose(0, 2, 1)  # (2W, N, Mq')
        denom = np.sum(np.abs(b) ** 2, axis=(0, 1))
    denom = np.maximum(denom, _SCORE_EPS)

    residual = z.copy()
    selected: list[int] = []
    residual_norms: list[float] = []
    warn = False
    coef = None
    for _ in range(iterations):
        if flat:
            corr = d.conj().T @ residual           # (N, 2W)
            scores = np.sum(np.abs(corr) ** 2, axis=1) / denom
        else:
            corr = (bh @ residual.T[:, :, None])[:, :, 0]  # (2W, N)
            scores = np.sum(np.abs(corr) ** 2, axis=0) / denom
        if selected:
            scores[selected] = -1.0
        k_sel = int(np.argmax(scores))  # first max = smallest index on ties
        selected.append(k_sel)
        if flat:
            coef, bad = _solve_flat(d[:, selected], z)
            residual = z - d[:, selected] @ coef
        else:
            b_sel = b[:, :, selected]
            coef, bad = _solve_per_bin(b_sel, z)
            residual = z - np.einsum("jms,js->mj", b_sel, coef)
        warn = warn or bad
        residual_norms.append(float(np.linalg.norm(residual)))

    order = np.argsort(selected)
    if flat:
        x_rows = coef[order, :]
    else:
        x_rows = coef.T[order, :]
    support = SupportSet.from_iterable(model.N1 + np.asarray(selected))
    return RecoveryResult(
        support_hat=support,
        X_hat=x_rows,
        residual_norms=residual_norms,
        iterations=iterations,
        selection_order=tuple(model.N1 + k for k in selected),
        condition_warning=warn,
    )


def reconstruct_X(support, z: np.ndarray, model: SensingModel) -> np.ndarray:
    """Least-squares subband amplitudes on a known support, zeros elsewhere."""
    z = np.asarray(z, dtype=complex)
    cols = sorted(int(k) - model.N1 for k in support)
    out = np.zeros((model.n_cols, z.shape[1]), dtype=complex)
    if not cols:
        return out
    if any(c < 0 or c >= model.n_cols for c in cols):
        raise ValueError("support index outside the subband range")
    if len(cols) > model.n_rows:
        raise ValueError(
            f"support size {len(cols)} exceeds equation count {model.n_rows}"
        )
    if model.per_bin is None:
        coef, _ = _solve_flat(model.D[:, cols], z)
        out[cols, :] = coef
    else:
        coef, _ = _solve_per_bin(model.per_bin[:, :, cols], z)
        out[cols, :] = coef.T
    return out


def support_success(s_true, s_hat) -> bool:
    """Paper-style success: every true subband index was found."""
    return set(int(k) for k in s_true) <= set(int(k) for k in s_hat)
