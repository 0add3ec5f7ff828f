"""Shared test helpers: independent oracles the implementation never touches."""

import numpy as np
from scipy import integrate


def quad_node_loglik(y, sigma2: float, tau: float) -> float:
    """Numerically integrate the leaf-mean prior out of one node's likelihood.

    Returns the log marginal relative to the same node scored with a zero
    mean, i.e. exactly the constant-dropped contribution the sampler uses:
    log ∫ Π N(y_i | mu, sigma2) N(mu | 0, tau) dmu  -  Σ log N(y_i | 0, sigma2).
    The shared -n/2 log(2 pi sigma2) cancels in that difference, so the
    integrand keeps only the mu-dependent part of the likelihood.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    sum_y = float(y.sum())
    sum_y2 = float(y @ y)
    log_prior_const = -0.5 * np.log(2.0 * np.pi * tau)

    def log_integrand(mu):
        lik = -(sum_y2 - 2.0 * mu * sum_y + n * mu * mu) / (2.0 * sigma2)
        return lik + log_prior_const - mu * mu / (2.0 * tau)

    # centre the quadrature at the posterior mean so the integrand is O(1)
    shift = log_integrand(sum_y * tau / (sigma2 + tau * n))
    val, _ = integrate.quad(
        lambda mu: np.exp(log_integrand(mu) - shift), -np.inf, np.inf
    )
    return shift + float(np.log(val)) + sum_y2 / (2.0 * sigma2)


def naive_candidate_scores(X_cols, node_ids, residuals, grid, sigma2, tau, score_fn):
    """Score every grid candidate by brute-force row filtering.

    For each candidate, select the node's rows with ``x[var] <= value``, sum
    residuals on each side, and call ``score_fn(s_left, n_left, s_right,
    n_right)``.  Quadratic in the node size; trustworthy.
    """
    node_ids = np.asarray(node_ids)
    out = np.empty(len(grid))
    for i in range(len(grid)):
        var = int(grid.var_ids[i])
        value = float(grid.values[i])
        on_left = X_cols[var, node_ids] <= value
        left_ids = node_ids[on_left]
        right_ids = node_ids[~on_left]
        out[i] = score_fn(
            residuals[left_ids].sum(),
            left_ids.size,
            residuals[right_ids].sum(),
            right_ids.size,
        )
    return out


def walk_tree(tree, x) -> float:
    """Evaluate one tree on one row by an explicit python descent."""
    node = 0
    while tree.var[node] >= 0:
        node = (
            int(tree.left[node])
            if x[tree.var[node]] <= tree.cut[node]
            else int(tree.right[node])
        )
    return float(tree.leaf_value[node])
