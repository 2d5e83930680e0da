"""Expert subroutine with a per-expert second-order regret guarantee.

Gains live in [-1, 1].  The construction is a two-layer multiplicative
weights scheme with a correction term:

  * a geometric grid of learning rates eta_j = min(1/4, 2**-j) for
    j = 1 .. ceil(log2 T),
  * one weight vector over the K experts per rate, updated as
    w'(k) ~ w(k) * exp(eta * g_k - eta**2 * g_k**2),
  * a master distribution over the rate instances with prior
    proportional to eta_j**2, updated by the same rule on each
    instance's expected gain this round.

The played distribution is the master-weighted mixture of the per-rate
weight vectors.  The cap eta <= 1/4 keeps every exponent bounded by 1/4
in magnitude, so exp(x - x**2) <= 1 + x holds along the whole update.
Weights are stored in log space and renormalized every update (a weight
may drift tens of thousands of log-units behind the leader over a long
horizon, far past floating-point underflow in probability space); the
normalized probability tables are cached alongside for cheap reads.

The target contract, checked empirically by the test suite: against every
expert k, cumulative regret is at most
c1 * sqrt(V_k * log(K * T)) + c2 * log(K * T) with V_k the sum of squared
gains of expert k, for fixed frozen constants c1, c2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_RATE = 0.25
_GAIN_TOL = 1e-12


@dataclass
class ExpertState:
    """Mutable state; one owner, never updated concurrently."""

    expert_count: int
    horizon: int
    rate_grid: np.ndarray    # (J,) rates in (0, 1/4]
    log_weights: np.ndarray  # (J, K), each row a normalized log-distribution
    log_master: np.ndarray   # (J,) normalized log-distribution over rates
    round: int = 0
    _table: np.ndarray | None = field(default=None, repr=False)
    _master: np.ndarray | None = field(default=None, repr=False)
    _eta_col: np.ndarray | None = field(default=None, repr=False)
    _eta2_col: np.ndarray | None = field(default=None, repr=False)

    def weight_table(self) -> np.ndarray:
        """Normalized (J, K) probability table, cached between updates."""
        if self._table is None:
            self._table = np.exp(self.log_weights)
        return self._table

    def master_weights(self) -> np.ndarray:
        """Normalized (J,) master distribution, cached between updates."""
        if self._master is None:
            self._master = np.exp(self.log_master)
        return self._master

    def _rate_columns(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eta_col is None:
            self._eta_col = np.ascontiguousarray(self.rate_grid[:, None])
            self._eta2_col = self._eta_col * self._eta_col
        return self._eta_col, self._eta2_col


def rate_grid_for_horizon(T: int) -> np.ndarray:
    count = max(1, math.ceil(math.log2(T))) if T > 1 else 1
    return np.minimum(MAX_RATE, 2.0 ** -np.arange(1, count + 1))


def expert_init(K: int, T: int) -> ExpertState:
    """Uniform weights within each rate; master prior proportional to eta**2."""
    if K < 1 or T < 1:
        raise ValueError("expert count and horizon must be positive")
    rates = rate_grid_for_horizon(T)
    J = rates.shape[0]
    log_weights = np.full((J, K), -math.log(K))
    prior = rates**2
    log_master = np.log(prior / prior.sum())
    return ExpertState(K, T, rates, log_weights, log_master)


def expert_weights(state: ExpertState) -> np.ndarray:
    """Marginal probability over experts: sum_j master(j) * weights_j."""
    return state.master_weights() @ state.weight_table()


def expert_update(state: ExpertState, gains: np.ndarray) -> ExpertState:
    """Apply one round of gains (one entry per expert, each in [-1, 1])."""
    g = np.asarray(gains, dtype=np.float64)
    if g.shape != (state.expert_count,):
        raise ValueError(f"expected {state.expert_count} gains, got shape {g.shape}")
    top = float(np.max(np.abs(g)))
    if not top <= 1.0 + _GAIN_TOL:  # NaN fails the comparison too
        raise ValueError("gains must be finite and lie in [-1, 1]")
    eta = state.rate_grid
    eta_col, eta2_col = state._rate_columns()
    instance_gain = state.weight_table() @ g  # played (pre-update) expectations
    lw = state.log_weights
    lw += eta_col * g
    lw -= eta2_col * (g * g)
    # rows were normalized, so entries stay at or below the 1/4 + 1/16
    # increment cap: exp cannot overflow and the row sum stays above e^-1/K
    table = np.exp(lw)
    z = table.sum(axis=1, keepdims=True)
    lw -= np.log(z)
    table /= z
    state._table = table
    scaled = eta * instance_gain
    lm = state.log_master
    lm += scaled - scaled * scaled
    master = np.exp(lm)
    m_z = float(master.sum())
    lm -= math.log(m_z)
    master /= m_z
    state._master = master
    state.round += 1
    return state
