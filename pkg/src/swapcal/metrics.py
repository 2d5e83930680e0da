"""Exact calibration, multicalibration and swap-multicalibration errors.

All three read off a transcript through per-bin aggregates.  With n_i the
number of rounds predicted in bin i and, for each test function f,
S_{i,f} = sum over those rounds of f(x_t) * ident(p_t, y_t):

    mcal_r  = sup_f sum_i n_i * |S_{i,f} / n_i| ** r
    smcal_r = sum_i n_i * (sup_f |S_{i,f}| / n_i) ** r
    cal_r   = mcal_r for the singleton class {1}

Empty bins contribute zero.  For the linear class the inner sums collapse
to moment vectors v_i = sum 1[bin = i] * x_t * ident_t: the per-bin
supremum is ||v_i||_2 exactly, so smcal is always exact.  The mcal
supremum over the shared direction theta is the top eigenvalue of
sum_i v_i v_i^T / n_i when r = 2 (computed by power iteration); for any
other r it has no closed form and is reported as a certified lower bound
from projected gradient ascent with deterministic restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import GridConfig, RoundRecord
from .hypotheses import HypothesisClass, sup_correlation
from .properties import Property, identification_values

POWER_ITERATION_TOL = 1e-10
_ASCENT_RESTARTS = 32
_ASCENT_STEPS = 200


@dataclass
class Transcript:
    """Column-oriented record of a full run."""

    grid: GridConfig
    p_tilde: np.ndarray
    bins: np.ndarray
    p: np.ndarray
    y: np.ndarray
    features: np.ndarray   # (T, d) context rows
    support_lo: np.ndarray
    support_hi: np.ndarray
    prob_lo: np.ndarray

    def __post_init__(self) -> None:
        T = self.p.shape[0]
        cols = (self.p_tilde, self.bins, self.y, self.support_lo, self.support_hi, self.prob_lo)
        if any(c.shape[0] != T for c in cols) or self.features.shape[0] != T:
            raise ValueError("transcript columns must share one length")
        if T > self.grid.T:
            raise ValueError("transcript longer than its grid horizon")

    def __len__(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_records(cls, grid: GridConfig, records: list[RoundRecord]) -> "Transcript":
        if not records:
            raise ValueError("empty transcript")
        T = len(records)
        p_tilde = np.array([r.p_tilde for r in records])
        bins = np.array([r.bin for r in records], dtype=np.int64)
        p = np.array([r.p for r in records])
        y = np.array([r.y for r in records])
        features = np.vstack([r.x.features for r in records])
        support_lo = np.empty(T)
        support_hi = np.empty(T)
        prob_lo = np.empty(T)
        for k, r in enumerate(records):
            pts = r.distribution.points
            support_lo[k] = pts[0]
            support_hi[k] = pts[-1]
            prob_lo[k] = r.distribution.probs[0]
        return cls(grid, p_tilde, bins, p, y, features, support_lo, support_hi, prob_lo)


@dataclass
class BinAggregate:
    """Exact inner sums of the error definitions, one row per bin."""

    grid: GridConfig
    cls: HypothesisClass
    counts: np.ndarray            # (N,) rounds per bin, zeros kept
    member_sums: np.ndarray | None  # (N, |F|) for finite classes
    moment_vectors: np.ndarray | None  # (N, d) for the linear class

    @property
    def total_rounds(self) -> int:
        return int(self.counts.sum())


def aggregate(transcript: Transcript, prop: Property, cls: HypothesisClass) -> BinAggregate:
    """Single-pass accumulation of the per-bin sums."""
    if len(transcript) == 0:
        raise ValueError("empty transcript")
    N = transcript.grid.N
    resid = identification_values(prop, transcript.p, transcript.y)
    rows = transcript.bins - 1
    counts = np.bincount(rows, minlength=N).astype(np.int64)
    if cls.variant == "finite":
        table = cls.member_table(transcript.features)   # (T, |F|)
        sums = np.zeros((N, cls.size))
        np.add.at(sums, rows, table * resid[:, None])
        return BinAggregate(transcript.grid, cls, counts, sums, None)
    vectors = np.zeros((N, cls.dim))
    np.add.at(vectors, rows, transcript.features * resid[:, None])
    return BinAggregate(transcript.grid, cls, counts, None, vectors)


def _check_order(r: float) -> float:
    r = float(r)
    if r < 1.0:
        raise ValueError("the error order r must be at least 1")
    return r


def smcal(agg: BinAggregate, r: float) -> float:
    """Swap-multicalibration error: per-bin suprema, then the weighted sum."""
    r = _check_order(r)
    total = 0.0
    for i in range(agg.grid.N):
        n = int(agg.counts[i])
        if n == 0:
            continue
        row = agg.member_sums[i] if agg.member_sums is not None else agg.moment_vectors[i]
        value, _ = sup_correlation(agg.cls, row)
        total += n * (value / n) ** r
    return total


def _power_iteration(matrix: np.ndarray, tol: float = POWER_ITERATION_TOL, max_iter: int = 20000) -> float:
    """Top eigenvalue of a PSD matrix; deterministic start vector."""
    d = matrix.shape[0]
    vec = np.full(d, 1.0 / math.sqrt(d))
    vec += 1e-3 * np.cos(np.arange(d))  # break symmetry against unlucky starts
    vec /= np.linalg.norm(vec)
    last = 0.0
    for _ in range(max_iter):
        nxt = matrix @ vec
        norm = float(np.linalg.norm(nxt))
        if norm == 0.0:
            return 0.0
        vec = nxt / norm
        lam = float(vec @ matrix @ vec)
        if abs(lam - last) <= tol * max(1.0, abs(lam)):
            return lam
        last = lam
    return last


def _ascend_sphere(vectors: np.ndarray, scales: np.ndarray, r: float) -> float:
    """Lower-bound sup_{||theta||=1} sum_i scales_i * |<theta, v_i>| ** r."""
    d = vectors.shape[1]
    best = 0.0
    for restart in range(_ASCENT_RESTARTS):
        rng = np.random.default_rng(restart)
        theta = rng.standard_normal(d)
        theta /= np.linalg.norm(theta)
        for step in range(_ASCENT_STEPS):
            proj = vectors @ theta
            grad = (scales * r * np.abs(proj) ** (r - 1.0) * np.sign(proj)) @ vectors
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                break
            theta = theta + (0.5 / (1.0 + step) ** 0.5) * grad / gnorm
            theta /= np.linalg.norm(theta)
        proj = vectors @ theta
        best = max(best, float(scales @ np.abs(proj) ** r))
    return best


def mcal(agg: BinAggregate, r: float) -> float:
    """Multicalibration error: one test function shared across all bins.

    Exact for finite classes (scan) and for the linear class at r = 2
    (top-eigenvalue form).  For the linear class at any other r the
    returned value is a certified lower bound; see ``mcal_is_exact``.
    """
    r = _check_order(r)
    nonzero = agg.counts > 0
    if agg.member_sums is not None:
        n = agg.counts[nonzero].astype(np.float64)
        sums = agg.member_sums[nonzero]
        per_member = (n[:, None] ** (1.0 - r) * np.abs(sums) ** r).sum(axis=0)
        return float(per_member.max())
    n = agg.counts[nonzero].astype(np.float64)
    vectors = agg.moment_vectors[nonzero]
    if vectors.shape[0] == 0:
        return 0.0
    if r == 2.0:
        matrix = (vectors / n[:, None]).T @ vectors
        return _power_iteration(matrix)
    return _ascend_sphere(vectors, n ** (1.0 - r), r)


def mcal_is_exact(cls: HypothesisClass, r: float) -> bool:
    """Whether mcal is exact (vs a certified lower bound) for this class/r."""
    return cls.variant == "finite" or float(r) == 2.0


def cal(transcript: Transcript, prop: Property, r: float) -> float:
    """Plain calibration error: multicalibration against the class {1}."""
    return mcal(aggregate(transcript, prop, HypothesisClass.singleton()), r)
