"""Transducer alignment-lattice likelihood, exact logit gradient, and a brute-force oracle.

The conditional probability of a label sequence given T' encoder states is the
sum over all alignments: interleavings of the U labels (in order) with T'
blanks, ending in a blank. The dynamic program below computes it on the
T' x (U+1) lattice, sweeping anti-diagonals so each wavefront is one batched
vector step. All arithmetic stays in the log domain; -inf marks unreachable
nodes and never turns into NaN.

Node convention (0-based): at node (t, u) the model has consumed t blanks and
emitted the first u labels. `label_logprob[t, u]` is the log probability of
emitting label u+1 there, `blank_logprob[t, u]` of consuming frame t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .numerics import NEG_INF, log_softmax, log_sum_exp

BLANK_ID = 0

# Exhaustive enumeration blows up combinatorially; these guards keep the
# oracle usable only where it is actually checkable.
BRUTE_FORCE_MAX_TIME = 6
BRUTE_FORCE_MAX_LABELS = 4


@dataclass(frozen=True)
class LogitLattice:
    """Raw joint-network outputs over the decoding lattice: (T', U+1, V)."""

    logits: np.ndarray

    def __post_init__(self):
        if self.logits.ndim != 3:
            raise ValueError(f"logit lattice must be 3-D, got shape {self.logits.shape}")
        if self.logits.shape[0] < 1:
            raise ValueError("logit lattice needs at least one time step")
        if self.logits.shape[2] < 2:
            raise ValueError("vocabulary must contain blank plus at least one label")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logit lattice contains non-finite values")

    @property
    def time_steps(self) -> int:
        return self.logits.shape[0]

    @property
    def target_len(self) -> int:
        return self.logits.shape[1] - 1

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[2]


@dataclass(frozen=True)
class LossGrid:
    """Per-node label/blank log probabilities; shapes (T', U) and (T', U+1)."""

    label_logprob: np.ndarray
    blank_logprob: np.ndarray

    @property
    def time_steps(self) -> int:
        return self.blank_logprob.shape[0]

    @property
    def target_len(self) -> int:
        return self.blank_logprob.shape[1] - 1


def _validate_target(lattice: LogitLattice, target: Sequence[int]) -> np.ndarray:
    target = np.asarray(target, dtype=np.int64)
    if target.ndim != 1:
        raise ValueError("target must be a flat token id sequence")
    if target.shape[0] != lattice.target_len:
        raise ValueError(
            f"target length {target.shape[0]} does not match lattice target_len "
            f"{lattice.target_len}")
    if np.any(target == BLANK_ID):
        raise ValueError("target must not contain the blank id")
    if np.any(target < 0) or np.any(target >= lattice.vocab_size):
        raise ValueError("target ids out of vocabulary range")
    return target


def build_loss_grid(lattice: LogitLattice, target: Sequence[int]) -> LossGrid:
    """Log-softmax the lattice and gather per-node label/blank log probabilities."""
    target = _validate_target(lattice, target)
    logprobs = log_softmax(lattice.logits, axis=-1)
    blank = logprobs[:, :, BLANK_ID]
    if target.size:
        label = logprobs[:, :-1, :][:, np.arange(target.size), target]
    else:
        label = np.zeros((lattice.time_steps, 0))
    return LossGrid(label_logprob=label, blank_logprob=blank)


def alpha_table(grid: LossGrid) -> np.ndarray:
    """Forward table: alpha[t, u] = log P(consume t frames, emit u labels)."""
    t_len, u_len = grid.blank_logprob.shape
    y, b = grid.label_logprob, grid.blank_logprob
    alpha = np.full((t_len, u_len), NEG_INF)
    alpha[0, 0] = 0.0
    for s in range(1, t_len + u_len - 1):
        ts = np.arange(max(0, s - u_len + 1), min(t_len - 1, s) + 1)
        us = s - ts
        from_blank = np.full(ts.shape, NEG_INF)
        m = ts > 0
        from_blank[m] = alpha[ts[m] - 1, us[m]] + b[ts[m] - 1, us[m]]
        from_label = np.full(ts.shape, NEG_INF)
        m = us > 0
        from_label[m] = alpha[ts[m], us[m] - 1] + y[ts[m], us[m] - 1]
        alpha[ts, us] = np.logaddexp(from_blank, from_label)
    return alpha


def beta_table(grid: LossGrid) -> np.ndarray:
    """Backward table: beta[t, u] = log P(finish from (t, u)), final blank included."""
    t_len, u_len = grid.blank_logprob.shape
    y, b = grid.label_logprob, grid.blank_logprob
    beta = np.full((t_len, u_len), NEG_INF)
    beta[t_len - 1, u_len - 1] = b[t_len - 1, u_len - 1]
    for s in range(t_len + u_len - 3, -1, -1):
        ts = np.arange(max(0, s - u_len + 1), min(t_len - 1, s) + 1)
        us = s - ts
        via_blank = np.full(ts.shape, NEG_INF)
        m = ts < t_len - 1
        via_blank[m] = beta[ts[m] + 1, us[m]] + b[ts[m], us[m]]
        via_label = np.full(ts.shape, NEG_INF)
        m = us < u_len - 1
        via_label[m] = beta[ts[m], us[m] + 1] + y[ts[m], us[m]]
        beta[ts, us] = np.logaddexp(via_blank, via_label)
    return beta


def forward_log_likelihood(grid: LossGrid) -> float:
    alpha = alpha_table(grid)
    return float(alpha[-1, -1] + grid.blank_logprob[-1, -1])


def backward_log_likelihood(grid: LossGrid) -> float:
    return float(beta_table(grid)[0, 0])


def loss_and_logit_gradient(lattice: LogitLattice,
                            target: Sequence[int]) -> tuple[float, np.ndarray]:
    """Negative log-likelihood and its exact gradient w.r.t. the raw logits.

    Gradient rows at nodes unreachable from the start or the end of the
    lattice come out exactly zero (their edge posteriors vanish).
    """
    target = _validate_target(lattice, target)
    grid = build_loss_grid(lattice, target)
    t_len, u_len = grid.blank_logprob.shape
    alpha = alpha_table(grid)
    beta = beta_table(grid)
    log_like = float(alpha[-1, -1] + grid.blank_logprob[-1, -1])
    if not np.isfinite(log_like):
        raise ValueError("target sequence has zero probability under the lattice")

    # Posterior of passing through each node, times the local softmax.
    occupancy = np.exp(alpha + beta - log_like)
    probs = np.exp(log_softmax(lattice.logits, axis=-1))
    grad = probs * occupancy[:, :, None]

    # Blank edges leave (t, u) for (t+1, u); the final node's blank terminates.
    beta_after_blank = np.full((t_len, u_len), NEG_INF)
    beta_after_blank[:-1, :] = beta[1:, :]
    beta_after_blank[-1, -1] = 0.0
    grad[:, :, BLANK_ID] -= np.exp(
        alpha + grid.blank_logprob + beta_after_blank - log_like)

    # Label edges leave (t, u) for (t, u+1).
    if target.size:
        label_post = np.exp(
            alpha[:, :-1] + grid.label_logprob + beta[:, 1:] - log_like)
        for u, token in enumerate(target):
            grad[:, u, token] -= label_post[:, u]

    return -log_like, grad


def enumerate_alignments(time_steps: int, num_labels: int) -> Iterator[tuple[int, ...]]:
    """Yield every alignment as the tuple of slot indices holding labels.

    An alignment has time_steps + num_labels slots; the last slot is always
    the terminating blank, so labels occupy `num_labels` of the first
    time_steps + num_labels - 1 slots. The count is
    C(time_steps + num_labels - 1, num_labels).
    """
    if time_steps < 1:
        raise ValueError("need at least one time step")
    total = time_steps + num_labels
    yield from combinations(range(total - 1), num_labels)


def brute_force_log_likelihood(lattice: LogitLattice, target: Sequence[int]) -> float:
    """Sum path probabilities over every alignment explicitly (small lattices only)."""
    target = _validate_target(lattice, target)
    t_len, u_len = lattice.time_steps, lattice.target_len
    if t_len > BRUTE_FORCE_MAX_TIME or u_len > BRUTE_FORCE_MAX_LABELS:
        raise ValueError(
            f"brute force limited to T'<={BRUTE_FORCE_MAX_TIME}, "
            f"U<={BRUTE_FORCE_MAX_LABELS}; got T'={t_len}, U={u_len}")
    grid = build_loss_grid(lattice, target)
    path_scores = []
    for label_slots in enumerate_alignments(t_len, u_len):
        slots = set(label_slots)
        t = u = 0
        score = 0.0
        for slot in range(t_len + u_len):
            if slot in slots:
                score += grid.label_logprob[t, u]
                u += 1
            else:
                score += grid.blank_logprob[t, u]
                t += 1
        path_scores.append(score)
    assert len(path_scores) == math.comb(t_len + u_len - 1, u_len)
    return log_sum_exp(path_scores)
