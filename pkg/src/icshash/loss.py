"""Training objective over relaxed codes.

A relaxed code is the encoder output in (0, 1)^K. Its distance to one
center is the binary cross entropy between the code and the center
mapped to {0, 1}; a sample's weighted distance is the convex
combination of its per-center distances under the sample's weight
vector. The total objective is

    J = J_central + gamma * J_quantization + lam * sum_i R(w_i)

where J_central turns weighted distances into a log-likelihood through
an adaptive sigmoid, the quantization term pushes relaxed bits toward
0/1, and R is the entropy of the weights (a constant while codes are
optimized, reported for completeness).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .centers import HashCenterSet
from .errors import ConfigError
from .weights import entropy_regularizer

# Relaxed codes are clamped into (CODE_EPS, 1 - CODE_EPS) before any
# log; encoder squashing can saturate all the way to 0/1.
CODE_EPS = 1e-7

AGGREGATIONS = ("per-image", "per-center")


@dataclass
class LossConfig:
    """beta: sigmoid bandwidth (<= 1 keeps gradients alive);
    gamma: quantization weight; lam: entropy weight;
    aggregation: apply the sigmoid to each sample's total weighted
    distance ("per-image") or to each weighted per-center distance
    separately ("per-center")."""

    beta: float = 0.1
    gamma: float = 0.05
    lam: float = 0.01
    aggregation: str = "per-image"
    weight_floor: float = 1e-8

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


@dataclass(frozen=True)
class CenterAssignment:
    """The centers attached to one sample: the indices of its positive
    labels (ascending) and the same centers mapped to {0, 1}."""

    center_indices: np.ndarray  # (c,) int
    centers01: np.ndarray  # (c, K) float64 in {0, 1}


def assignment_for_labels(center_set: HashCenterSet, labels: Sequence[int]) -> CenterAssignment:
    """Build the assignment for a 0/1 label vector of length M."""
    labels = np.asarray(labels)
    if labels.shape != (center_set.m_labels,):
        raise ConfigError(
            f"label vector length {labels.shape} does not match "
            f"M={center_set.m_labels}"
        )
    idx = np.flatnonzero(labels)
    if idx.size == 0:
        raise ValueError("sample has no positive label")
    centers01 = (center_set.centers[idx].astype(np.float64) + 1.0) / 2.0
    return CenterAssignment(idx, centers01)


def clamp_code(b: Sequence[float]) -> np.ndarray:
    return np.clip(np.asarray(b, dtype=np.float64), CODE_EPS, 1.0 - CODE_EPS)


def bce_distance(b: Sequence[float], center01: Sequence[float]) -> float:
    """Nonnegative cross-entropy distance of a relaxed code to one
    center given in {0, 1}; equals K*log 2 at b = 0.5."""
    b = clamp_code(b)
    v = np.asarray(center01, dtype=np.float64)
    if b.shape != v.shape:
        raise ValueError(f"code/center length mismatch: {b.shape} vs {v.shape}")
    return float(-np.sum(v * np.log(b) + (1.0 - v) * np.log(1.0 - b)))


def distance_vector(b: Sequence[float], assignment: CenterAssignment) -> np.ndarray:
    """BCE distance of one code to each of the sample's centers."""
    b = clamp_code(b)
    v = assignment.centers01
    if b.shape != (v.shape[1],):
        raise ValueError(f"code length {b.shape} does not match centers {v.shape}")
    return -(v @ np.log(b) + (1.0 - v) @ np.log(1.0 - b))


def weighted_distance(b, assignment: CenterAssignment, w) -> float:
    """Convex combination of per-center BCE distances under w."""
    w = np.asarray(w, dtype=np.float64)
    d = distance_vector(b, assignment)
    if w.shape != d.shape:
        raise ValueError(f"weights {w.shape} do not match {d.shape[0]} centers")
    return float(np.dot(w, d))


def central_likelihood(omega: float, beta: float) -> float:
    """1 / (1 + exp(beta * omega)); strictly decreasing in omega,
    overflow-safe for large arguments."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return float(expit(-beta * omega))


def _weighted_distances(codes, assignments, weights):
    out = np.empty(len(assignments))
    for i, (a, w) in enumerate(zip(assignments, weights)):
        out[i] = weighted_distance(codes[i], a, w)
    return out


def central_loss(codes, assignments, weights, cfg: LossConfig) -> float:
    """Negative log-likelihood of the batch's weighted distances.

    per-image: sum_i softplus(beta * omega_i);
    per-center: sum_i sum_j softplus(beta * w_ij * d_ij).
    """
    n = len(assignments)
    if n == 0:
        raise ValueError("empty batch")
    if cfg.aggregation == "per-image":
        omegas = _weighted_distances(codes, assignments, weights)
        return float(np.sum(np.logaddexp(0.0, cfg.beta * omegas)))
    total = 0.0
    for i, (a, w) in enumerate(zip(assignments, weights)):
        d = distance_vector(codes[i], a)
        total += float(np.sum(np.logaddexp(0.0, cfg.beta * np.asarray(w) * d)))
    return total


def quantization_loss(codes) -> float:
    """sum over bits of log cosh(|2b - 1| - 1); zero exactly when every
    bit sits at 0 or 1, maximal at b = 0.5."""
    b = clamp_code(np.atleast_2d(np.asarray(codes, dtype=np.float64)))
    if b.size == 0:
        raise ValueError("empty batch")
    u = np.abs(2.0 * b - 1.0) - 1.0
    return float(np.sum(np.log(np.cosh(u))))


def total_loss(codes, assignments, weights, cfg: LossConfig):
    """Full objective and its decomposition.

    Returns (J, parts) with parts keyed "central", "quantization",
    "entropy"; J recombines them exactly.
    """
    j_central = central_loss(codes, assignments, weights, cfg)
    j_quant = quantization_loss(codes)
    entropy = float(
        sum(entropy_regularizer(w, cfg.weight_floor) for w in weights)
    )
    total = j_central + cfg.gamma * j_quant + cfg.lam * entropy
    return total, {
        "central": j_central,
        "quantization": j_quant,
        "entropy": entropy,
    }


def _bce_grad_wrt_code(b, centers01, w):
    # d/db of sum_j w_j * bce(b, v_j) = sum_j w_j * (b - v_j) / (b (1 - b))
    w = np.asarray(w, dtype=np.float64)
    diff = w @ (b[None, :] - centers01)
    return diff / (b * (1.0 - b))


def loss_gradient_wrt_codes(codes, assignments, weights, cfg: LossConfig) -> np.ndarray:
    """Analytic dJ/db for every sample, weights held fixed.

    The quantization term uses subgradient 0 at the kink b = 0.5.
    """
    codes = np.atleast_2d(np.asarray(codes, dtype=np.float64))
    n = len(assignments)
    grads = np.empty((n, codes.shape[1]))
    for i, (a, w) in enumerate(zip(assignments, weights)):
        b = clamp_code(codes[i])
        if cfg.aggregation == "per-image":
            omega = weighted_distance(b, a, w)
            scale = cfg.beta * expit(cfg.beta * omega)
            g = scale * _bce_grad_wrt_code(b, a.centers01, w)
        else:
            d = distance_vector(b, a)
            w_arr = np.asarray(w, dtype=np.float64)
            scales = cfg.beta * w_arr * expit(cfg.beta * w_arr * d)
            per_bit = (b[None, :] - a.centers01) / (b * (1.0 - b))[None, :]
            g = scales @ per_bit
        s = 2.0 * b - 1.0
        g = g + cfg.gamma * 2.0 * np.sign(s) * np.tanh(np.abs(s) - 1.0)
        grads[i] = g
    return grads
