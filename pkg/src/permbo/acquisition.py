"""Acquisition functions: expected improvement and the Thompson-sampling QAP.

A weight vector sampled from the Kendall weight posterior induces the
linear objective w^T phi(pi). Arranging the weights into a strictly
upper-triangular matrix W turns its minimization into the quadratic
assignment problem min_P Tr(W P A P^T), where A holds +1 above and -1
below the diagonal; the trace equals sqrt(C(d,2)) * w^T phi(pi) for the
permutation with matrix P[i, pi(i)] = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .gp import GpModel, predict_batch
from .perm import Permutation, num_pairs

#: Below this predictive standard deviation EI is defined as zero.
EI_STD_FLOOR = 1e-12

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QapMatrices:
    """W strictly upper-triangular; A antisymmetric with sign(j - i) entries."""

    W: np.ndarray
    A: np.ndarray


def expected_improvement(m: GpModel, p: Permutation, incumbent: float) -> float:
    """Closed-form EI below the incumbent (minimization); always >= 0."""
    return float(expected_improvement_batch(m, p.values[None, :], incumbent)[0])


def expected_improvement_batch(
    m: GpModel, queries, incumbent: float
) -> np.ndarray:
    """Vectorized EI over many candidate permutations."""
    means, variances = predict_batch(m, queries)
    s = np.sqrt(variances)
    improve = incumbent - means
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(s > EI_STD_FLOOR, improve / s, 0.0)
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    ei = improve * ndtr(z) + s * pdf
    ei = np.where(s > EI_STD_FLOOR, ei, 0.0)
    return np.maximum(ei, 0.0)


def build_qap(w: np.ndarray, d: int) -> QapMatrices:
    """Arrange a C(d,2) weight vector into the QAP matrices (W, A).

    W[i, j] = w[pair_index(i, j)] for i < j, zero elsewhere; the induced
    objective Tr(W P A P^T) is sqrt(C(d,2)) times w^T phi(pi).
    """
    w = np.asarray(w, dtype=np.float64)
    m = num_pairs(d)
    if w.ndim != 1 or w.shape[0] != m:
        raise ValueError(f"weight vector must have length C({d},2)={m}, got {w.shape}")
    W = np.zeros((d, d))
    iu, ju = np.triu_indices(d, 1)
    W[iu, ju] = w
    j_idx, i_idx = np.meshgrid(np.arange(d), np.arange(d))
    A = np.sign(j_idx - i_idx).astype(np.float64)
    return QapMatrices(W=W, A=A)
