"""The three bidirectional link-selection policies.

All policies consume the obtainable-SINR matrix.  Because that matrix is
a positive scaling of the SNR matrix, the selected antenna pairs are
identical either way.  Ties are broken lexicographically on antenna
indices so tests are deterministic (ties are measure-zero under
continuous fading).

Index convention: matrix rows are antennas at node A, columns antennas
at node B, all 0-based.  A LinkSelection stores the A->B link as
(tx antenna at A, rx antenna at B) and the B->A link as (tx antenna at
B, rx antenna at A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ModulationParams
from .errors import DegenerateSize, MatrixTooSmall
from .special import q_function


@dataclass(frozen=True)
class LinkSelection:
    ab_link: tuple[int, int]  # (tx at A, rx at B)
    ba_link: tuple[int, int]  # (tx at B, rx at A)

    def __post_init__(self):
        tx_a, _ = self.ab_link
        _, rx_a = self.ba_link
        tx_b, _ = self.ba_link
        _, rx_b = self.ab_link
        if tx_a == rx_a:
            raise ValueError(f"antenna {tx_a} at A used for both tx and rx")
        if tx_b == rx_b:
            raise ValueError(f"antenna {tx_b} at B used for both tx and rx")


@dataclass(frozen=True)
class SelectionOutcome:
    selection: LinkSelection
    gamma_first: float   # SINR of the link carrying the larger weight
    gamma_second: float
    comparisons_used: int


def _require_2x2(sinr: np.ndarray) -> tuple[int, int]:
    if sinr.ndim != 2 or sinr.shape[0] < 2 or sinr.shape[1] < 2:
        raise MatrixTooSmall(f"need an n_a x n_b matrix with n >= 2, got shape {sinr.shape}")
    return sinr.shape


def rate_map(gamma: float) -> float:
    return math.log2(1.0 + gamma)


def ser_map(gamma: float, mod: ModulationParams) -> float:
    return mod.alpha_mod * q_function(math.sqrt(mod.beta_mod * gamma))


def _feasible_pairs(n_a: int, n_b: int):
    # lexicographic on (i_t, j_r, i_r, j_t): the iteration order IS the tie-break
    for i_t in range(n_a):
        for j_r in range(n_b):
            for i_r in range(n_a):
                if i_r == i_t:
                    continue
                for j_t in range(n_b):
                    if j_t == j_r:
                        continue
                    yield i_t, j_r, i_r, j_t


def _exhaustive(sinr: np.ndarray, w: float, link_metric, maximize: bool) -> SelectionOutcome:
    n_a, n_b = _require_2x2(sinr)
    best = None
    best_pair = None
    for i_t, j_r, i_r, j_t in _feasible_pairs(n_a, n_b):
        obj = w * link_metric(sinr[i_t, j_r]) + (1.0 - w) * link_metric(sinr[i_r, j_t])
        if best is None or (obj > best if maximize else obj < best):
            best = obj
            best_pair = (i_t, j_r, i_r, j_t)
    i_t, j_r, i_r, j_t = best_pair
    return SelectionOutcome(
        selection=LinkSelection(ab_link=(i_t, j_r), ba_link=(j_t, i_r)),
        gamma_first=float(sinr[i_t, j_r]),
        gamma_second=float(sinr[i_r, j_t]),
        comparisons_used=comparison_count("exhaustive", n_a, n_b),
    )


def exhaustive_max_wsr(sinr: np.ndarray, w: float) -> SelectionOutcome:
    """Brute-force maximizer of w*R(gamma_ab) + (1-w)*R(gamma_ba)."""
    return _exhaustive(sinr, w, rate_map, maximize=True)


def exhaustive_min_wser(sinr: np.ndarray, w: float, mod: ModulationParams) -> SelectionOutcome:
    """Brute-force minimizer of w*SER(gamma_ab) + (1-w)*SER(gamma_ba).

    w weights the A->B link, the same convention as the rate criterion.
    """
    return _exhaustive(sinr, w, lambda g: ser_map(g, mod), maximize=False)


def serial_max(sinr: np.ndarray, w: float = 1.0) -> SelectionOutcome:
    """Two-step greedy selection.

    Step 1 picks the global matrix maximum; its row and column are
    pruned and step 2 picks the maximum of the remaining submatrix.
    The best link serves the direction with the larger weight (A->B
    when w >= 0.5).  The comparison tally counts one comparison per
    element examined, matching the published complexity accounting.
    """
    n_a, n_b = _require_2x2(sinr)
    comparisons = 0

    best1 = -math.inf
    pos1 = (0, 0)
    for i in range(n_a):
        for j in range(n_b):
            comparisons += 1
            if sinr[i, j] > best1:
                best1 = float(sinr[i, j])
                pos1 = (i, j)

    best2 = -math.inf
    pos2 = (0, 0)
    for i in range(n_a):
        if i == pos1[0]:
            continue
        for j in range(n_b):
            if j == pos1[1]:
                continue
            comparisons += 1
            if sinr[i, j] > best2:
                best2 = float(sinr[i, j])
                pos2 = (i, j)

    if w >= 0.5:
        first_pos, second_pos = pos1, pos2
    else:
        first_pos, second_pos = pos2, pos1
    selection = LinkSelection(
        ab_link=(first_pos[0], first_pos[1]),
        ba_link=(second_pos[1], second_pos[0]),
    )
    return SelectionOutcome(
        selection=selection,
        gamma_first=best1,
        gamma_second=best2,
        comparisons_used=comparisons,
    )


def weighted_combine_rate(gamma_first: float, gamma_second: float, w: float) -> float:
    """max(w,1-w)*R(gamma_first) + min(w,1-w)*R(gamma_second)."""
    return max(w, 1.0 - w) * rate_map(gamma_first) + min(w, 1.0 - w) * rate_map(gamma_second)


def weighted_combine_ser(
    gamma_first: float, gamma_second: float, w: float, mod: ModulationParams
) -> float:
    """max(w,1-w)*SER(gamma_first) + min(w,1-w)*SER(gamma_second)."""
    return max(w, 1.0 - w) * ser_map(gamma_first, mod) + min(w, 1.0 - w) * ser_map(
        gamma_second, mod
    )


def second_link_rank(sinr: np.ndarray, outcome: SelectionOutcome) -> int:
    """Rank (1 = largest) of the second selected link within the full matrix."""
    return 1 + int(np.count_nonzero(sinr > outcome.gamma_second))


def p_not_upper_bound(n_a: int, n_b: int) -> float:
    """Upper bound on the probability that Serial-Max misses the optimum."""
    nn = n_a * n_b
    if nn <= 2:
        raise DegenerateSize(f"bound needs n_a*n_b >= 3, got {nn}")
    return (n_a + n_b - 2) * (n_a + n_b - 3) / ((nn - 1) * (nn - 2))


def comparison_count(method: str, n_a: int, n_b: int) -> int:
    """Comparisons needed by a selection method on an n_a x n_b matrix."""
    if n_a < 2 or n_b < 2:
        raise MatrixTooSmall(f"need n_a, n_b >= 2, got ({n_a}, {n_b})")
    if method == "exhaustive":
        return n_a * n_b * (n_a - 1) * (n_b - 1) // 2
    if method == "serial_max":
        return 2 * n_a * n_b - n_a - n_b + 1
    raise ValueError(f"unknown method {method!r}")
