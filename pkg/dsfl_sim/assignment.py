#  Copyright The dsfl_sim Authors. All Rights Reserved.
#
#  Licensed under the Apache License, Version 2.0 (the "License").
#  You may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

UNASSIGNED = -1


def _finite_penalty(cost: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Replaces infinite entries by a penalty larger than any sum of finite entries the assignment can pick,
    so the solver first maximizes the number of feasible pairs and only then minimizes their cost.
    """
    finite = np.isfinite(cost)
    if not finite.any():
        return np.ones_like(cost), 1.0
    scale = float(np.abs(cost[finite]).max())
    penalty = (scale + 1.0) * (min(cost.shape) + 1) * 2.0
    return np.where(finite, cost, penalty), penalty


def one_to_one_assignment(cost: np.ndarray) -> np.ndarray:
    """
    Exact min-cost matching of rows to columns where every column is used at most once.
    Returns the column of every row, or -1 for rows left without a column (only when rows outnumber columns).
    """
    rows, cols = cost.shape
    result = np.full(rows, UNASSIGNED, dtype=int)
    if rows == 0 or cols == 0:
        return result
    matrix, _ = _finite_penalty(cost)
    row_ind, col_ind = linear_sum_assignment(matrix)
    result[row_ind] = col_ind
    return result


def capacitated_assignment(cost: np.ndarray, capacity: np.ndarray) -> np.ndarray:
    """
    Exact min-cost assignment of rows to columns where column j takes at most ``capacity[j]`` rows.
    Solved as a one-to-one matching against every column replicated once per unit of capacity.
    """
    rows, cols = cost.shape
    result = np.full(rows, UNASSIGNED, dtype=int)
    if rows == 0 or cols == 0:
        return result
    capacity = np.minimum(np.asarray(capacity, dtype=int), rows)
    if np.all(capacity >= rows) and np.all(np.isfinite(cost).any(axis=1)):
        # unconstrained: every row independently takes its cheapest column, lowest index on ties
        return np.argmin(cost, axis=1).astype(int)

    slots = np.repeat(np.arange(cols), capacity)
    if len(slots) == 0:
        return result
    matrix, _ = _finite_penalty(cost[:, slots])
    row_ind, slot_ind = linear_sum_assignment(matrix)
    result[row_ind] = slots[slot_ind]
    return result
