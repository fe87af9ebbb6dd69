import math
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from jcspectra.constants import (
    LOW_INDEX_BLOCK,
    MAX_WINDOW_DOUBLINGS,
    PROJECTOR_SIGN,
    TAIL_TOL,
    WINDOW_PAD,
    WINDOW_SLOPE,
    ProjectorVariant,
)
from jcspectra.errors import InvalidTruncation, TailNotConverged
from jcspectra.model import ModelParams
from jcspectra.special_functions import displaced_overlap, overlap_block

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class WindowCertificate:
    """Index window around m holding all but `dropped_mass` of sum_k P^{(m)}_k(2g)^2 = 1."""
    m: int
    indices: np.ndarray
    half_width: int
    dropped_mass: float
    column: np.ndarray

    @property
    def position(self) -> int:
        """Position of m inside `indices`."""
        return int(np.searchsorted(self.indices, self.m))

@dataclass(frozen=True)
class ProjectorMatrix:
    variant: ProjectorVariant
    indices: np.ndarray
    elements: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.indices.size

def as_projector(variant) -> ProjectorVariant:
    if isinstance(variant, ProjectorVariant):
        return variant
    return ProjectorVariant(str(variant).lower())

def default_half_width(m: int, params: ModelParams) -> int:
    return math.ceil(WINDOW_SLOPE * math.sqrt(max(m, 1)) * params.gamma + WINDOW_PAD)

def window_indices(m: int, half_width: int) -> np.ndarray:
    low = np.arange(LOW_INDEX_BLOCK)
    band = np.arange(max(0, m - half_width), m + half_width + 1)
    return np.union1d(low, band)

@lru_cache(maxsize=2048)
def overlap_window(m: int, params: ModelParams, tail_tol: float = TAIL_TOL) -> WindowCertificate:
    half_width = default_half_width(m, params)
    for _ in range(MAX_WINDOW_DOUBLINGS + 1):
        indices = window_indices(m, half_width)
        column = overlap_block(indices, [m], 2 * params.g, params.omega)[:, 0]
        dropped = 1.0 - float(column @ column)
        if dropped <= tail_tol:
            if dropped < -1e-10:
                logger.warning(f"Window at m={m} retains {1 - dropped:.12f} > 1 of the overlap mass.")
            indices.flags.writeable = False
            column.flags.writeable = False
            return WindowCertificate(m, indices, half_width, max(dropped, 0.0), column)
        logger.debug(f"Window at m={m}: dropped mass {dropped:.3e}, widening to {2 * half_width}.")
        half_width *= 2
    raise TailNotConverged(f"overlap window around m={m} still drops {dropped:.3e} > {tail_tol}")

def projector_block(variant, rows, cols, params: ModelParams) -> np.ndarray:
    """Elements P^{(v)}_{k,m} = delta/2 -+ (-1)^k/2 P^{(m)}_k(2g) for k in rows, m in cols."""
    variant = as_projector(variant)
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    parity = np.where(rows % 2 == 0, 1.0, -1.0)[:, None]
    delta = (rows[:, None] == cols[None, :]).astype(float)
    overlaps = overlap_block(rows, cols, 2 * params.g, params.omega)
    return 0.5 * delta + PROJECTOR_SIGN[variant] * 0.5 * parity * overlaps

def projector_element(variant, k: int, m: int, params: ModelParams) -> float:
    variant = as_projector(variant)
    parity = 1.0 if k % 2 == 0 else -1.0
    overlap = displaced_overlap(m, k, 2 * params.g, params.omega)
    return 0.5 * (k == m) + PROJECTOR_SIGN[variant] * 0.5 * parity * overlap

def projector_matrix(variant, params: ModelParams, n_basis: int) -> ProjectorMatrix:
    indices = np.arange(n_basis)
    return ProjectorMatrix(as_projector(variant), indices, projector_block(variant, indices, indices, params))

def projector_window(variant, m: int, params: ModelParams) -> ProjectorMatrix:
    indices = overlap_window(m, params).indices
    return ProjectorMatrix(as_projector(variant), indices, projector_block(variant, indices, indices, params))

def _direct_sums(variant, cols, params: ModelParams, n_sum: int) -> np.ndarray:
    variant = as_projector(variant)
    overlaps = overlap_block(np.arange(n_sum), cols, params.g, params.omega)
    parity = 1 if variant is ProjectorVariant.P1 else 0
    kept = overlaps[np.arange(n_sum) % 2 == parity]
    if kept.shape[0]:
        last = float(np.max(np.abs(kept[-1]))) ** 2
        if last > 1e-12:
            raise TailNotConverged(f"last retained parity term {last:.3e} exceeds 1e-12 at n_sum={n_sum}")
    return kept.T @ kept

def projector_direct_matrix(variant, params: ModelParams, k_max: int, n_sum: int | None = None) -> np.ndarray:
    """Parity sums sum_n P^{(k)}_n(g) P^{(m)}_n(g) (n odd for P1, even for P2), all k, m <= k_max."""
    n_sum = 4 * k_max + 200 if n_sum is None else n_sum
    return _direct_sums(variant, np.arange(k_max + 1), params, n_sum)

def projector_direct_sum(variant, k: int, m: int, params: ModelParams, n_sum: int | None = None) -> float:
    n_sum = 4 * max(k, m) + 200 if n_sum is None else n_sum
    return float(_direct_sums(variant, [k, m], params, n_sum)[0, 1])

def bu_identity_defect(params: ModelParams, n_basis: int, window: int) -> float:
    """Max elementwise defect of (B U(2g))^2 - E over the top-left window block."""
    if window > n_basis / 2:
        raise InvalidTruncation(f"window {window} exceeds n_basis/2 = {n_basis / 2}")
    index = np.arange(n_basis)
    parity = np.where(index % 2 == 0, 1.0, -1.0)
    bu = parity[:, None] * overlap_block(index, index, 2 * params.g, params.omega)
    square = bu[:window, :] @ bu[:, :window]
    return float(np.max(np.abs(square - np.eye(window))))

def idempotency_defect(variant, params: ModelParams, n_basis: int, window: int) -> float:
    if window > n_basis / 2:
        raise InvalidTruncation(f"window {window} exceeds n_basis/2 = {n_basis / 2}")
    p = projector_matrix(variant, params, n_basis).elements
    return float(np.max(np.abs(p[:window, :] @ p[:, :window] - p[:window, :window])))
