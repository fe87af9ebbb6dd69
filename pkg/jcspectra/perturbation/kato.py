import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from jcspectra.constants import DEFAULT_ORDER_CAP, PROJECTOR_SIGN, VARIANT_PROJECTOR, Variant
from jcspectra.errors import OrderTooHigh
from jcspectra.model import ModelParams
from jcspectra.projectors import overlap_window, projector_block
from jcspectra.special_functions import laguerre

@dataclass(frozen=True)
class Composition:
    """Exponents (n_1, ..., n_k) of the reduced resolvents in one trace, summing to k - 1."""
    parts: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.parts)

def as_variant(variant) -> Variant:
    if isinstance(variant, Variant):
        return variant
    return Variant(str(variant).lower())

def compositions(k: int) -> list[Composition]:
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k}")

    def extend(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining,)
            return
        for first in range(remaining + 1):
            yield from extend(prefix + (first,), remaining - first, slots - 1)

    return [Composition(parts) for parts in extend((), k - 1, k)]

def count_compositions(k: int) -> int:
    """(2k-2)! / ((k-1)!)^2"""
    return math.comb(2 * k - 2, k - 1)

@dataclass(frozen=True)
class PerturbationFrame:
    """Certified index window around m with the transformed projector restricted to it."""
    m: int
    indices: np.ndarray
    position: int
    column: np.ndarray
    projector: np.ndarray
    offsets: np.ndarray

    def weights(self, power: int, omega: float) -> np.ndarray:
        """Diagonal of the reduced resolvent S^power in the window."""
        w = np.zeros(self.indices.size)
        if power == 0:
            w[self.position] = -1.0
        else:
            off = self.offsets != 0
            w[off] = 1.0 / (omega * self.offsets[off]) ** power
        return w

@lru_cache(maxsize=512)
def perturbation_frame(variant: Variant, m: int, params: ModelParams) -> PerturbationFrame:
    certificate = overlap_window(m, params)
    indices = certificate.indices
    projector = projector_block(VARIANT_PROJECTOR[variant], indices, indices, params)
    projector.flags.writeable = False
    offsets = (indices - m).astype(float)
    offsets.flags.writeable = False
    return PerturbationFrame(m, indices, certificate.position, certificate.column, projector, offsets)

def lambda0(m: int, params: ModelParams) -> float:
    return m * params.omega + params.omega0 - params.g**2 / params.omega

def lambda1(variant, m: int, params: ModelParams) -> float:
    variant = as_variant(variant)
    x = 4 * params.gamma**2
    diagonal = math.exp(-x / 2) * laguerre(m, 0, x)
    parity = 1.0 if m % 2 == 0 else -1.0
    sign = PROJECTOR_SIGN[VARIANT_PROJECTOR[variant]]
    return params.omega0 / 2 + sign * parity * params.omega0 / 2 * diagonal

def lambda2(variant, m: int, params: ModelParams) -> float:
    """(omega0^2 / 4 omega) sum_{k != m} P^{(m)}_k(2g)^2 / (m - k); the same for both variants."""
    frame = perturbation_frame(as_variant(variant), m, params)
    off = frame.offsets != 0
    total = np.sum(frame.column[off] ** 2 / -frame.offsets[off])
    return params.omega0**2 / (4 * params.omega) * float(total)

def lambda3(variant, m: int, params: ModelParams) -> float:
    frame = perturbation_frame(as_variant(variant), m, params)
    p = frame.projector
    u = frame.weights(1, params.omega) * p[:, frame.position]
    hops = float(u @ p @ u)
    diagonal = float(p[frame.position, frame.position] * (u @ u))
    return params.omega0**3 * (hops - diagonal)

def _trace(frame: PerturbationFrame, parts: tuple[int, ...], omega: float) -> float:
    # every composition of k-1 into k parts has a zero; rotate it to the end so the
    # trace collapses to -<m| P D(n_1) P ... D(n_{k-1}) P |m>
    zero = parts.index(0)
    rotated = parts[zero + 1:] + parts[: zero + 1]
    p = frame.projector
    w = p[:, frame.position].copy()
    for power in reversed(rotated[:-1]):
        w = p @ (frame.weights(power, omega) * w)
    return -float(w[frame.position])

def kato_terms(k: int, variant, m: int, params: ModelParams,
               order_cap: int = DEFAULT_ORDER_CAP) -> list[tuple[Composition, float]]:
    """Scaled trace terms ((-omega0)^k / k) tr[P S^{n_1} ... P S^{n_k}], one per composition."""
    if k > order_cap:
        raise OrderTooHigh(f"order {k} exceeds the cap {order_cap}")
    frame = perturbation_frame(as_variant(variant), m, params)
    prefactor = (-params.omega0) ** k / k
    return [(c, prefactor * _trace(frame, c.parts, params.omega)) for c in compositions(k)]

def kato_correction(k: int, variant, m: int, params: ModelParams,
                    order_cap: int = DEFAULT_ORDER_CAP) -> float:
    return math.fsum(value for _, value in kato_terms(k, variant, m, params, order_cap))
