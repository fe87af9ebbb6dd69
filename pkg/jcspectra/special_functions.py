import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from jcspectra.constants import QUAD_MAX_POINTS, QUAD_MIN_POINTS, QUAD_TOL
from jcspectra.errors import (
    InvalidTruncation,
    NegativeArgument,
    NonConvergedQuadrature,
    NonPositiveOmega,
    NonPositiveX,
)

logger = logging.getLogger(__name__)

# recurrence values are renormalised once they pass this magnitude
_RESCALE = 1e150

def log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError(f"log_factorial needs n >= 0, got {n}")
    return float(gammaln(n + 1))

def _as_order(s) -> int:
    if int(s) != s:
        raise ValueError(f"Laguerre order must be an integer, got {s}")
    return int(s)

def laguerre_table(d_max: int, orders, x) -> tuple[np.ndarray, np.ndarray]:
    """Sign and log-magnitude of L_d^s(x) for every degree d <= d_max and every order s.

    Runs the ascending three-term recurrence
    (d+1) L_{d+1} = (2d+1+s-x) L_d - (d+s) L_{d-1}
    for all orders at once. Returns two arrays of shape (d_max + 1, len(orders)).
    `x` is a scalar or an array matching `orders`.
    """
    if d_max < 0:
        raise ValueError(f"degree must be >= 0, got {d_max}")
    orders = np.atleast_1d(np.asarray(orders, dtype=float))
    x = np.broadcast_to(np.asarray(x, dtype=float), orders.shape)
    if np.any(x < 0):
        raise NegativeArgument(f"Laguerre argument must be >= 0, got {x.min()}")

    sign = np.empty((d_max + 1, orders.size))
    log_abs = np.empty((d_max + 1, orders.size))
    sign[0] = 1.0
    log_abs[0] = 0.0
    prev = np.zeros(orders.size)
    cur = np.ones(orders.size)
    scale = np.zeros(orders.size)
    for d in range(d_max):
        prev, cur = cur, ((2 * d + 1 + orders - x) * cur - (d + orders) * prev) / (d + 1)
        big = np.abs(cur) > _RESCALE
        if big.any():
            factor = np.abs(cur[big])
            cur[big] /= factor
            prev[big] /= factor
            scale[big] += np.log(factor)
        sign[d + 1] = np.sign(cur)
        with np.errstate(divide="ignore"):
            log_abs[d + 1] = np.log(np.abs(cur)) + scale
    return sign, log_abs

def laguerre(n: int, s: int, x: float) -> float:
    if n < 0:
        raise ValueError(f"Laguerre degree must be >= 0, got {n}")
    sign, log_abs = laguerre_table(n, [_as_order(s)], x)
    return float(sign[n, 0] * np.exp(log_abs[n, 0]))

def laguerre_envelope(n: int, s: int, x: float) -> float:
    """Amplitude of the large-degree Laguerre asymptotic."""
    if n < 1:
        raise ValueError(f"asymptotic needs n >= 1, got {n}")
    if x <= 0:
        raise NonPositiveX(f"asymptotic needs x > 0, got {x}")
    log_amp = (-0.5 * math.log(math.pi) + (s / 2 - 0.25) * math.log(n)
               - (s / 2 + 0.25) * math.log(x) + x / 2)
    return math.exp(log_amp)

def laguerre_asymptotic(n: int, s: int, x: float) -> float:
    s = _as_order(s)
    phase = 2 * math.sqrt(n * x) - s * math.pi / 2 - math.pi / 4
    return laguerre_envelope(n, s, x) * math.cos(phase)

def _check_omega(omega: float):
    if not omega > 0:
        raise NonPositiveOmega(f"omega must be > 0, got {omega}")

def overlap_block(rows, cols, g: float, omega: float) -> np.ndarray:
    """P^{(m)}_n(g) for n in `rows` and m in `cols`; result[i, j] = P^{(cols[j])}_{rows[i]}.

    Elements below the diagonal (n > m) come from the sign symmetry
    P^{(m)}_n = (-1)^{m-n} P^{(n)}_m, so every Laguerre order used is nonnegative.
    """
    _check_omega(omega)
    n, m = np.meshgrid(np.asarray(rows, dtype=int), np.asarray(cols, dtype=int), indexing="ij")
    if g == 0:
        return (n == m).astype(float)

    gamma = g / omega
    x = gamma**2
    lo = np.minimum(n, m)
    s = np.abs(n - m)
    orders, order_pos = np.unique(s, return_inverse=True)
    order_pos = order_pos.reshape(s.shape)
    sign, log_abs = laguerre_table(int(lo.max()), orders, x)

    log_pref = 0.5 * (gammaln(lo + 1) - gammaln(lo + s + 1)) + s * math.log(gamma) - 0.5 * x
    values = sign[lo, order_pos] * np.exp(log_pref + log_abs[lo, order_pos])
    values[(n > m) & (s % 2 == 1)] *= -1.0
    return values

def displaced_overlap(m: int, n: int, g: float, omega: float) -> float:
    return float(overlap_block([n], [m], g, omega)[0, 0])

@dataclass(frozen=True)
class ContourOverlap:
    value: float
    imag_residue: float
    quad_points: int
    radius: float

def _log_integrand(m: int, n: int, c: float, x: np.ndarray) -> np.ndarray:
    # log of x * x^{m-1} (1/x - 1)^n exp(c/x); the extra x is the dx = i x dtheta factor
    out = m * np.log(x) + c / x
    if n:
        out = out + n * np.log(1.0 / x - 1.0)
    return out

def _contour_radius(m: int, n: int, c: float) -> float:
    """Radius of the integration circle that minimises the integrand's peak magnitude."""
    theta = 2 * np.pi * np.arange(256) / 256

    def peak(log_r):
        x = np.exp(log_r) * np.exp(1j * theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.nanmax(_log_integrand(m, n, c, x).real))

    radius = float(np.exp(minimize_scalar(peak, bounds=(-12.0, 6.0), method="bounded").x))
    # (1/x - 1) vanishes at x = 1
    if abs(radius - 1.0) < 1e-6:
        radius *= 1.01
    return radius

def _trapezoid(m, n, c, radius, points, log_prefactor) -> tuple[float, float]:
    theta = 2 * np.pi * np.arange(points) / points
    log_f = _log_integrand(m, n, c, radius * np.exp(1j * theta))
    peak = log_f.real.max()
    mean = np.mean(np.exp(log_f - peak))
    scale = math.exp(log_prefactor + peak)
    return scale * mean.real, scale * abs(mean.imag)

def contour_quadrature(m: int, n: int, g: float, omega: float,
                       quad_points: int = QUAD_MIN_POINTS) -> ContourOverlap:
    """P^{(m)}_n(g) from its contour-integral representation around the origin.

    e^{-c/2} sqrt(m!/n!) gamma^{n-m} (1/2 pi i) oint x^{m-1} (1/x - 1)^n e^{c/x} dx,
    gamma = g/omega, c = gamma^2, by the trapezoid rule on a circle; the point
    count doubles until two successive values agree to 1e-9.
    """
    _check_omega(omega)
    if not QUAD_MIN_POINTS <= quad_points <= QUAD_MAX_POINTS:
        raise ValueError(f"quad_points must be in [{QUAD_MIN_POINTS}, {QUAD_MAX_POINTS}], got {quad_points}")
    if g == 0:
        return ContourOverlap(float(m == n), 0.0, quad_points, 1.0)

    gamma = g / omega
    c = gamma**2
    log_prefactor = -c / 2 + 0.5 * (log_factorial(m) - log_factorial(n)) + (n - m) * math.log(gamma)
    radius = _contour_radius(m, n, c)

    points = quad_points
    value, residue = _trapezoid(m, n, c, radius, points, log_prefactor)
    while True:
        refined, residue = _trapezoid(m, n, c, radius, 2 * points, log_prefactor)
        points *= 2
        if abs(refined - value) <= QUAD_TOL:
            value = refined
            break
        value = refined
        if 2 * points > QUAD_MAX_POINTS:
            raise NonConvergedQuadrature(
                f"contour overlap ({m}, {n}) at g/omega={gamma} unstable at {points} points")
        logger.debug(f"Contour overlap ({m}, {n}): refining to {2 * points} points.")
    return ContourOverlap(value, residue, points, radius)

def displaced_overlap_contour(m: int, n: int, g: float, omega: float,
                              quad_points: int = 256) -> float:
    result = contour_quadrature(m, n, g, omega, quad_points)
    if result.imag_residue > 1e-10:
        logger.warning(f"Contour overlap ({m}, {n}) carries imaginary residue {result.imag_residue:.3e}.")
    return result.value

@dataclass(frozen=True)
class OverlapMatrix:
    """Truncated U(g): elements[n, m] = P^{(m)}_n."""
    n_basis: int
    coupling: float
    omega: float
    elements: np.ndarray
    m_guard: int
    orthogonality_defect: float

    def element(self, n: int, m: int) -> float:
        return float(self.elements[n, m])

    def column(self, m: int) -> np.ndarray:
        return self.elements[:, m]

def overlap_matrix(n_basis: int, g: float, omega: float, m_guard: int | None = None) -> OverlapMatrix:
    if n_basis < 2:
        raise InvalidTruncation(f"n_basis must be >= 2, got {n_basis}")
    m_guard = n_basis // 2 if m_guard is None else m_guard
    if not 0 <= m_guard < n_basis:
        raise InvalidTruncation(f"m_guard={m_guard} outside [0, {n_basis})")
    index = np.arange(n_basis)
    elements = overlap_block(index, index, g, omega)
    elements.flags.writeable = False
    trusted = elements[:, : m_guard + 1]
    gram = trusted.T @ trusted
    defect = float(np.max(np.abs(gram - np.eye(m_guard + 1))))
    return OverlapMatrix(n_basis, g, omega, elements, m_guard, defect)
