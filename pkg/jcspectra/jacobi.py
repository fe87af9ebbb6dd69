import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal, solve_banded

from jcspectra.constants import DEFAULT_TOL_ABS, DENSE_MAX_N, MIN_BASIS, MatrixLabel, Variant, get_max_n
from jcspectra.errors import (
    BisectionStall,
    DimensionTooLarge,
    InvalidTruncation,
    NoConvergence,
    NotAnEigenvalue,
)
from jcspectra.model import ModelParams, Truncation

logger = logging.getLogger(__name__)

_MAX_BISECTION_STEPS = 200
_MAX_JACOBI_SWEEPS = 100

@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    offdiag: np.ndarray
    label: MatrixLabel | None = None

    def __post_init__(self):
        if self.offdiag.size != max(self.diag.size - 1, 0):
            raise InvalidTruncation(
                f"offdiag has {self.offdiag.size} entries for a {self.diag.size}-dimensional matrix")

    @property
    def n_basis(self) -> int:
        return self.diag.size

    def norm(self) -> float:
        """Infinity norm (largest absolute row sum)."""
        rows = np.abs(self.diag).copy()
        rows[:-1] += np.abs(self.offdiag)
        rows[1:] += np.abs(self.offdiag)
        return float(rows.max())

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    converged_upto: int
    truncation: Truncation | None
    sturm_certified: bool = True

def as_label(variant_or_label) -> MatrixLabel:
    if isinstance(variant_or_label, MatrixLabel):
        return variant_or_label
    if isinstance(variant_or_label, Variant):
        return MatrixLabel(variant_or_label.value)
    return MatrixLabel(str(variant_or_label).lower())

def build_matrix(variant_or_a0, params: ModelParams, n_basis: int) -> SymTridiagonal:
    if n_basis < 2:
        raise InvalidTruncation(f"n_basis must be >= 2, got {n_basis}")
    label = as_label(variant_or_a0)
    k = np.arange(n_basis)
    diag = params.omega0 + k * params.omega
    odd = (k % 2 == 1)
    # H1 carries the extra omega0 on odd indices, H2 on even ones
    if label is MatrixLabel.H1:
        diag = diag + params.omega0 * odd
    elif label is MatrixLabel.H2:
        diag = diag + params.omega0 * ~odd
    offdiag = params.g * np.sqrt(np.arange(1, n_basis, dtype=float))
    return SymTridiagonal(diag.astype(float), offdiag, label)

def sturm_count(t: SymTridiagonal, shifts) -> np.ndarray:
    """Number of eigenvalues of t below each shift, from the LDL^T pivot signs."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    e2 = t.offdiag**2
    pivmin = np.finfo(float).tiny * max(1.0, float(e2.max()) if e2.size else 1.0)
    q = t.diag[0] - shifts
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(int)
    for i in range(1, t.n_basis):
        q = t.diag[i] - shifts - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count

def _gershgorin(t: SymTridiagonal) -> tuple[float, float]:
    radius = np.zeros(t.n_basis)
    radius[:-1] += np.abs(t.offdiag)
    radius[1:] += np.abs(t.offdiag)
    return float(np.min(t.diag - radius)), float(np.max(t.diag + radius))

def eigenvalues_sturm(t: SymTridiagonal, lo: int, hi: int, tol_abs: float = 1e-12) -> np.ndarray:
    """Eigenvalues lo..hi (ascending) by simultaneous Sturm-sequence bisection."""
    if not 0 <= lo <= hi < t.n_basis:
        raise ValueError(f"index range [{lo}, {hi}] outside [0, {t.n_basis})")
    a, b = _gershgorin(t)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise BisectionStall("matrix entries are not finite")
    tol = max(tol_abs, 4 * np.finfo(float).eps * max(abs(a), abs(b), 1.0))
    index = np.arange(lo, hi + 1)
    left = np.full(index.size, a - tol)
    right = np.full(index.size, b + tol)
    for _ in range(_MAX_BISECTION_STEPS):
        active = (right - left) > tol
        if not active.any():
            break
        mid = 0.5 * (left + right)
        if np.any(active & ((mid <= left) | (mid >= right))):
            raise BisectionStall(f"bisection interval cannot shrink below {tol:.3e}")
        below = sturm_count(t, mid) > index
        right = np.where(active & below, mid, right)
        left = np.where(active & ~below, mid, left)
    else:
        raise BisectionStall(f"bisection did not reach {tol:.3e} in {_MAX_BISECTION_STEPS} steps")
    return 0.5 * (left + right)

def eigenvector_inverse_iteration(t: SymTridiagonal, lam: float, max_iter: int = 8) -> np.ndarray:
    norm = t.norm()
    threshold = 1e-8 * norm
    delta = 1e-12 * max(norm, 1.0)
    n = t.n_basis
    banded = np.zeros((3, n))
    banded[0, 1:] = t.offdiag
    banded[2, :-1] = t.offdiag
    shift = lam + delta

    v = np.ones(n) / math.sqrt(n)
    for _ in range(max_iter):
        banded[1] = t.diag - shift
        try:
            w = solve_banded((1, 1), banded, v)
        except LinAlgError:
            shift += delta
            continue
        v = w / np.linalg.norm(w)
        residual = np.linalg.norm(t.matvec(v) - lam * v)
        if residual <= threshold:
            lead = np.argmax(np.abs(v))
            return v if v[lead] > 0 else -v
    raise NotAnEigenvalue(f"{lam!r} is not an eigenvalue within {threshold:.3e} (residual floor not reached)")

def dense_eig_oracle(t: SymTridiagonal) -> SpectralResult:
    """Full eigensystem of a small matrix by cyclic Jacobi rotations.

    An off-diagonal entry is rotated away only while it exceeds eps relative to its two
    diagonal entries; the sweep that rotates nothing ends the iteration.
    """
    n = t.n_basis
    if n > DENSE_MAX_N:
        raise DimensionTooLarge(f"dense oracle limited to N <= {DENSE_MAX_N}, got {n}")
    a = t.to_dense()
    v = np.eye(n)
    eps = np.finfo(float).eps
    scale = max(float(np.linalg.norm(a)), np.finfo(float).tiny)
    # theta stays below 1/eps^2 above this floor
    floor = eps * eps * scale
    for _ in range(_MAX_JACOBI_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= floor:
            break
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= max(eps * math.sqrt(abs(a[p, p] * a[q, q])), floor):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                tan = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(tan * tan + 1)
                s = tan * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * col_p - s * col_q, s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * row_p - s * row_q, s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vec_p - s * vec_q, s * vec_p + c * vec_q
                rotated = True
        if not rotated:
            break
    else:
        raise NoConvergence(f"Jacobi rotations did not converge in {_MAX_JACOBI_SWEEPS} sweeps")
    order = np.argsort(np.diag(a), kind="stable")
    truncation = Truncation(n, n - 1, 1e-12) if n >= 2 else None
    return SpectralResult(np.diag(a)[order].copy(), v[:, order], n - 1, truncation)

def _lowest_eigenvalues(t: SymTridiagonal, top: int) -> np.ndarray:
    return eigvalsh_tridiagonal(t.diag, t.offdiag, select="i", select_range=(0, top))

def converged_spectrum(variant, params: ModelParams, m_max: int, tol_abs: float = DEFAULT_TOL_ABS,
                       max_n: int | None = None, with_vectors: bool = False) -> SpectralResult:
    """Eigenvalues 0..m_max, doubling the truncation until they are stable to tol_abs."""
    if m_max < 0:
        raise ValueError(f"m_max must be >= 0, got {m_max}")
    label = as_label(variant)
    cap = max_n or get_max_n()
    n = max(4 * m_max, MIN_BASIS)
    if 2 * n > cap:
        raise NoConvergence(f"initial truncation {n} for m_max={m_max} already exceeds cap {cap}")

    coarse = _lowest_eigenvalues(build_matrix(label, params, n), n // 2)
    while True:
        fine_t = build_matrix(label, params, 2 * n)
        fine = _lowest_eigenvalues(fine_t, 2 * n // 2)
        diff = np.abs(fine[: coarse.size] - coarse)
        if np.all(diff[: m_max + 1] <= tol_abs):
            break
        logger.info(f"{label.value}: N={n} -> {2 * n}, worst change {diff[: m_max + 1].max():.3e}")
        n *= 2
        if 2 * n > cap:
            raise NoConvergence(f"{label.value} spectrum up to m={m_max} not stable to {tol_abs} below N={cap}")
        coarse = fine

    failing = np.flatnonzero(diff > tol_abs)
    converged_upto = int(failing[0]) - 1 if failing.size else diff.size - 1
    eigenvalues = fine[: m_max + 1].copy()

    index = np.arange(m_max + 1)
    certified = bool(np.all(sturm_count(fine_t, eigenvalues - tol_abs) <= index)
                     and np.all(sturm_count(fine_t, eigenvalues + tol_abs) >= index + 1))
    if not certified:
        logger.warning(f"{label.value}: Sturm counts disagree with the converged eigenvalues.")

    vectors = None
    if with_vectors:
        vectors = np.column_stack([eigenvector_inverse_iteration(fine_t, lam) for lam in eigenvalues])
    truncation = Truncation.for_basis(2 * n, tol_abs)
    return SpectralResult(eigenvalues, vectors, converged_upto, truncation, certified)

def ladder_index(variant_or_a0, params: ModelParams, eigenvalue: float) -> int:
    """Nearest index on the unperturbed ladder (A0) or the large-index ladder (H1, H2)."""
    label = as_label(variant_or_a0)
    offset = params.omega0 if label is MatrixLabel.A0 else 1.5 * params.omega0
    position = (eigenvalue - offset + params.g**2 / params.omega) / params.omega
    return max(int(math.floor(position + 0.5)), 0)
