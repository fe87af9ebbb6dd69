import math
from dataclasses import dataclass, field

from jcspectra.constants import MIN_BASIS
from jcspectra.errors import (
    InvalidTruncation,
    NegativeCoupling,
    NegativeFrequency,
    NonFinite,
    NonPositiveOmega,
)

@dataclass(frozen=True)
class ModelParams:
    """Field frequency omega, atomic frequency omega0 and coupling g, in one energy unit.

    Build through `validate_params`; the derived ratio `q` and the
    convergence flag are filled in on construction.
    """
    omega: float
    omega0: float
    g: float
    q: float = field(init=False, compare=False)
    convergent: bool = field(init=False, compare=False)

    def __post_init__(self):
        q = 2 * self.omega0 * math.pi / (self.omega * math.sqrt(3))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "convergent", q <= 1.0 + math.ulp(1.0))

    @property
    def gamma(self) -> float:
        """Displacement g/omega of the shifted oscillator."""
        return self.g / self.omega

    @property
    def resonant(self) -> bool:
        return self.omega == self.omega0

    def replace(self, **changes) -> "ModelParams":
        values = {"omega": self.omega, "omega0": self.omega0, "g": self.g}
        values.update(changes)
        return validate_params(**values)

    def as_dict(self) -> dict:
        return {"omega": self.omega, "omega0": self.omega0, "g": self.g, "q": self.q}

def validate_params(omega, omega0, g) -> ModelParams:
    values = {"omega": omega, "omega0": omega0, "g": g}
    for name, value in values.items():
        try:
            values[name] = float(value)
        except (TypeError, ValueError):
            raise NonFinite(f"{name}={value!r} is not a number")
        if not math.isfinite(values[name]):
            raise NonFinite(f"{name}={value!r} is not finite")
    if values["omega"] <= 0:
        raise NonPositiveOmega(f"omega must be > 0, got {values['omega']}")
    if values["omega0"] < 0:
        raise NegativeFrequency(f"omega0 must be >= 0, got {values['omega0']}")
    if values["g"] < 0:
        raise NegativeCoupling(f"g must be >= 0, got {values['g']}")
    return ModelParams(**values)

@dataclass(frozen=True)
class Truncation:
    n_basis: int
    m_guard: int
    tol_abs: float

    def __post_init__(self):
        if not 0 < self.m_guard < self.n_basis:
            raise InvalidTruncation(
                f"need 0 < m_guard < n_basis, got m_guard={self.m_guard}, n_basis={self.n_basis}")
        if not self.tol_abs > 0:
            raise InvalidTruncation(f"tol_abs must be positive, got {self.tol_abs}")

    @classmethod
    def for_basis(cls, n_basis: int, tol_abs: float) -> "Truncation":
        return cls(n_basis=n_basis, m_guard=max(n_basis // 2, 1), tol_abs=tol_abs)

    @classmethod
    def for_index(cls, m_max: int, tol_abs: float) -> "Truncation":
        """Smallest default truncation trusted up to index m_max."""
        return cls.for_basis(max(4 * m_max, MIN_BASIS), tol_abs)
