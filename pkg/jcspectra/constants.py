import os
import math
from enum import Enum
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

current_dir = Path(__file__).parent

CHECKS_GRID_PATH = current_dir / "checks/grid.yaml"

class Variant(Enum):
    H1 = "h1"
    H2 = "h2"

class MatrixLabel(Enum):
    H1 = "h1"
    H2 = "h2"
    A0 = "a0"

class ProjectorVariant(Enum):
    P1 = "p1"
    P2 = "p2"

class OutputFormat(Enum):
    CSV = "csv"
    JSON = "json"

class Command(Enum):
    SPECTRUM = "spectrum"
    OVERLAPS = "overlaps"
    PROJECTORS = "projectors"
    PERTURB = "perturb"
    ASYMPTOTICS = "asymptotics"
    SPLITTING = "splitting"
    VALIDATE = "validate"

class CheckStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"

VARIANT_PROJECTOR = {
    Variant.H1: ProjectorVariant.P1,
    Variant.H2: ProjectorVariant.P2,
}
# sign of the non-delta term in the transformed projectors
PROJECTOR_SIGN = {
    ProjectorVariant.P1: -1.0,
    ProjectorVariant.P2: 1.0,
}

PI_OVER_SQRT3 = math.pi / math.sqrt(3)
CONVERGENCE_THRESHOLD = math.sqrt(3) / (2 * math.pi)

# truncation
MAX_N_ENV = "JC_SPECTRA_MAX_N"
DEFAULT_MAX_N = 2**15
MIN_BASIS = 64
DENSE_MAX_N = 64
DEFAULT_TOL_ABS = 1e-10

# overlap windows
LOW_INDEX_BLOCK = 40
WINDOW_SLOPE = 8.0
WINDOW_PAD = 40
TAIL_TOL = 1e-12
MAX_WINDOW_DOUBLINGS = 6

# contour quadrature
QUAD_MIN_POINTS = 64
QUAD_MAX_POINTS = 2**16
QUAD_TOL = 1e-9

DEFAULT_ORDER_CAP = 5
DEFAULT_M0_HORIZON = 2000
RESONANCE_TOL = 1e-12

NUMBER_FORMAT = ".15g"

def get_max_n() -> int:
    """Truncation cap for converged spectra, overridable through the environment."""
    value = os.getenv(MAX_N_ENV)
    if value is None or not value.strip():
        return DEFAULT_MAX_N
    return int(value)
